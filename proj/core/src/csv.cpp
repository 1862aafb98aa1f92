#include "feedtriage/csv.hpp"

#include "feedtriage/errors.hpp"

namespace feedtriage::csv {

std::optional<std::vector<std::string>> Reader::next() {
    std::vector<std::string> fields;
    std::string field;
    bool in_quotes = false;
    bool any = false;
    record_line_ = current_line_;

    for (int ch = in_.get(); ch != std::char_traits<char>::eof(); ch = in_.get()) {
        any = true;
        const char c = static_cast<char>(ch);
        if (in_quotes) {
            if (c == '"') {
                if (in_.peek() == '"') {
                    in_.get();
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++current_line_;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                break;
            case ',':
                fields.push_back(std::move(field));
                field.clear();
                break;
            case '\r':
                break;
            case '\n':
                ++current_line_;
                fields.push_back(std::move(field));
                return fields;
            default:
                field.push_back(c);
        }
    }
    if (in_quotes) throw ValidationError("unterminated quoted field starting on line " + std::to_string(record_line_));
    if (!any) return std::nullopt;
    fields.push_back(std::move(field));
    return fields;
}

std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string join_row(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(',');
        out += escape(fields[i]);
    }
    return out;
}

}  // namespace feedtriage::csv
