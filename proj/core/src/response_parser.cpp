#include "feedtriage/response_parser.hpp"

#include "feedtriage/errors.hpp"

namespace feedtriage {

namespace {

// End index (inclusive) of the object opening at `start`, tracking strings
// so that braces inside them do not count.
std::optional<std::size_t> matching_brace(std::string_view s, std::size_t start) {
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = start; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}' && --depth == 0) return i;
    }
    return std::nullopt;
}

}  // namespace

std::optional<nlohmann::json> extract_first_json_object(std::string_view raw) {
    for (auto pos = raw.find('{'); pos != std::string_view::npos; pos = raw.find('{', pos + 1)) {
        const auto end = matching_brace(raw, pos);
        if (!end) continue;
        auto parsed = nlohmann::json::parse(raw.substr(pos, *end - pos + 1), nullptr, /*allow_exceptions=*/false);
        if (!parsed.is_discarded() && parsed.is_object()) return parsed;
    }
    return std::nullopt;
}

LabelResponse parse_label_response(std::string_view raw, std::string_view expected_field) {
    const auto object = extract_first_json_object(raw);
    if (!object) throw ParseError("no JSON object in backend reply", std::string(raw));

    const auto field = object->find(std::string(expected_field));
    if (field == object->end())
        throw ParseError("reply is missing field '" + std::string(expected_field) + "'", std::string(raw));
    if (!field->is_boolean())
        throw ParseError("field '" + std::string(expected_field) + "' is not a boolean", std::string(raw));

    LabelResponse out{field->get<bool>(), {}};
    if (auto it = object->find("explanation"); it != object->end() && it->is_string()) out.explanation = it->get<std::string>();
    return out;
}

}  // namespace feedtriage
