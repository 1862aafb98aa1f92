#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace feedtriage::csv {

/// RFC 4180 reader: quoted fields, doubled quotes, embedded newlines, CRLF.
class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    /// Next record, or nullopt at end of input. `line()` is the 1-based line
    /// on which the returned record started.
    std::optional<std::vector<std::string>> next();
    [[nodiscard]] std::size_t line() const noexcept { return record_line_; }

private:
    std::istream& in_;
    std::size_t current_line_ = 1;
    std::size_t record_line_ = 0;
};

/// Quotes a field when it contains a separator, quote or newline.
std::string escape(std::string_view field);

std::string join_row(const std::vector<std::string>& fields);

}  // namespace feedtriage::csv
