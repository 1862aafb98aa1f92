#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace feedtriage {

/// First balanced `{...}` in `raw` that parses as a JSON object. Leading
/// prose and code fences are skipped; later objects are ignored.
std::optional<nlohmann::json> extract_first_json_object(std::string_view raw);

struct LabelResponse {
    bool label = false;
    std::string explanation;

    bool operator==(const LabelResponse&) const = default;
};

/// Reads `expected_field` (boolean) and `explanation` (string, optional)
/// from the first JSON object in `raw`. Throws ParseError carrying `raw`.
LabelResponse parse_label_response(std::string_view raw, std::string_view expected_field);

}  // namespace feedtriage
