#pragma once

#include <nlohmann/json.hpp>

#include "feedtriage/domain.hpp"

namespace feedtriage {

// JSON forms shared by the store, the HTTP API and the report writers.
// Labels and explanations are keyed by canonical category name; a failed
// label serializes as null.

void to_json(nlohmann::json& j, const FeedbackRecord& r);
void from_json(const nlohmann::json& j, FeedbackRecord& r);

void to_json(nlohmann::json& j, const CategoryVector& v);
void from_json(const nlohmann::json& j, CategoryVector& v);

void to_json(nlohmann::json& j, const OrganizerAnnotation& a);

}  // namespace feedtriage
