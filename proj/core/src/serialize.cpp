#include "feedtriage/serialize.hpp"

#include "feedtriage/errors.hpp"

namespace feedtriage {

using nlohmann::json;

void to_json(json& j, const FeedbackRecord& r) {
    j = json{
        {"record_id", r.record_id},
        {"trip_id", r.trip_id},
        {"donor_id", r.donor_id},
        {"donor_name", r.donor_name},
        {"recipient_id", r.recipient_id},
        {"recipient_name", r.recipient_name},
        {"created_at", format_timestamp(r.created_at)},
        {"rating", r.rating ? json(*r.rating) : json(nullptr)},
        {"comment", r.comment},
    };
}

void from_json(const json& j, FeedbackRecord& r) {
    r.record_id = j.at("record_id").get<std::string>();
    r.trip_id = j.value("trip_id", "");
    r.donor_id = j.at("donor_id").get<std::string>();
    r.donor_name = j.value("donor_name", "");
    r.recipient_id = j.at("recipient_id").get<std::string>();
    r.recipient_name = j.value("recipient_name", "");
    r.created_at = parse_timestamp(j.at("created_at").get<std::string>());
    r.rating.reset();
    if (auto it = j.find("rating"); it != j.end() && !it->is_null()) {
        if (it->is_string()) {
            if (!it->get<std::string>().empty()) r.rating = std::stoi(it->get<std::string>());
        } else {
            r.rating = it->get<int>();
        }
    }
    if (auto it = j.find("comment"); it != j.end() && !it->is_null()) r.comment = it->get<std::string>();
    else r.comment.clear();
}

void to_json(json& j, const CategoryVector& v) {
    json labels = json::object();
    json explanations = json::object();
    for (auto c : kAllCategories) {
        const auto name = std::string(category_name(c));
        labels[name] = v.label(c) ? json(*v.label(c)) : json(nullptr);
        explanations[name] = v.explanations[index_of(c)];
    }
    j = json{
        {"record_id", v.record_id},
        {"labels", std::move(labels)},
        {"explanations", std::move(explanations)},
        {"classified_at", format_timestamp(v.classified_at)},
        {"backend_id", v.backend_id},
    };
}

void from_json(const json& j, CategoryVector& v) {
    v = CategoryVector{};
    v.record_id = j.at("record_id").get<std::string>();
    const auto& labels = j.at("labels");
    const auto explanations = j.value("explanations", json::object());
    for (auto c : kAllCategories) {
        const auto name = std::string(category_name(c));
        if (auto it = labels.find(name); it != labels.end() && !it->is_null()) v.labels[index_of(c)] = it->get<bool>();
        if (auto it = explanations.find(name); it != explanations.end()) v.explanations[index_of(c)] = it->get<std::string>();
    }
    v.classified_at = parse_timestamp(j.at("classified_at").get<std::string>());
    v.backend_id = j.value("backend_id", "");
}

void to_json(json& j, const OrganizerAnnotation& a) {
    j = json{
        {"record_id", a.record_id},
        {"note", a.note},
        {"intervention_status", status_name(a.intervention_status)},
        {"updated_at", format_timestamp(a.updated_at)},
        {"author", a.author},
    };
}

}  // namespace feedtriage
