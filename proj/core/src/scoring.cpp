#include "feedtriage/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "feedtriage/csv.hpp"
#include "feedtriage/errors.hpp"

namespace feedtriage {

namespace {

constexpr std::array<Category, 5> kDonorCategories = {Category::UpdateContact, Category::InadequateFood,
                                                      Category::EarlierPickup, Category::DirectionProblem,
                                                      Category::DonorProblem};
constexpr std::array<Category, 3> kRecipientCategories = {Category::UpdateContact, Category::DirectionProblem,
                                                          Category::RecipientProblem};

std::string format_score(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

std::span<const Category> role_categories(EntityRole role) noexcept {
    if (role == EntityRole::Donor) return kDonorCategories;
    return kRecipientCategories;
}

bool counts_for(EntityRole role, Category c) noexcept {
    const auto set = role_categories(role);
    return std::find(set.begin(), set.end(), c) != set.end();
}

bool comment_flag(const TripObservation& obs) noexcept {
    if (!obs.vector) return false;
    const auto set = role_categories(obs.role);
    return std::any_of(set.begin(), set.end(), [&](Category c) { return obs.vector->is_set(c); });
}

bool trip_flag(const TripObservation& obs) noexcept {
    return comment_flag(obs) || (obs.rating && *obs.rating < 4);
}

EntityScore score_entity(std::span<const TripObservation> observations) {
    EntityScore out;
    if (observations.empty()) return out;
    out.entity_id = observations.front().entity_id;
    out.role = observations.front().role;
    for (const auto& obs : observations) {
        if (obs.entity_id != out.entity_id || obs.role != out.role)
            throw ContractViolation("score_entity given observations for '" + out.entity_id + "' and '" +
                                    obs.entity_id + "'");
        ++out.n_trips;
        if (trip_flag(obs)) ++out.n_flagged;
    }
    out.score = static_cast<double>(out.n_flagged) / static_cast<double>(out.n_trips);
    return out;
}

std::vector<EntityScore> score_entities(std::span<const TripObservation> observations) {
    std::map<std::pair<EntityRole, std::string>, std::vector<TripObservation>> groups;
    for (const auto& obs : observations) groups[{obs.role, obs.entity_id}].push_back(obs);
    std::vector<EntityScore> out;
    out.reserve(groups.size());
    for (const auto& [key, group] : groups) out.push_back(score_entity(group));
    return out;
}

bool ranks_before(const EntityScore& a, const EntityScore& b) noexcept {
    // Compare n_flagged/n_trips by cross-multiplication to keep the order exact.
    const auto lhs = a.n_flagged * std::max<std::size_t>(b.n_trips, 1) * (a.n_trips ? 1 : 0);
    const auto rhs = b.n_flagged * std::max<std::size_t>(a.n_trips, 1) * (b.n_trips ? 1 : 0);
    if (lhs != rhs) return lhs > rhs;
    if (a.n_trips != b.n_trips) return a.n_trips > b.n_trips;
    return a.entity_id < b.entity_id;
}

std::vector<EntityScore> rank_entities(std::vector<EntityScore> scores, std::size_t min_trips) {
    if (min_trips == 0) throw ValidationError("min_trips must be at least 1");
    std::erase_if(scores, [&](const EntityScore& s) { return s.n_trips < min_trips; });
    std::sort(scores.begin(), scores.end(), ranks_before);
    return scores;
}

std::size_t Histogram::total() const noexcept {
    std::size_t sum = 0;
    for (auto c : counts) sum += c;
    return sum;
}

Histogram score_distribution(std::span<const double> scores, double bucket_width) {
    if (!(bucket_width > 0.0 && bucket_width <= 1.0)) throw ValidationError("bucket width must lie in (0, 1]");
    const double buckets = 1.0 / bucket_width;
    const auto n_buckets = static_cast<std::size_t>(std::llround(buckets));
    if (std::abs(buckets - static_cast<double>(n_buckets)) > 1e-9)
        throw ValidationError("bucket width must divide [0, 1] into whole buckets");

    Histogram h{bucket_width, std::vector<std::size_t>(n_buckets, 0)};
    for (double s : scores) {
        if (!(s >= 0.0 && s <= 1.0)) throw ValidationError("score outside [0, 1]");
        auto k = static_cast<std::size_t>(std::floor(s * static_cast<double>(n_buckets) + 1e-9));
        ++h.counts[std::min(k, n_buckets - 1)];
    }
    return h;
}

CorrelationResult rating_correlation(std::span<const std::pair<double, double>> pairs) {
    const auto n = pairs.size();
    if (n < 2) throw DegenerateInput("correlation needs at least two pairs");
    double mean_x = 0.0, mean_y = 0.0;
    for (const auto& [x, y] : pairs) {
        mean_x += x;
        mean_y += y;
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (const auto& [x, y] : pairs) {
        const double dx = x - mean_x, dy = y - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0) throw DegenerateInput("comment scores have zero variance");
    if (syy == 0.0) throw DegenerateInput("mean ratings have zero variance");
    const double r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    return {r, r * r, n};
}

std::vector<std::pair<double, double>> comment_rating_pairs(std::span<const TripObservation> observations,
                                                            EntityRole role, std::size_t min_trips) {
    struct Tally {
        std::size_t trips = 0, flagged = 0, rated = 0;
        double rating_sum = 0.0;
    };
    std::map<std::string, Tally> tallies;
    for (const auto& obs : observations) {
        if (obs.role != role) continue;
        auto& t = tallies[obs.entity_id];
        ++t.trips;
        if (comment_flag(obs)) ++t.flagged;
        if (obs.rating) {
            ++t.rated;
            t.rating_sum += *obs.rating;
        }
    }
    std::vector<std::pair<double, double>> out;
    for (const auto& [id, t] : tallies) {
        if (t.trips < min_trips || t.rated == 0) continue;
        out.emplace_back(static_cast<double>(t.flagged) / static_cast<double>(t.trips),
                         t.rating_sum / static_cast<double>(t.rated));
    }
    return out;
}

double ConcentrationReport::top_share() const noexcept {
    double s = 0.0;
    for (const auto& e : top_entities) s += e.share;
    return s;
}

ConcentrationReport issue_concentration(std::span<const TripObservation> observations, EntityRole role,
                                        std::optional<Category> category, std::size_t k) {
    if (k == 0) throw ValidationError("k must be at least 1");
    std::map<std::string, std::size_t> counts;
    ConcentrationReport report{role, category, {}, 0};
    for (const auto& obs : observations) {
        if (obs.role != role) continue;
        const bool issue = category ? (obs.vector && obs.vector->is_set(*category)) : comment_flag(obs);
        if (!issue) continue;
        ++counts[obs.entity_id];
        ++report.total_issues;
    }
    std::vector<ConcentrationEntry> entries;
    entries.reserve(counts.size());
    for (const auto& [id, count] : counts) entries.push_back({id, count, 0.0});
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        if (a.issue_count != b.issue_count) return a.issue_count > b.issue_count;
        return a.entity_id < b.entity_id;
    });
    if (entries.size() > k) entries.resize(k);
    for (auto& e : entries)
        e.share = static_cast<double>(e.issue_count) / static_cast<double>(report.total_issues);
    report.top_entities = std::move(entries);
    return report;
}

std::string to_csv(std::span<const EntityScore> scores) {
    std::string out = "entity_id,role,n_trips,n_flagged,score\n";
    for (const auto& s : scores) {
        out += csv::join_row({s.entity_id, std::string(role_name(s.role)), std::to_string(s.n_trips),
                              std::to_string(s.n_flagged), format_score(s.score)});
        out += '\n';
    }
    return out;
}

void to_json(nlohmann::json& j, const EntityScore& s) {
    j = {{"entity_id", s.entity_id},
         {"role", role_name(s.role)},
         {"n_trips", s.n_trips},
         {"n_flagged", s.n_flagged},
         {"score", s.score}};
}

void to_json(nlohmann::json& j, const Histogram& h) {
    j = {{"bucket_width", h.bucket_width}, {"counts", h.counts}, {"total", h.total()}};
}

void to_json(nlohmann::json& j, const CorrelationResult& c) {
    j = {{"r", c.r}, {"r_squared", c.r_squared}, {"n", c.n}};
}

void to_json(nlohmann::json& j, const ConcentrationReport& c) {
    nlohmann::json top = nlohmann::json::array();
    for (const auto& e : c.top_entities)
        top.push_back({{"entity_id", e.entity_id}, {"issue_count", e.issue_count}, {"share", e.share}});
    j = {{"role", role_name(c.role)},
         {"category", c.category ? nlohmann::json(category_name(*c.category)) : nlohmann::json(nullptr)},
         {"top_entities", std::move(top)},
         {"total_issues", c.total_issues}};
}

}  // namespace feedtriage
