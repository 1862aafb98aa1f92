#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "feedtriage/domain.hpp"

namespace feedtriage {

/// One trip seen from one entity's side.
struct TripObservation {
    std::string record_id;
    std::string entity_id;
    EntityRole role = EntityRole::Donor;
    std::optional<int> rating;
    std::optional<CategoryVector> vector;
};

struct EntityScore {
    std::string entity_id;
    EntityRole role = EntityRole::Donor;
    std::size_t n_trips = 0;
    std::size_t n_flagged = 0;
    double score = 0.0;  // n_flagged / n_trips, 0 when n_trips == 0

    bool operator==(const EntityScore&) const = default;
};

/// Categories that count against an entity of the given role. SystemProblem
/// belongs to neither role.
std::span<const Category> role_categories(EntityRole role) noexcept;
bool counts_for(EntityRole role, Category c) noexcept;

/// True when the trip's vector has any role-relevant label set.
bool comment_flag(const TripObservation& obs) noexcept;

/// comment_flag, or a rating below 4. A missing rating never flags.
bool trip_flag(const TripObservation& obs) noexcept;

/// Throws ContractViolation if the observations span several entities or roles.
EntityScore score_entity(std::span<const TripObservation> observations);

/// Groups by (role, entity_id) and scores each group. Output sorted by role, then id.
std::vector<EntityScore> score_entities(std::span<const TripObservation> observations);

inline constexpr std::size_t kDefaultMinTrips = 100;

/// Keeps entities with at least `min_trips` trips, highest score first. Ties
/// go to more trips, then to the smaller entity_id.
std::vector<EntityScore> rank_entities(std::vector<EntityScore> scores, std::size_t min_trips);

/// True when `a` ranks ahead of `b` under rank_entities' ordering.
bool ranks_before(const EntityScore& a, const EntityScore& b) noexcept;

struct Histogram {
    double bucket_width = 0.1;
    std::vector<std::size_t> counts;  // bucket k covers [k*w, (k+1)*w); last bucket includes 1.0

    [[nodiscard]] std::size_t total() const noexcept;
};

/// Throws ValidationError when `bucket_width` does not split [0,1] into whole
/// buckets or a score lies outside [0,1].
Histogram score_distribution(std::span<const double> scores, double bucket_width);

struct CorrelationResult {
    double r = 0.0;
    double r_squared = 0.0;
    std::size_t n = 0;
};

/// Pearson r over (x, y) pairs. Throws DegenerateInput when n < 2 or either
/// coordinate has zero variance.
CorrelationResult rating_correlation(std::span<const std::pair<double, double>> pairs);

/// (comment score, mean rating) per entity of `role` with at least
/// `min_trips` trips. The comment score counts only vector flags; the mean
/// ignores missing ratings. Entities without any rating are skipped.
std::vector<std::pair<double, double>> comment_rating_pairs(std::span<const TripObservation> observations,
                                                            EntityRole role, std::size_t min_trips);

struct ConcentrationEntry {
    std::string entity_id;
    std::size_t issue_count = 0;
    double share = 0.0;
};

struct ConcentrationReport {
    EntityRole role = EntityRole::Donor;
    std::optional<Category> category;
    std::vector<ConcentrationEntry> top_entities;
    std::size_t total_issues = 0;

    [[nodiscard]] double top_share() const noexcept;
};

/// Counts issue trips per entity of `role` and returns the `k` largest. A
/// trip is an issue when `category` is set on its vector, or, with no
/// category, when comment_flag holds. Ratings are not considered.
ConcentrationReport issue_concentration(std::span<const TripObservation> observations, EntityRole role,
                                        std::optional<Category> category, std::size_t k);

/// CSV with header `entity_id,role,n_trips,n_flagged,score`.
std::string to_csv(std::span<const EntityScore> scores);

void to_json(nlohmann::json& j, const EntityScore& s);
void to_json(nlohmann::json& j, const Histogram& h);
void to_json(nlohmann::json& j, const CorrelationResult& c);
void to_json(nlohmann::json& j, const ConcentrationReport& c);

}  // namespace feedtriage
