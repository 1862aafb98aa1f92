#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "feedtriage/backend.hpp"
#include "feedtriage/classifier.hpp"
#include "feedtriage/notify.hpp"
#include "feedtriage/prompts.hpp"
#include "feedtriage/scoring.hpp"
#include "feedtriage/store.hpp"

namespace feedtriage {

struct PipelineOptions {
    PromptVariant variant = PromptVariant::Full;
    double temperature = 0.0;
    std::size_t parallelism = 4;
    RetryPolicy retry{};
    int max_attempts = 5;
    std::size_t min_trips = kDefaultMinTrips;
    double bucket_width = 0.1;
    std::size_t concentration_k = 5;
    std::string webhook_url;
    RetryPolicy webhook_retry{};
    Clock clock = system_now;
};

/// `YYYY-MM` -> [first second of the month, first second of the next month).
std::pair<Timestamp, Timestamp> month_window(const std::string& month);

// Analytics documents shared by the monthly bundle and the HTTP API.
nlohmann::json distribution_json(std::span<const TripObservation> obs, EntityRole role, std::size_t min_trips,
                                 double bucket_width);
/// Degenerate inputs produce {"role", "error": {code, message}} instead of throwing.
nlohmann::json correlation_json(std::span<const TripObservation> obs, EntityRole role, std::size_t min_trips);
nlohmann::json concentration_json(std::span<const TripObservation> obs, EntityRole role,
                                  std::optional<Category> category, std::size_t k);

struct MonthlyBundle {
    std::string month;
    std::vector<EntityScore> donor_ranking;
    std::vector<EntityScore> recipient_ranking;
    std::vector<StoredRewrite> rewrites;
    nlohmann::json distribution;
    nlohmann::json correlation;
    nlohmann::json concentration;
    std::vector<std::string> warnings;
    /// File name -> contents, exactly as written by write_bundle.
    std::map<std::string, std::string> files;
};

void write_bundle(const MonthlyBundle& bundle, const std::filesystem::path& dir);

/// Daily classification and monthly action reports over a Store. The
/// backend may be null, in which case classification is unavailable and
/// monthly reports skip rewrites.
class Pipeline {
public:
    Pipeline(Store& store, const PromptCatalog& catalog, ChatBackend* backend, PipelineOptions options = {});

    /// Classifies unclassified rows created at or before `now`. Throws
    /// Conflict("busy") if another batch is running and ConfigError without
    /// a backend. Rows that fail stay unclassified for the next run.
    BatchRun run_daily_batch(Timestamp now);

    /// Rankings over history up to the end of `month`, direction rewrites for
    /// the month's feedback, and analytics.
    MonthlyBundle run_monthly_actions(const std::string& month);

    /// Generates and stores rewrites for rows that have none yet.
    std::vector<StoredRewrite> generate_rewrites(std::span<const StoreRow> rows, std::vector<std::string>* warnings);

    [[nodiscard]] const PipelineOptions& options() const noexcept { return options_; }
    [[nodiscard]] std::optional<DeliveryResult> last_delivery() const;

private:
    Store& store_;
    const PromptCatalog& catalog_;
    ChatBackend* backend_;
    PipelineOptions options_;
    std::mutex batch_mutex_;
    mutable std::mutex delivery_mutex_;
    std::optional<DeliveryResult> last_delivery_;
};

}  // namespace feedtriage
