#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "feedtriage/domain.hpp"
#include "feedtriage/rewriter.hpp"
#include "feedtriage/scoring.hpp"

struct sqlite3;

namespace feedtriage {

/// One feedback row: record, classification and organizer annotation.
struct StoreRow {
    FeedbackRecord record;
    std::optional<CategoryVector> vector;  // set once classified
    OrganizerAnnotation annotation;
    Timestamp ingested_at{};
    int attempts = 0;           // failed classification attempts
    bool needs_review = false;  // attempts exhausted
    std::string last_error;

    [[nodiscard]] bool classified() const noexcept { return vector.has_value(); }
};

void to_json(nlohmann::json& j, const StoreRow& row);

struct FeedbackQuery {
    std::optional<Timestamp> from;  // inclusive
    std::optional<Timestamp> to;    // inclusive
    std::vector<Category> categories;  // every listed label must be set
    std::optional<bool> any_issue;     // restricts to classified rows
    std::optional<InterventionStatus> status;
    std::optional<std::string> donor_id;
    std::optional<std::string> recipient_id;
    std::size_t limit = 100;
    std::optional<std::string> cursor;
};

struct FeedbackPage {
    std::vector<StoreRow> rows;
    std::optional<std::string> next_cursor;
};

struct BatchRun {
    std::int64_t run_id = 0;
    Timestamp window_from{};  // exclusive
    Timestamp window_to{};    // inclusive
    std::size_t n_ingested = 0;
    std::size_t n_classified = 0;
    std::size_t n_failed = 0;
    Timestamp started_at{};
    Timestamp finished_at{};
};

void to_json(nlohmann::json& j, const BatchRun& run);

/// A rewrite as persisted, with the directions it was generated from.
struct StoredRewrite {
    DirectionRewrite rewrite;
    std::string donor_id;
    std::string recipient_id;
    DirectionsPair original;
    std::string month;  // YYYY-MM of the feedback
    Timestamp created_at{};
    std::optional<Timestamp> decided_at;
};

void to_json(nlohmann::json& j, const StoredRewrite& r);

/// Embedded single-file SQLite store. One connection; every call serializes
/// on an internal mutex, so a Store may be shared between threads.
///
/// Schema (see `Store::open`): `feedback` (one row per record_id, per-category
/// label columns `lbl_<field>`), `batch_runs`, `rewrites`, `directions`.
class Store {
public:
    /// Opens or creates the database. `:memory:` gives a private in-memory store.
    static std::unique_ptr<Store> open(const std::filesystem::path& path);
    ~Store();
    Store(const Store&) = delete;
    Store& operator=(const Store&) = delete;

    /// Inserts records whose id is new; returns how many were inserted.
    std::size_t insert_records(std::span<const FeedbackRecord> records, Timestamp ingested_at);
    [[nodiscard]] bool contains(const std::string& record_id) const;
    [[nodiscard]] std::optional<StoreRow> get(const std::string& record_id) const;
    [[nodiscard]] std::size_t size() const;

    /// Unclassified rows created at or before `up_to` that have not used up
    /// their attempts, oldest first.
    [[nodiscard]] std::vector<FeedbackRecord> pending_classification(Timestamp up_to, int max_attempts) const;
    void save_vector(const CategoryVector& vector);
    /// Counts a failed attempt; flags the row for review once `max_attempts` is reached.
    void record_failure(const std::string& record_id, const std::string& error, int max_attempts);

    [[nodiscard]] FeedbackPage query(const FeedbackQuery& q) const;
    /// Rows with created_at in [from, to), ordered by (created_at, record_id).
    [[nodiscard]] std::vector<StoreRow> rows_between(std::optional<Timestamp> from, std::optional<Timestamp> to) const;
    [[nodiscard]] std::size_t count_created_in(Timestamp after, Timestamp up_to) const;

    /// Throw NotFound for an unknown record.
    void set_note(const std::string& record_id, const std::string& note, const std::string& author, Timestamp now);
    void set_status(const std::string& record_id, InterventionStatus status, Timestamp now);

    [[nodiscard]] std::optional<BatchRun> last_batch_run() const;
    std::int64_t insert_batch_run(const BatchRun& run);
    [[nodiscard]] std::vector<BatchRun> batch_runs() const;

    void upsert_direction(const std::string& entity_id, EntityRole role, const std::string& direction);
    [[nodiscard]] DirectionsPair directions_for(const std::string& donor_id, const std::string& recipient_id) const;

    /// Inserts or refreshes a Pending rewrite; decided rewrites are left untouched.
    void upsert_rewrite(const StoredRewrite& rewrite);
    [[nodiscard]] std::optional<StoredRewrite> get_rewrite(const std::string& record_id) const;
    [[nodiscard]] std::vector<StoredRewrite> rewrites(std::optional<ReviewStatus> status = std::nullopt,
                                                      std::optional<std::string> month = std::nullopt) const;
    /// Pending -> Accepted/Rejected. NotFound for unknown ids; Conflict
    /// ("already_decided") when not Pending; Conflict ("additivity_violation")
    /// when accepting a rewrite that failed validation.
    StoredRewrite decide_rewrite(const std::string& record_id, ReviewStatus decision, Timestamp now);

    /// Two observations (donor side and recipient side) per row created
    /// before `before`. Rows with neither a rating nor a vector are skipped.
    [[nodiscard]] std::vector<TripObservation> observations(std::optional<Timestamp> before = std::nullopt) const;

private:
    explicit Store(sqlite3* db);
    void exec(const char* sql);
    void migrate();

    sqlite3* db_;
    mutable std::mutex mutex_;
};

}  // namespace feedtriage
