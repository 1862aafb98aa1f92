#include "feedtriage/store.hpp"

#include <functional>
#include <limits>
#include <sstream>

#include <sqlite3.h>

#include "feedtriage/errors.hpp"
#include "feedtriage/serialize.hpp"

namespace feedtriage {

using nlohmann::json;

namespace {

std::int64_t to_epoch(Timestamp t) { return t.time_since_epoch().count(); }
Timestamp from_epoch(std::int64_t s) { return Timestamp{std::chrono::seconds{s}}; }

class Statement {
public:
    Statement(sqlite3* db, const std::string& sql) : db_(db) {
        if (sqlite3_prepare_v2(db, sql.c_str(), -1, &stmt_, nullptr) != SQLITE_OK)
            throw StoreError(std::string("prepare failed: ") + sqlite3_errmsg(db) + " in: " + sql);
    }
    ~Statement() { sqlite3_finalize(stmt_); }
    Statement(const Statement&) = delete;
    Statement& operator=(const Statement&) = delete;

    Statement& bind(int i, std::int64_t v) {
        check(sqlite3_bind_int64(stmt_, i, v));
        return *this;
    }
    Statement& bind(int i, const std::string& v) {
        check(sqlite3_bind_text(stmt_, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT));
        return *this;
    }
    Statement& bind_null(int i) {
        check(sqlite3_bind_null(stmt_, i));
        return *this;
    }
    template <typename T>
    Statement& bind(int i, const std::optional<T>& v) {
        return v ? bind(i, static_cast<std::conditional_t<std::is_integral_v<T>, std::int64_t, T>>(*v)) : bind_null(i);
    }

    /// True while a row is available.
    bool step() {
        const int rc = sqlite3_step(stmt_);
        if (rc == SQLITE_ROW) return true;
        if (rc == SQLITE_DONE) return false;
        throw StoreError(std::string("step failed: ") + sqlite3_errmsg(db_));
    }
    void run() {
        while (step()) {
        }
    }

    [[nodiscard]] bool is_null(int col) const { return sqlite3_column_type(stmt_, col) == SQLITE_NULL; }
    [[nodiscard]] std::int64_t i64(int col) const { return sqlite3_column_int64(stmt_, col); }
    [[nodiscard]] std::string text(int col) const {
        const auto* p = sqlite3_column_text(stmt_, col);
        return p ? std::string(reinterpret_cast<const char*>(p), sqlite3_column_bytes(stmt_, col)) : std::string{};
    }

private:
    void check(int rc) {
        if (rc != SQLITE_OK) throw StoreError(std::string("bind failed: ") + sqlite3_errmsg(db_));
    }

    sqlite3* db_;
    sqlite3_stmt* stmt_ = nullptr;
};

class Transaction {
public:
    explicit Transaction(sqlite3* db) : db_(db) { exec("BEGIN IMMEDIATE"); }
    ~Transaction() {
        if (!committed_) sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, nullptr);
    }
    void commit() {
        exec("COMMIT");
        committed_ = true;
    }

private:
    void exec(const char* sql) {
        char* err = nullptr;
        if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
            std::string msg = err ? err : "unknown";
            sqlite3_free(err);
            throw StoreError(msg);
        }
    }
    sqlite3* db_;
    bool committed_ = false;
};

std::string label_columns() {
    std::string out;
    for (auto c : kAllCategories) out += ", lbl_" + std::string(category_field(c));
    return out;
}

const std::string kRowColumns =
    "record_id, trip_id, donor_id, donor_name, recipient_id, recipient_name, created_at, rating, comment, "
    "ingested_at, classified_at, backend_id, explanations, attempts, needs_review, last_error, note, note_author, "
    "intervention_status, annotation_updated_at" +
    label_columns();

StoreRow read_row(const Statement& s) {
    StoreRow row;
    auto& r = row.record;
    r.record_id = s.text(0);
    r.trip_id = s.text(1);
    r.donor_id = s.text(2);
    r.donor_name = s.text(3);
    r.recipient_id = s.text(4);
    r.recipient_name = s.text(5);
    r.created_at = from_epoch(s.i64(6));
    if (!s.is_null(7)) r.rating = static_cast<int>(s.i64(7));
    r.comment = s.text(8);
    row.ingested_at = from_epoch(s.i64(9));
    if (!s.is_null(10)) {
        CategoryVector v;
        v.record_id = r.record_id;
        v.classified_at = from_epoch(s.i64(10));
        v.backend_id = s.text(11);
        const auto explanations = json::parse(s.text(12).empty() ? "{}" : s.text(12));
        for (auto c : kAllCategories) {
            const int col = 20 + static_cast<int>(index_of(c));
            if (!s.is_null(col)) v.labels[index_of(c)] = s.i64(col) != 0;
            v.explanations[index_of(c)] = explanations.value(std::string(category_name(c)), "");
        }
        row.vector = std::move(v);
    }
    row.attempts = static_cast<int>(s.i64(13));
    row.needs_review = s.i64(14) != 0;
    row.last_error = s.text(15);
    row.annotation.record_id = r.record_id;
    row.annotation.note = s.text(16);
    row.annotation.author = s.text(17);
    row.annotation.intervention_status = parse_status(s.text(18)).value_or(InterventionStatus::Unreviewed);
    row.annotation.updated_at = from_epoch(s.is_null(19) ? 0 : s.i64(19));
    return row;
}

const char* kRewriteColumns =
    "record_id, donor_change, donor_text, recipient_change, recipient_text, explanation, validation, "
    "review_status, donor_id, recipient_id, original_donor, original_recipient, month, created_at, decided_at";

StoredRewrite read_rewrite(const Statement& s) {
    StoredRewrite out;
    auto& r = out.rewrite;
    r.record_id = s.text(0);
    r.donor_direction_change = s.i64(1) != 0;
    r.rewritten_donor_direction = s.text(2);
    r.recipient_direction_change = s.i64(3) != 0;
    r.rewritten_recipient_direction = s.text(4);
    r.explanation = s.text(5);
    r.validation = parse_validation(s.text(6)).value_or(RewriteValidation::ParseFailed);
    r.review_status = parse_review(s.text(7)).value_or(ReviewStatus::Pending);
    out.donor_id = s.text(8);
    out.recipient_id = s.text(9);
    out.original = {s.text(10), s.text(11)};
    out.month = s.text(12);
    out.created_at = from_epoch(s.i64(13));
    if (!s.is_null(14)) out.decided_at = from_epoch(s.i64(14));
    return out;
}

std::string encode_cursor(const FeedbackRecord& r) { return std::to_string(to_epoch(r.created_at)) + ":" + r.record_id; }

std::pair<std::int64_t, std::string> decode_cursor(const std::string& cursor) {
    const auto colon = cursor.find(':');
    if (colon == std::string::npos || colon == 0) throw ValidationError("malformed cursor");
    try {
        std::size_t used = 0;
        const auto epoch = std::stoll(cursor.substr(0, colon), &used);
        if (used != colon) throw ValidationError("malformed cursor");
        return {epoch, cursor.substr(colon + 1)};
    } catch (const std::logic_error&) {
        throw ValidationError("malformed cursor");
    }
}

}  // namespace

void to_json(json& j, const StoreRow& row) {
    j = row.record;
    j["ingested_at"] = format_timestamp(row.ingested_at);
    j["classified"] = row.classified();
    if (row.vector) {
        json v = *row.vector;
        j["labels"] = v["labels"];
        j["explanations"] = v["explanations"];
        j["classified_at"] = v["classified_at"];
        j["backend_id"] = v["backend_id"];
        j["any_issue"] = row.vector->complete() ? json(any_issue(*row.vector)) : json(nullptr);
    } else {
        j["labels"] = nullptr;
        j["any_issue"] = nullptr;
    }
    j["attempts"] = row.attempts;
    j["needs_review"] = row.needs_review;
    j["note"] = row.annotation.note;
    j["note_author"] = row.annotation.author;
    j["intervention_status"] = status_name(row.annotation.intervention_status);
    j["annotation_updated_at"] = format_timestamp(row.annotation.updated_at);
}

void to_json(json& j, const BatchRun& run) {
    j = {{"run_id", run.run_id},
         {"window_from", format_timestamp(run.window_from)},
         {"window_to", format_timestamp(run.window_to)},
         {"n_ingested", run.n_ingested},
         {"n_classified", run.n_classified},
         {"n_failed", run.n_failed},
         {"started_at", format_timestamp(run.started_at)},
         {"finished_at", format_timestamp(run.finished_at)}};
}

void to_json(json& j, const StoredRewrite& r) {
    j = r.rewrite;
    j["donor_id"] = r.donor_id;
    j["recipient_id"] = r.recipient_id;
    j["original_donor_direction"] = r.original.donor_direction;
    j["original_recipient_direction"] = r.original.recipient_direction;
    j["month"] = r.month;
    j["created_at"] = format_timestamp(r.created_at);
    j["decided_at"] = r.decided_at ? json(format_timestamp(*r.decided_at)) : json(nullptr);
}

std::unique_ptr<Store> Store::open(const std::filesystem::path& path) {
    sqlite3* db = nullptr;
    const int flags = SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX;
    if (sqlite3_open_v2(path.c_str(), &db, flags, nullptr) != SQLITE_OK) {
        std::string msg = db ? sqlite3_errmsg(db) : "out of memory";
        sqlite3_close(db);
        throw StoreError("cannot open store " + path.string() + ": " + msg);
    }
    sqlite3_busy_timeout(db, 5000);
    std::unique_ptr<Store> store(new Store(db));
    store->migrate();
    return store;
}

Store::Store(sqlite3* db) : db_(db) {}

Store::~Store() { sqlite3_close(db_); }

void Store::exec(const char* sql) {
    char* err = nullptr;
    if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
        std::string msg = err ? err : "unknown";
        sqlite3_free(err);
        throw StoreError(msg);
    }
}

void Store::migrate() {
    exec("PRAGMA journal_mode=WAL");
    exec("PRAGMA synchronous=FULL");
    std::string labels;
    for (auto c : kAllCategories) labels += ", lbl_" + std::string(category_field(c)) + " INTEGER";
    const std::string feedback =
        "CREATE TABLE IF NOT EXISTS feedback ("
        " record_id TEXT PRIMARY KEY, trip_id TEXT NOT NULL, donor_id TEXT NOT NULL, donor_name TEXT NOT NULL,"
        " recipient_id TEXT NOT NULL, recipient_name TEXT NOT NULL, created_at INTEGER NOT NULL,"
        " rating INTEGER CHECK (rating IS NULL OR rating BETWEEN 1 AND 4), comment TEXT NOT NULL,"
        " ingested_at INTEGER NOT NULL, classified_at INTEGER, backend_id TEXT, explanations TEXT,"
        " attempts INTEGER NOT NULL DEFAULT 0, needs_review INTEGER NOT NULL DEFAULT 0, last_error TEXT NOT NULL DEFAULT '',"
        " note TEXT NOT NULL DEFAULT '', note_author TEXT NOT NULL DEFAULT '',"
        " intervention_status TEXT NOT NULL DEFAULT 'Unreviewed', annotation_updated_at INTEGER" +
        labels + ")";
    exec(feedback.c_str());
    exec("CREATE INDEX IF NOT EXISTS feedback_created ON feedback (created_at, record_id)");
    exec("CREATE TABLE IF NOT EXISTS batch_runs ("
         " run_id INTEGER PRIMARY KEY AUTOINCREMENT, window_from INTEGER NOT NULL, window_to INTEGER NOT NULL,"
         " n_ingested INTEGER NOT NULL, n_classified INTEGER NOT NULL, n_failed INTEGER NOT NULL,"
         " started_at INTEGER NOT NULL, finished_at INTEGER NOT NULL)");
    exec("CREATE TABLE IF NOT EXISTS directions ("
         " entity_id TEXT NOT NULL, role TEXT NOT NULL, direction TEXT NOT NULL, PRIMARY KEY (entity_id, role))");
    exec("CREATE TABLE IF NOT EXISTS rewrites ("
         " record_id TEXT PRIMARY KEY, donor_change INTEGER NOT NULL, donor_text TEXT NOT NULL,"
         " recipient_change INTEGER NOT NULL, recipient_text TEXT NOT NULL, explanation TEXT NOT NULL,"
         " validation TEXT NOT NULL, review_status TEXT NOT NULL, donor_id TEXT NOT NULL, recipient_id TEXT NOT NULL,"
         " original_donor TEXT NOT NULL, original_recipient TEXT NOT NULL, month TEXT NOT NULL,"
         " created_at INTEGER NOT NULL, decided_at INTEGER)");
}

std::size_t Store::insert_records(std::span<const FeedbackRecord> records, Timestamp ingested_at) {
    std::lock_guard lock(mutex_);
    Transaction tx(db_);
    std::size_t inserted = 0;
    for (const auto& r : records) {
        Statement s(db_,
                    "INSERT OR IGNORE INTO feedback (record_id, trip_id, donor_id, donor_name, recipient_id,"
                    " recipient_name, created_at, rating, comment, ingested_at) VALUES (?,?,?,?,?,?,?,?,?,?)");
        s.bind(1, r.record_id).bind(2, r.trip_id).bind(3, r.donor_id).bind(4, r.donor_name).bind(5, r.recipient_id);
        s.bind(6, r.recipient_name).bind(7, to_epoch(r.created_at)).bind(8, r.rating).bind(9, r.comment);
        s.bind(10, to_epoch(ingested_at));
        s.run();
        inserted += static_cast<std::size_t>(sqlite3_changes(db_));
    }
    tx.commit();
    return inserted;
}

bool Store::contains(const std::string& record_id) const {
    std::lock_guard lock(mutex_);
    Statement s(db_, "SELECT 1 FROM feedback WHERE record_id = ?");
    s.bind(1, record_id);
    return s.step();
}

std::optional<StoreRow> Store::get(const std::string& record_id) const {
    std::lock_guard lock(mutex_);
    Statement s(db_, "SELECT " + kRowColumns + " FROM feedback WHERE record_id = ?");
    s.bind(1, record_id);
    if (!s.step()) return std::nullopt;
    return read_row(s);
}

std::size_t Store::size() const {
    std::lock_guard lock(mutex_);
    Statement s(db_, "SELECT COUNT(*) FROM feedback");
    s.step();
    return static_cast<std::size_t>(s.i64(0));
}

std::vector<FeedbackRecord> Store::pending_classification(Timestamp up_to, int max_attempts) const {
    std::lock_guard lock(mutex_);
    Statement s(db_, "SELECT " + kRowColumns +
                         " FROM feedback WHERE classified_at IS NULL AND created_at <= ? AND attempts < ?"
                         " ORDER BY created_at, record_id");
    s.bind(1, to_epoch(up_to)).bind(2, std::int64_t{max_attempts});
    std::vector<FeedbackRecord> out;
    while (s.step()) out.push_back(read_row(s).record);
    return out;
}

void Store::save_vector(const CategoryVector& v) {
    json explanations = json::object();
    for (auto c : kAllCategories) explanations[std::string(category_name(c))] = v.explanations[index_of(c)];
    std::string sql = "UPDATE feedback SET classified_at = ?, backend_id = ?, explanations = ?, last_error = ''";
    for (auto c : kAllCategories) sql += ", lbl_" + std::string(category_field(c)) + " = ?";
    sql += " WHERE record_id = ?";

    std::lock_guard lock(mutex_);
    Statement s(db_, sql);
    s.bind(1, to_epoch(v.classified_at)).bind(2, v.backend_id).bind(3, explanations.dump());
    int i = 4;
    for (auto c : kAllCategories) {
        const auto l = v.label(c);
        s.bind(i++, l ? std::optional<std::int64_t>(*l ? 1 : 0) : std::nullopt);
    }
    s.bind(i, v.record_id);
    s.run();
    if (sqlite3_changes(db_) == 0) throw NotFound("no feedback row '" + v.record_id + "'");
}

void Store::record_failure(const std::string& record_id, const std::string& error, int max_attempts) {
    std::lock_guard lock(mutex_);
    Statement s(db_,
                "UPDATE feedback SET attempts = attempts + 1, last_error = ?,"
                " needs_review = CASE WHEN attempts + 1 >= ? THEN 1 ELSE 0 END WHERE record_id = ?");
    s.bind(1, error).bind(2, std::int64_t{max_attempts}).bind(3, record_id);
    s.run();
    if (sqlite3_changes(db_) == 0) throw NotFound("no feedback row '" + record_id + "'");
}

FeedbackPage Store::query(const FeedbackQuery& q) const {
    if (q.limit == 0) throw ValidationError("limit must be positive");
    std::string sql = "SELECT " + kRowColumns + " FROM feedback WHERE 1=1";
    std::vector<std::function<void(Statement&, int)>> binders;
    if (q.from) {
        sql += " AND created_at >= ?";
        binders.push_back([v = to_epoch(*q.from)](Statement& s, int i) { s.bind(i, v); });
    }
    if (q.to) {
        sql += " AND created_at <= ?";
        binders.push_back([v = to_epoch(*q.to)](Statement& s, int i) { s.bind(i, v); });
    }
    for (auto c : q.categories) sql += " AND lbl_" + std::string(category_field(c)) + " = 1";
    if (q.any_issue) {
        std::string any = "(0";
        for (auto c : kAllCategories) any += " OR lbl_" + std::string(category_field(c)) + " = 1";
        any += ")";
        sql += " AND classified_at IS NOT NULL AND " + (*q.any_issue ? any : "NOT " + any);
    }
    if (q.status) {
        sql += " AND intervention_status = ?";
        binders.push_back([v = std::string(status_name(*q.status))](Statement& s, int i) { s.bind(i, v); });
    }
    if (q.donor_id) {
        sql += " AND donor_id = ?";
        binders.push_back([v = *q.donor_id](Statement& s, int i) { s.bind(i, v); });
    }
    if (q.recipient_id) {
        sql += " AND recipient_id = ?";
        binders.push_back([v = *q.recipient_id](Statement& s, int i) { s.bind(i, v); });
    }
    if (q.cursor) {
        auto [epoch, id] = decode_cursor(*q.cursor);
        sql += " AND (created_at > ? OR (created_at = ? AND record_id > ?))";
        binders.push_back([epoch](Statement& s, int i) { s.bind(i, epoch); });
        binders.push_back([epoch](Statement& s, int i) { s.bind(i, epoch); });
        binders.push_back([id](Statement& s, int i) { s.bind(i, id); });
    }
    sql += " ORDER BY created_at, record_id LIMIT ?";
    binders.push_back([n = static_cast<std::int64_t>(q.limit) + 1](Statement& s, int i) { s.bind(i, n); });

    std::lock_guard lock(mutex_);
    Statement s(db_, sql);
    for (std::size_t i = 0; i < binders.size(); ++i) binders[i](s, static_cast<int>(i) + 1);
    FeedbackPage page;
    while (s.step()) page.rows.push_back(read_row(s));
    if (page.rows.size() > q.limit) {
        page.rows.pop_back();
        page.next_cursor = encode_cursor(page.rows.back().record);
    }
    return page;
}

std::vector<StoreRow> Store::rows_between(std::optional<Timestamp> from, std::optional<Timestamp> to) const {
    std::lock_guard lock(mutex_);
    Statement s(db_, "SELECT " + kRowColumns +
                         " FROM feedback WHERE created_at >= ? AND created_at < ? ORDER BY created_at, record_id");
    s.bind(1, from ? to_epoch(*from) : std::numeric_limits<std::int64_t>::min());
    s.bind(2, to ? to_epoch(*to) : std::numeric_limits<std::int64_t>::max());
    std::vector<StoreRow> out;
    while (s.step()) out.push_back(read_row(s));
    return out;
}

std::size_t Store::count_created_in(Timestamp after, Timestamp up_to) const {
    std::lock_guard lock(mutex_);
    Statement s(db_, "SELECT COUNT(*) FROM feedback WHERE created_at > ? AND created_at <= ?");
    s.bind(1, to_epoch(after)).bind(2, to_epoch(up_to));
    s.step();
    return static_cast<std::size_t>(s.i64(0));
}

void Store::set_note(const std::string& record_id, const std::string& note, const std::string& author, Timestamp now) {
    std::lock_guard lock(mutex_);
    Statement s(db_, "UPDATE feedback SET note = ?, note_author = ?, annotation_updated_at = ? WHERE record_id = ?");
    s.bind(1, note).bind(2, author).bind(3, to_epoch(now)).bind(4, record_id);
    s.run();
    if (sqlite3_changes(db_) == 0) throw NotFound("no feedback row '" + record_id + "'");
}

void Store::set_status(const std::string& record_id, InterventionStatus status, Timestamp now) {
    std::lock_guard lock(mutex_);
    Statement s(db_, "UPDATE feedback SET intervention_status = ?, annotation_updated_at = ? WHERE record_id = ?");
    s.bind(1, std::string(status_name(status))).bind(2, to_epoch(now)).bind(3, record_id);
    s.run();
    if (sqlite3_changes(db_) == 0) throw NotFound("no feedback row '" + record_id + "'");
}

namespace {

BatchRun read_batch(const Statement& s) {
    return BatchRun{s.i64(0),
                    from_epoch(s.i64(1)),
                    from_epoch(s.i64(2)),
                    static_cast<std::size_t>(s.i64(3)),
                    static_cast<std::size_t>(s.i64(4)),
                    static_cast<std::size_t>(s.i64(5)),
                    from_epoch(s.i64(6)),
                    from_epoch(s.i64(7))};
}

constexpr const char* kBatchColumns =
    "run_id, window_from, window_to, n_ingested, n_classified, n_failed, started_at, finished_at";

}  // namespace

std::optional<BatchRun> Store::last_batch_run() const {
    std::lock_guard lock(mutex_);
    Statement s(db_, std::string("SELECT ") + kBatchColumns + " FROM batch_runs ORDER BY run_id DESC LIMIT 1");
    if (!s.step()) return std::nullopt;
    return read_batch(s);
}

std::vector<BatchRun> Store::batch_runs() const {
    std::lock_guard lock(mutex_);
    Statement s(db_, std::string("SELECT ") + kBatchColumns + " FROM batch_runs ORDER BY run_id");
    std::vector<BatchRun> out;
    while (s.step()) out.push_back(read_batch(s));
    return out;
}

std::int64_t Store::insert_batch_run(const BatchRun& run) {
    std::lock_guard lock(mutex_);
    Statement s(db_,
                "INSERT INTO batch_runs (window_from, window_to, n_ingested, n_classified, n_failed, started_at,"
                " finished_at) VALUES (?,?,?,?,?,?,?)");
    s.bind(1, to_epoch(run.window_from)).bind(2, to_epoch(run.window_to));
    s.bind(3, static_cast<std::int64_t>(run.n_ingested)).bind(4, static_cast<std::int64_t>(run.n_classified));
    s.bind(5, static_cast<std::int64_t>(run.n_failed)).bind(6, to_epoch(run.started_at)).bind(7, to_epoch(run.finished_at));
    s.run();
    return sqlite3_last_insert_rowid(db_);
}

void Store::upsert_direction(const std::string& entity_id, EntityRole role, const std::string& direction) {
    std::lock_guard lock(mutex_);
    Statement s(db_,
                "INSERT INTO directions (entity_id, role, direction) VALUES (?,?,?)"
                " ON CONFLICT (entity_id, role) DO UPDATE SET direction = excluded.direction");
    s.bind(1, entity_id).bind(2, std::string(role_name(role))).bind(3, direction);
    s.run();
}

DirectionsPair Store::directions_for(const std::string& donor_id, const std::string& recipient_id) const {
    std::lock_guard lock(mutex_);
    auto lookup = [&](const std::string& id, EntityRole role) {
        Statement s(db_, "SELECT direction FROM directions WHERE entity_id = ? AND role = ?");
        s.bind(1, id).bind(2, std::string(role_name(role)));
        return s.step() ? s.text(0) : std::string{};
    };
    return {lookup(donor_id, EntityRole::Donor), lookup(recipient_id, EntityRole::Recipient)};
}

void Store::upsert_rewrite(const StoredRewrite& w) {
    std::lock_guard lock(mutex_);
    Statement s(db_, std::string("INSERT INTO rewrites (") + kRewriteColumns +
                         ") VALUES (?,?,?,?,?,?,?,?,?,?,?,?,?,?,?)"
                         " ON CONFLICT (record_id) DO UPDATE SET donor_change = excluded.donor_change,"
                         " donor_text = excluded.donor_text, recipient_change = excluded.recipient_change,"
                         " recipient_text = excluded.recipient_text, explanation = excluded.explanation,"
                         " validation = excluded.validation, original_donor = excluded.original_donor,"
                         " original_recipient = excluded.original_recipient, created_at = excluded.created_at"
                         " WHERE rewrites.review_status = 'Pending'");
    const auto& r = w.rewrite;
    s.bind(1, r.record_id).bind(2, std::int64_t{r.donor_direction_change}).bind(3, r.rewritten_donor_direction);
    s.bind(4, std::int64_t{r.recipient_direction_change}).bind(5, r.rewritten_recipient_direction).bind(6, r.explanation);
    s.bind(7, std::string(validation_name(r.validation))).bind(8, std::string(review_name(r.review_status)));
    s.bind(9, w.donor_id).bind(10, w.recipient_id).bind(11, w.original.donor_direction);
    s.bind(12, w.original.recipient_direction).bind(13, w.month).bind(14, to_epoch(w.created_at));
    s.bind(15, w.decided_at ? std::optional<std::int64_t>(to_epoch(*w.decided_at)) : std::nullopt);
    s.run();
}

std::optional<StoredRewrite> Store::get_rewrite(const std::string& record_id) const {
    std::lock_guard lock(mutex_);
    Statement s(db_, std::string("SELECT ") + kRewriteColumns + " FROM rewrites WHERE record_id = ?");
    s.bind(1, record_id);
    if (!s.step()) return std::nullopt;
    return read_rewrite(s);
}

std::vector<StoredRewrite> Store::rewrites(std::optional<ReviewStatus> status, std::optional<std::string> month) const {
    std::lock_guard lock(mutex_);
    std::string sql = std::string("SELECT ") + kRewriteColumns + " FROM rewrites WHERE 1=1";
    if (status) sql += " AND review_status = ?";
    if (month) sql += " AND month = ?";
    sql += " ORDER BY record_id";
    Statement s(db_, sql);
    int i = 1;
    if (status) s.bind(i++, std::string(review_name(*status)));
    if (month) s.bind(i++, *month);
    std::vector<StoredRewrite> out;
    while (s.step()) out.push_back(read_rewrite(s));
    return out;
}

StoredRewrite Store::decide_rewrite(const std::string& record_id, ReviewStatus decision, Timestamp now) {
    if (decision == ReviewStatus::Pending) throw ValidationError("decision must be Accepted or Rejected");
    std::lock_guard lock(mutex_);
    Transaction tx(db_);
    StoredRewrite current;
    {
        Statement s(db_, std::string("SELECT ") + kRewriteColumns + " FROM rewrites WHERE record_id = ?");
        s.bind(1, record_id);
        if (!s.step()) throw NotFound("no rewrite '" + record_id + "'");
        current = read_rewrite(s);
    }
    if (current.rewrite.review_status != ReviewStatus::Pending)
        throw Conflict("already_decided", "rewrite '" + record_id + "' is already " +
                                              std::string(review_name(current.rewrite.review_status)));
    if (decision == ReviewStatus::Accepted && current.rewrite.validation != RewriteValidation::Passed)
        throw Conflict("additivity_violation", "rewrite '" + record_id + "' failed validation (" +
                                                   std::string(validation_name(current.rewrite.validation)) +
                                                   ") and cannot be accepted");
    Statement s(db_, "UPDATE rewrites SET review_status = ?, decided_at = ? WHERE record_id = ?");
    s.bind(1, std::string(review_name(decision))).bind(2, to_epoch(now)).bind(3, record_id);
    s.run();
    tx.commit();
    current.rewrite.review_status = decision;
    current.decided_at = now;
    return current;
}

std::vector<TripObservation> Store::observations(std::optional<Timestamp> before) const {
    std::vector<TripObservation> out;
    for (auto& row : rows_between(std::nullopt, before)) {
        if (!row.record.rating && !row.vector) continue;
        TripObservation donor{row.record.record_id, row.record.donor_id, EntityRole::Donor, row.record.rating, row.vector};
        TripObservation recipient{row.record.record_id, row.record.recipient_id, EntityRole::Recipient,
                                  row.record.rating, std::move(row.vector)};
        out.push_back(std::move(donor));
        out.push_back(std::move(recipient));
    }
    return out;
}

}  // namespace feedtriage
