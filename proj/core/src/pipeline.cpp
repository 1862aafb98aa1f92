#include "feedtriage/pipeline.hpp"

#include <cstdio>
#include <fstream>

#include <spdlog/spdlog.h>

#include "feedtriage/errors.hpp"

namespace feedtriage {

namespace {

using namespace std::chrono;

std::vector<TripObservation> of_role(std::span<const TripObservation> obs, EntityRole role) {
    std::vector<TripObservation> out;
    for (const auto& o : obs)
        if (o.role == role) out.push_back(o);
    return out;
}

std::vector<EntityScore> ranking(std::span<const TripObservation> obs, EntityRole role, std::size_t min_trips) {
    const auto mine = of_role(obs, role);
    return rank_entities(score_entities(mine), min_trips);
}

std::string date_of(Timestamp t) { return format_timestamp(t).substr(0, 10); }

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

std::vector<DirectionRewrite> plain(std::span<const StoredRewrite> stored) {
    std::vector<DirectionRewrite> out;
    out.reserve(stored.size());
    for (const auto& s : stored) out.push_back(s.rewrite);
    return out;
}

}  // namespace

std::pair<Timestamp, Timestamp> month_window(const std::string& month) {
    int y = 0;
    unsigned m = 0;
    char tail = 0;
    if (month.size() != 7 || month[4] != '-' || std::sscanf(month.c_str(), "%4d-%2u%c", &y, &m, &tail) != 2 || m < 1 ||
        m > 12)
        throw ValidationError("month must look like YYYY-MM, got '" + month + "'");
    const year_month ym{year{y}, std::chrono::month{m}};
    const auto next = ym + months{1};
    return {Timestamp{sys_days{ym / 1}}, Timestamp{sys_days{next / 1}}};
}

nlohmann::json distribution_json(std::span<const TripObservation> obs, EntityRole role, std::size_t min_trips,
                                 double bucket_width) {
    const auto ranked = ranking(obs, role, min_trips);
    std::vector<double> scores;
    scores.reserve(ranked.size());
    for (const auto& s : ranked) scores.push_back(s.score);
    return {{"role", role_name(role)},
            {"min_trips", min_trips},
            {"n_entities", ranked.size()},
            {"histogram", score_distribution(scores, bucket_width)}};
}

nlohmann::json correlation_json(std::span<const TripObservation> obs, EntityRole role, std::size_t min_trips) {
    nlohmann::json j{{"role", role_name(role)}, {"min_trips", min_trips}};
    const auto pairs = comment_rating_pairs(obs, role, min_trips);
    try {
        j["result"] = rating_correlation(pairs);
    } catch (const DegenerateInput& e) {
        j["n"] = pairs.size();
        j["error"] = {{"code", e.code()}, {"message", e.what()}};
    }
    return j;
}

nlohmann::json concentration_json(std::span<const TripObservation> obs, EntityRole role,
                                  std::optional<Category> category, std::size_t k) {
    return issue_concentration(obs, role, category, k);
}

void write_bundle(const MonthlyBundle& bundle, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& [name, content] : bundle.files) {
        const auto target = dir / name;
        const auto tmp = dir / (name + ".tmp");
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw StoreError("cannot write " + tmp.string());
            out << content;
            if (!out.flush()) throw StoreError("cannot write " + tmp.string());
        }
        std::filesystem::rename(tmp, target);
    }
}

Pipeline::Pipeline(Store& store, const PromptCatalog& catalog, ChatBackend* backend, PipelineOptions options)
    : store_(store), catalog_(catalog), backend_(backend), options_(std::move(options)) {}

std::optional<DeliveryResult> Pipeline::last_delivery() const {
    std::lock_guard lock(delivery_mutex_);
    return last_delivery_;
}

BatchRun Pipeline::run_daily_batch(Timestamp now) {
    std::unique_lock lock(batch_mutex_, std::try_to_lock);
    if (!lock.owns_lock()) throw Conflict("busy", "a batch run is already in progress");
    if (!backend_) throw ConfigError("no classification backend configured");

    BatchRun run;
    run.started_at = options_.clock();
    if (const auto last = store_.last_batch_run()) run.window_from = last->window_to;
    run.window_to = now;
    run.n_ingested = now > run.window_from ? store_.count_created_in(run.window_from, now) : 0;

    const auto pending = store_.pending_classification(now, options_.max_attempts);
    spdlog::info("batch: {} rows pending classification", pending.size());

    Classifier classifier(*backend_, catalog_,
                          ClassifierOptions{options_.variant, options_.retry, options_.temperature, options_.clock});
    const auto outcomes = classifier.classify_batch(pending, options_.parallelism);

    std::vector<StoreRow> classified;
    for (const auto& outcome : outcomes) {
        if (outcome.ok()) {
            store_.save_vector(*outcome.vector);
            ++run.n_classified;
            if (auto row = store_.get(outcome.record_id)) classified.push_back(std::move(*row));
            continue;
        }
        std::string error = outcome.error;
        if (error.empty() && outcome.vector) {
            error = "incomplete classification:";
            for (auto c : kAllCategories)
                if (!outcome.vector->label(c)) error += " " + std::string(category_name(c));
        }
        store_.record_failure(outcome.record_id, error, options_.max_attempts);
        ++run.n_failed;
        spdlog::warn("batch: record {} failed: {}", outcome.record_id, error);
    }

    run.finished_at = options_.clock();
    run.run_id = store_.insert_batch_run(run);
    spdlog::info("batch {}: {} classified, {} failed", run.run_id, run.n_classified, run.n_failed);

    if (!options_.webhook_url.empty()) {
        auto delivery = notify(options_.webhook_url, summarize(classified, date_of(now)), options_.webhook_retry);
        std::lock_guard dl(delivery_mutex_);
        last_delivery_ = std::move(delivery);
    }
    return run;
}

std::vector<StoredRewrite> Pipeline::generate_rewrites(std::span<const StoreRow> rows,
                                                       std::vector<std::string>* warnings) {
    std::vector<const StoreRow*> todo;
    for (const auto& row : rows)
        if (!store_.get_rewrite(row.record.record_id)) todo.push_back(&row);
    if (todo.empty()) return {};
    if (!backend_) {
        if (warnings) warnings->push_back("no backend configured: direction rewrites skipped");
        spdlog::warn("no backend configured: {} direction rewrites skipped", todo.size());
        return {};
    }
    if (catalog_.rewrite_prompt().empty()) throw ConfigError("direction rewrite prompt is missing");

    DirectionRewriter rewriter(*backend_, catalog_.rewrite_prompt(), RewriterOptions{options_.retry, options_.temperature});
    std::vector<std::optional<StoredRewrite>> made(todo.size());
    std::vector<std::string> errors(todo.size());
    parallel_for(todo.size(), options_.parallelism, [&](std::size_t i) {
        const auto& rec = todo[i]->record;
        StoredRewrite s;
        s.donor_id = rec.donor_id;
        s.recipient_id = rec.recipient_id;
        s.original = store_.directions_for(rec.donor_id, rec.recipient_id);
        s.month = format_timestamp(rec.created_at).substr(0, 7);
        s.created_at = options_.clock();
        try {
            s.rewrite = rewriter.rewrite(rec, s.original);
            made[i] = std::move(s);
        } catch (const Error& e) {
            errors[i] = rec.record_id + ": " + e.what();
        }
    });

    std::vector<StoredRewrite> out;
    for (std::size_t i = 0; i < todo.size(); ++i) {
        if (made[i]) {
            store_.upsert_rewrite(*made[i]);
            out.push_back(std::move(*made[i]));
        } else {
            spdlog::warn("rewrite failed for {}", errors[i]);
            if (warnings) warnings->push_back("rewrite failed for " + errors[i]);
        }
    }
    return out;
}

MonthlyBundle Pipeline::run_monthly_actions(const std::string& month) {
    const auto [begin, end] = month_window(month);
    MonthlyBundle b;
    b.month = month;

    const auto obs = store_.observations(end);
    b.donor_ranking = ranking(obs, EntityRole::Donor, options_.min_trips);
    b.recipient_ranking = ranking(obs, EntityRole::Recipient, options_.min_trips);

    const auto rows = store_.rows_between(begin, end);
    generate_rewrites(rows, &b.warnings);
    b.rewrites = store_.rewrites(std::nullopt, month);

    b.distribution = nlohmann::json::object();
    b.correlation = nlohmann::json::object();
    b.concentration = nlohmann::json::object();
    for (auto role : {EntityRole::Donor, EntityRole::Recipient}) {
        const std::string key(role_name(role));
        b.distribution[key] = distribution_json(obs, role, options_.min_trips, options_.bucket_width);
        b.correlation[key] = correlation_json(obs, role, options_.min_trips);
        auto per_category = nlohmann::json::object();
        per_category["any"] = concentration_json(obs, role, std::nullopt, options_.concentration_k);
        for (auto c : role_categories(role))
            per_category[std::string(category_name(c))] = concentration_json(obs, role, c, options_.concentration_k);
        b.concentration[key] = std::move(per_category);
    }

    const auto all = plain(b.rewrites);
    const auto apply = apply_report(all);
    const auto queue = review_queue(all);

    b.files["rankings_donor.csv"] = to_csv(b.donor_ranking);
    b.files["rankings_donor.json"] = dump(b.donor_ranking);
    b.files["rankings_recipient.csv"] = to_csv(b.recipient_ranking);
    b.files["rankings_recipient.json"] = dump(b.recipient_ranking);
    b.files["rewrites.json"] = dump(b.rewrites);
    b.files["rewrites.csv"] = rewrite_summary_csv(all);
    b.files["apply_report.json"] = dump(apply);
    b.files["review_queue.json"] = dump(queue);
    b.files["distribution.json"] = dump(b.distribution);
    b.files["correlation.json"] = dump(b.correlation);
    b.files["concentration.json"] = dump(b.concentration);

    std::size_t classified = 0;
    for (const auto& r : rows) classified += r.classified() ? 1 : 0;
    b.files["summary.json"] = dump({{"month", month},
                                    {"window", {{"from", format_timestamp(begin)}, {"to", format_timestamp(end)}}},
                                    {"min_trips", options_.min_trips},
                                    {"feedback_in_month", rows.size()},
                                    {"classified_in_month", classified},
                                    {"ranked_donors", b.donor_ranking.size()},
                                    {"ranked_recipients", b.recipient_ranking.size()},
                                    {"rewrites", all.size()},
                                    {"apply_report", apply.size()},
                                    {"review_queue", queue.size()},
                                    {"warnings", b.warnings}});
    return b;
}

}  // namespace feedtriage
