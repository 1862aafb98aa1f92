// Acceptance run: one PASS/FAIL line per criterion. Criterion 9 talks to a
// live endpoint and only runs when FEEDTRIAGE_LIVE_URL, FEEDTRIAGE_LIVE_MODEL
// and FEEDTRIAGE_LIVE_TOKEN are set; it never affects the exit code.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include <spdlog/spdlog.h>

#include "feedtriage/api_server.hpp"
#include "feedtriage/errors.hpp"
#include "feedtriage/evaluation.hpp"
#include "feedtriage/ingest.hpp"
#include "feedtriage/pipeline.hpp"
#include "test_support.hpp"

using namespace feedtriage;
using namespace feedtriage::testing;
using nlohmann::json;

namespace {

class Checks {
public:
    void expect(bool ok, const std::string& what) {
        ++n_;
        if (!ok && failures_.size() < 5) failures_.push_back(what);
        if (!ok) ++failed_;
    }
    [[nodiscard]] bool ok() const { return failed_ == 0; }
    [[nodiscard]] std::string detail() const {
        std::string s = std::to_string(n_ - failed_) + "/" + std::to_string(n_) + " checks";
        for (const auto& f : failures_) s += "\n      " + f;
        return s;
    }

private:
    std::size_t n_ = 0, failed_ = 0;
    std::vector<std::string> failures_;
};

template <typename Fn>
void expect_throws(Checks& c, Fn&& fn, const std::string& what) {
    try {
        fn();
        c.expect(false, what + ": no exception");
    } catch (const DegenerateInput&) {
        c.expect(true, what);
    } catch (const std::exception& e) {
        c.expect(false, what + ": wrong exception " + e.what());
    }
}

// 1. Scoring against the brute-force oracle.
Checks scoring_oracle() {
    Checks c;
    const auto start = std::chrono::steady_clock::now();
    for (std::uint32_t seed = 1; seed <= 5; ++seed) {
        const auto obs = random_observations(seed, 2000, 50);
        for (const auto& o : obs)
            c.expect(trip_flag(o) == oracle::trip_flag(o), "trip_flag differs on " + o.record_id);
        std::map<std::pair<EntityRole, std::string>, std::vector<TripObservation>> groups;
        for (const auto& o : obs) groups[{o.role, o.entity_id}].push_back(o);
        for (const auto& [key, group] : groups) {
            const auto s = score_entity(group);
            const auto [trips, flagged] = oracle::tally(obs, key.second, key.first);
            c.expect(s.n_trips == trips && s.n_flagged == flagged &&
                         s.score == static_cast<double>(flagged) / static_cast<double>(trips),
                     "score_entity differs for " + key.second);
        }
    }
    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    c.expect(elapsed < 5.0, "took " + std::to_string(elapsed) + " s");
    return c;
}

// 2. Metric fixtures.
Checks metric_fixtures() {
    Checks c;
    std::vector<bool> pred, gold;
    auto push = [&](bool p, bool g, int n) {
        for (int i = 0; i < n; ++i) {
            pred.push_back(p);
            gold.push_back(g);
        }
    };
    push(true, true, 2);
    push(true, false, 1);
    push(false, false, 7);
    const auto counts = confusion(pred, gold);
    c.expect(counts == ConfusionCounts{2, 1, 0, 7}, "confusion counts");
    const auto m = metrics(counts);
    c.expect(std::abs(m.accuracy - 0.9) <= 1e-12, "accuracy");
    c.expect(std::abs(m.precision - 2.0 / 3.0) <= 1e-12, "precision");
    c.expect(std::abs(m.recall - 1.0) <= 1e-12, "recall");
    c.expect(std::abs(m.f1 - 0.8) <= 1e-12, "f1");
    const double kappa = cohen_kappa({true, true, false, false}, {true, false, false, false});
    c.expect(std::abs(kappa - 0.5) <= 1e-12, "kappa = " + std::to_string(kappa));
    return c;
}

// 3. Worked examples through a replay backend.
Checks worked_example_replay() {
    Checks c;
    auto replay = ReplayBackend::load(worked_examples_replay());
    Classifier classifier(replay, catalog(), {PromptVariant::Full, no_delay(), 0.0, system_now});
    std::map<std::string, CategoryVector> vectors;
    for (const auto& r : worked_examples().records) vectors.emplace(r.record_id, classifier.classify(r));
    for (const auto& e : worked_examples().expected_labels) {
        const auto got = vectors.at(e.record_id).label(e.category);
        c.expect(got == e.label, e.record_id + " " + std::string(category_name(e.category)));
    }
    DirectionRewriter rewriter(replay, catalog().rewrite_prompt(), {no_delay(), 0.0});
    for (const auto& w : worked_examples().rewrites) {
        const auto got = rewriter.rewrite(w.record, w.directions);
        c.expect(got.donor_direction_change == w.expected.donor_direction_change &&
                     got.recipient_direction_change == w.expected.recipient_direction_change,
                 w.record.record_id + " change flags");
        c.expect(got.rewritten_donor_direction == w.expected.rewritten_donor_direction &&
                     got.rewritten_recipient_direction == w.expected.rewritten_recipient_direction,
                 w.record.record_id + " rewritten text");
    }
    return c;
}

// 4. Issue concentration on a constructed donor corpus.
Checks concentration() {
    Checks c;
    std::vector<TripObservation> obs;
    auto trip = [&](const std::string& donor, bool issue) {
        TripObservation o;
        o.record_id = "t" + std::to_string(obs.size());
        o.entity_id = donor;
        o.role = EntityRole::Donor;
        o.rating = 4;
        auto v = CategoryVector::all_false(o.record_id, "", Timestamp{}, "fixture");
        if (issue) v.set(Category::DonorProblem, true);
        o.vector = v;
        obs.push_back(std::move(o));
    };
    // 995 ordinary donors: 10 trips each, the first 500 with one issue.
    for (int d = 0; d < 995; ++d)
        for (int t = 0; t < 10; ++t) trip("donor" + std::to_string(1000 + d), d < 500 && t == 0);
    // 5 problem donors: 50 trips each, 45 with issues.
    const std::set<std::string> heavy = {"heavy1", "heavy2", "heavy3", "heavy4", "heavy5"};
    for (const auto& d : heavy)
        for (int t = 0; t < 50; ++t) trip(d, t < 45);

    const double trip_share = 250.0 / static_cast<double>(obs.size());
    c.expect(trip_share > 0.02 && trip_share < 0.03, "heavy trip share " + std::to_string(trip_share));
    const auto report = issue_concentration(obs, EntityRole::Donor, std::nullopt, 5);
    c.expect(report.total_issues == 725, "total issues " + std::to_string(report.total_issues));
    c.expect(report.top_share() >= 0.30, "top-5 share " + std::to_string(report.top_share()));
    std::set<std::string> top;
    for (const auto& e : report.top_entities) top.insert(e.entity_id);
    c.expect(top == heavy, "top-5 entities");

    const auto ranked = rank_entities(score_entities(obs), 10);
    c.expect(ranked.size() == 1000, "ranked donors");
    std::set<std::string> first;
    for (std::size_t i = 0; i < 5 && i < ranked.size(); ++i) first.insert(ranked[i].entity_id);
    c.expect(first == heavy, "heavy donors ranked first");
    return c;
}

// 5. Correlation.
Checks correlation() {
    Checks c;
    for (int n : {2, 3, 10, 100}) {
        std::vector<std::pair<double, double>> pairs;
        for (int i = 0; i < n; ++i) pairs.emplace_back(i / 10.0, 4.0 - 0.3 * i);
        const auto r = rating_correlation(pairs);
        c.expect(std::abs(r.r + 1.0) <= 1e-12 && std::abs(r.r_squared - 1.0) <= 1e-12,
                 "linear fixture n=" + std::to_string(n));
    }
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> score(0.0, 1.0), rating(1.0, 4.0);
    for (int f = 0; f < 100; ++f) {
        std::vector<std::pair<double, double>> pairs(3 + rng() % 60);
        for (auto& p : pairs) p = {score(rng), rating(rng)};
        const double got = rating_correlation(pairs).r;
        const double want = oracle::pearson(pairs);
        c.expect(std::abs(got - want) <= 1e-9, "random fixture " + std::to_string(f));
    }
    expect_throws(c, [] { (void)rating_correlation(std::vector<std::pair<double, double>>{{0.5, 3.0}}); }, "n = 1");
    expect_throws(
        c, [] { (void)rating_correlation(std::vector<std::pair<double, double>>{{0.5, 3.0}, {0.5, 2.0}, {0.5, 1.0}}); },
        "zero variance in x");
    expect_throws(
        c, [] { (void)rating_correlation(std::vector<std::pair<double, double>>{{0.1, 3.0}, {0.5, 3.0}}); },
        "zero variance in y");
    return c;
}

// 6. Idempotent ingest and batches; a note survives a killed process.
Checks durability() {
    Checks c;
    TempDir dir;
    const auto db = dir / "feedtriage.db";
    const auto feed = dir / "feed.csv";
    {
        std::ofstream out(feed);
        out << "record_id,trip_id,donor_id,donor_name,recipient_id,recipient_name,created_at,rating,comment\n";
        for (int i = 0; i < 20; ++i)
            out << "f" << i << ",t" << i << ",d" << i % 4 << ",Donor,r" << i % 3 << ",Recipient,2024-03-"
                << (10 + i % 10) << "T09:00:00Z," << 1 + i % 4 << ",comment " << i << "\n";
    }
    auto backend = labelling_backend([](const std::string& id, Category cat) {
        return cat == Category::UpdateContact && id.size() % 2 == 0;
    });
    PipelineOptions options;
    options.retry = no_delay();
    {
        auto store = Store::open(db);
        const auto first = ingest_file(*store, feed, std::nullopt, ts("2024-04-01T00:00:00Z"));
        const auto second = ingest_file(*store, feed, std::nullopt, ts("2024-04-01T00:00:00Z"));
        c.expect(first.ingested == 20, "first ingest adds 20");
        c.expect(second.ingested == 0 && second.duplicates == 20, "second ingest adds 0");
        c.expect(store->size() == 20, "store holds 20 rows");

        Pipeline pipeline(*store, catalog(), backend.get(), options);
        const auto run1 = pipeline.run_daily_batch(ts("2024-04-01T00:00:00Z"));
        const auto run2 = pipeline.run_daily_batch(ts("2024-04-01T00:00:00Z"));
        c.expect(run1.n_classified == 20, "first batch classifies 20");
        c.expect(run2.n_classified == 0 && run2.n_failed == 0, "second batch classifies 0");
        c.expect(backend->calls() == 20 * 7, "no record classified twice");
    }

    int ready[2];
    if (::pipe(ready) != 0) {
        c.expect(false, "pipe failed");
        return c;
    }
    std::cout.flush();
    const pid_t child = ::fork();
    if (child == 0) {
        ::close(ready[0]);
        auto store = Store::open(db);
        Pipeline pipeline(*store, catalog(), nullptr, options);
        ApiServer api(*store, pipeline, ApiOptions{});
        const auto res = api.handle({"POST", "/feedback/f3/note", {}, "", R"({"note": "call the manager", "author": "kim"})"});
        const char status = res.status == 200 ? 'y' : 'n';
        (void)!::write(ready[1], &status, 1);
        for (;;) ::pause();  // wait to be killed
    }
    ::close(ready[1]);
    char status = 'n';
    const bool got = ::read(ready[0], &status, 1) == 1;
    ::close(ready[0]);
    ::kill(child, SIGKILL);
    int wstatus = 0;
    ::waitpid(child, &wstatus, 0);
    c.expect(got && status == 'y', "note mutation acknowledged");
    c.expect(WIFSIGNALED(wstatus) && WTERMSIG(wstatus) == SIGKILL, "writer killed");

    auto reopened = Store::open(db);
    const auto row = reopened->get("f3");
    c.expect(row && row->annotation.note == "call the manager" && row->annotation.author == "kim",
             "note survives restart");
    c.expect(reopened->size() == 20, "row count survives restart");
    return c;
}

// 7. Ablation harness.
Checks ablation() {
    Checks c;
    auto replay = ReplayBackend::load(worked_examples_replay());
    // Without guidelines p03 is read as inadequate food; without examples p06
    // is no longer a recipient problem.
    replay.add("p03", "inadequate_food", label_reply("inadequate_food", true), PromptVariant::NoGuidelines);
    replay.add("p06", "recipient_problem", label_reply("recipient_problem", false), PromptVariant::NoFewShot);

    const auto& records = worked_examples().records;
    Classifier full(replay, catalog(), {PromptVariant::Full, no_delay(), 0.0, system_now});
    std::vector<GoldAnnotation> gold;
    std::map<std::string, CategoryVector> full_vectors;
    for (const auto& r : records) {
        const auto v = full.classify(r);
        full_vectors.emplace(r.record_id, v);
        GoldAnnotation g{r.record_id, {}, "consensus"};
        for (auto cat : kAllCategories) g.labels[index_of(cat)] = v.is_set(cat);
        gold.push_back(g);
    }

    const auto reports = run_ablation(records, gold, replay, catalog(), kAllVariants, {2, no_delay(), system_now});
    c.expect(reports.size() == 3, "one report per variant");

    // Which targets each override touches, from the label streams directly.
    auto stream = [](const CategoryVector& v, const std::string& target) {
        static const std::set<std::string> donor = {"InadequateFood", "EarlierPickup", "DonorProblem"};
        bool out = false;
        for (auto cat : kAllCategories) {
            const std::string name(category_name(cat));
            if (target == name || target == "AnyIssue" || (target == "DonorProblems" && donor.count(name)))
                out = out || v.is_set(cat);
        }
        return out;
    };
    const std::map<PromptVariant, std::pair<std::string, Category>> overrides = {
        {PromptVariant::NoGuidelines, {"p03", Category::InadequateFood}},
        {PromptVariant::NoFewShot, {"p06", Category::RecipientProblem}},
    };
    const auto& base = reports.at(PromptVariant::Full);
    for (const auto& target : eval_targets())
        c.expect(base.row(target).metrics.accuracy == 1.0, "Full variant agrees with its own table on " + target);
    for (const auto& [variant, change] : overrides) {
        auto flipped = full_vectors.at(change.first);
        flipped.set(change.second, !flipped.is_set(change.second));
        const auto& report = reports.at(variant);
        for (const auto& target : eval_targets()) {
            const bool expected = stream(flipped, target) != stream(full_vectors.at(change.first), target);
            const bool differs = report.row(target).counts != base.row(target).counts;
            c.expect(expected == differs, std::string(variant_name(variant)) + " row " + target);
        }
    }

    // Full prompts carry every section the ablated variants drop.
    for (auto cat : kAllCategories) {
        const auto& t = catalog().at(cat);
        const auto& record = records.front();
        const auto p_full = build_prompt(t, PromptVariant::Full, record);
        const auto p_nog = build_prompt(t, PromptVariant::NoGuidelines, record);
        const auto p_nof = build_prompt(t, PromptVariant::NoFewShot, record);
        const std::string name(category_name(cat));
        c.expect(p_full.find(kGuidelinesHeading) != std::string::npos && p_nog.find(kGuidelinesHeading) == std::string::npos,
                 name + " guidelines heading");
        c.expect(p_full.find(kExamplesHeading) != std::string::npos && p_nof.find(kExamplesHeading) == std::string::npos,
                 name + " examples heading");
        for (const auto& g : t.guidelines)
            c.expect(p_full.find(g) != std::string::npos && p_nog.find(g) == std::string::npos, name + " guideline text");
        for (const auto& e : t.few_shot) {
            const auto shown = render_rescue(e.donor, e.recipient, e.comment);
            c.expect(p_full.find(shown) != std::string::npos && p_nof.find(shown) == std::string::npos,
                     name + " example text");
        }
        c.expect(p_full.size() > p_nog.size() && p_full.size() > p_nof.size(), name + " strictly longer");
    }
    return c;
}

// 8. Additivity.
Checks additivity() {
    Checks c;
    std::vector<DirectionRewrite> all;
    for (const auto& w : worked_examples().rewrites) {
        if (w.expected.donor_direction_change)
            c.expect(validate_additivity(w.directions.donor_direction, w.expected.rewritten_donor_direction) ==
                         RewriteValidation::Passed,
                     w.record.record_id + " donor rewrite is additive");
        if (w.expected.recipient_direction_change)
            c.expect(validate_additivity(w.directions.recipient_direction, w.expected.rewritten_recipient_direction) ==
                         RewriteValidation::Passed,
                     w.record.record_id + " recipient rewrite is additive");
    }

    // Dropping any single word of an original direction is caught.
    std::mt19937 rng(8);
    for (const auto& w : worked_examples().rewrites) {
        for (const auto* original : {&w.directions.donor_direction, &w.directions.recipient_direction}) {
            std::istringstream words(*original);
            std::vector<std::string> tokens{std::istream_iterator<std::string>(words), {}};
            if (tokens.size() < 2) continue;
            for (std::size_t drop = 0; drop < tokens.size(); ++drop) {
                std::string shorter;
                for (std::size_t i = 0; i < tokens.size(); ++i)
                    if (i != drop) shorter += tokens[i] + " ";
                c.expect(validate_additivity(*original, shorter + "Note: added.") ==
                             RewriteValidation::AdditivityViolation,
                         w.record.record_id + " dropped word " + std::to_string(drop));
            }
        }
    }

    // Violating replies flow through the rewriter and never reach the apply report.
    ScriptedBackend backend([](const BackendRequest&, const CallContext& ctx) {
        const bool drop = ctx.record_id.back() % 2 == 0;
        return json{{"donor_direction_change", true},
                    {"rewritten_donor_direction", drop ? "Use the side door." : "Enter by the dock. Use the side door."},
                    {"recipient_direction_change", false},
                    {"rewritten_recipient_direction", ""},
                    {"explanation", "x"}}
            .dump();
    });
    DirectionRewriter rewriter(backend, catalog().rewrite_prompt(), {no_delay(), 0.0});
    for (int i = 0; i < 20; ++i) {
        auto r = rewriter.rewrite(make_record("w" + std::to_string(i), "Door moved"), {"Enter by the dock.", ""});
        if (i % 3 == 0) r.review_status = ReviewStatus::Accepted;
        all.push_back(std::move(r));
    }
    std::size_t violations = 0;
    for (const auto& r : all) violations += r.validation == RewriteValidation::AdditivityViolation;
    c.expect(violations == 10, "violations flagged: " + std::to_string(violations));
    const auto apply = apply_report(all);
    for (const auto& r : apply)
        c.expect(r.validation == RewriteValidation::Passed, r.record_id + " reached the apply report");
    c.expect(apply.size() == 10, "additive rewrites reach the apply report");
    c.expect(review_queue(all).size() == 10 - 4, "pending violations wait for review");
    return c;
}

// 9. Live smoke test.
std::optional<Checks> live_smoke(std::string& note) {
    const char* url = std::getenv("FEEDTRIAGE_LIVE_URL");
    const char* model = std::getenv("FEEDTRIAGE_LIVE_MODEL");
    const char* token = std::getenv("FEEDTRIAGE_LIVE_TOKEN");
    if (!url || !model || !token || !*url || !*model) {
        note = "set FEEDTRIAGE_LIVE_URL, FEEDTRIAGE_LIVE_MODEL and FEEDTRIAGE_LIVE_TOKEN to run";
        return std::nullopt;
    }
    Checks c;
    HttpChatBackend backend({url, model, token, 0.0, std::chrono::seconds{60}});
    Classifier classifier(backend, catalog(), {PromptVariant::Full, RetryPolicy{2, std::chrono::milliseconds{1000}}, 0.0,
                                               system_now});
    std::map<std::string, CategoryVector> vectors;
    std::ostringstream report;
    for (const auto& r : worked_examples().records) {
        try {
            vectors.emplace(r.record_id, classifier.classify(r));
        } catch (const Error& e) {
            report << "\n      " << r.record_id << ": " << e.what();
        }
    }
    std::size_t agree = 0;
    const auto& expected = worked_examples().expected_labels;
    for (const auto& e : expected) {
        const auto it = vectors.find(e.record_id);
        const auto got = it == vectors.end() ? std::nullopt : it->second.label(e.category);
        if (got == e.label) {
            ++agree;
        } else {
            report << "\n      " << e.record_id << " " << category_name(e.category) << ": expected "
                   << (e.label ? "true" : "false") << ", got " << (got ? (*got ? "true" : "false") : "none");
            if (it != vectors.end()) report << " (" << it->second.explanations[index_of(e.category)] << ")";
        }
    }
    const double share = static_cast<double>(agree) / static_cast<double>(expected.size());
    c.expect(share >= 0.8, "agreement " + std::to_string(agree) + "/" + std::to_string(expected.size()));
    note = "agreement " + std::to_string(agree) + "/" + std::to_string(expected.size()) + report.str();
    return c;
}

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::warn);
    struct Criterion {
        int id;
        const char* title;
        std::function<Checks()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "scoring oracle equivalence", scoring_oracle},
        {2, "metric fixtures", metric_fixtures},
        {3, "worked-example replay", worked_example_replay},
        {4, "issue concentration", concentration},
        {5, "rating correlation", correlation},
        {6, "pipeline idempotency and durability", durability},
        {7, "ablation harness", ablation},
        {8, "additivity validator", additivity},
    };
    bool all_ok = true;
    for (const auto& cr : criteria) {
        Checks result;
        try {
            result = cr.run();
        } catch (const std::exception& e) {
            result.expect(false, std::string("exception: ") + e.what());
        }
        all_ok = all_ok && result.ok();
        std::cout << "criterion " << cr.id << " " << (result.ok() ? "PASS" : "FAIL") << " " << cr.title << " ("
                  << result.detail() << ")" << std::endl;
    }

    std::string note;
    try {
        const auto live = live_smoke(note);
        if (!live) std::cout << "criterion 9 SKIP live smoke test (" << note << ")" << std::endl;
        else
            std::cout << "criterion 9 " << (live->ok() ? "PASS" : "FAIL") << " live smoke test, non-gating (" << note
                      << ")" << std::endl;
    } catch (const std::exception& e) {
        std::cout << "criterion 9 FAIL live smoke test, non-gating (" << e.what() << ")" << std::endl;
    }
    return all_ok ? 0 : 1;
}
