#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "feedtriage/errors.hpp"
#include "feedtriage/evaluation.hpp"
#include "test_support.hpp"

using namespace feedtriage;
using namespace feedtriage::testing;

namespace {

std::vector<bool> random_bools(std::mt19937& rng, std::size_t n) {
    std::vector<bool> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = rng() % 2;
    return v;
}

GoldAnnotation gold(std::string id, std::initializer_list<Category> positives, std::string annotator = "consensus") {
    GoldAnnotation g;
    g.record_id = std::move(id);
    g.annotator = std::move(annotator);
    for (auto c : positives) g.labels[index_of(c)] = true;
    return g;
}

CategoryVector prediction(std::string id, std::initializer_list<Category> positives) {
    auto v = CategoryVector::all_false(std::move(id), "", Timestamp{}, "t");
    for (auto c : positives) v.set(c, true);
    return v;
}

}  // namespace

TEST(Confusion, Examples) {
    EXPECT_EQ(confusion({true, false}, {true, false}), (ConfusionCounts{1, 0, 0, 1}));
    EXPECT_EQ(confusion({true}, {false}), (ConfusionCounts{0, 1, 0, 0}));
    EXPECT_THROW((void)confusion({true}, {true, false}), ValidationError);
    EXPECT_THROW((void)confusion({}, {}), ValidationError);
}

TEST(Confusion, MatchesBruteForceTally) {
    std::mt19937 rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        const auto p = random_bools(rng, 10), g = random_bools(rng, 10);
        std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
        for (std::size_t i = 0; i < 10; ++i) {
            if (p[i] && g[i]) ++tp;
            if (p[i] && !g[i]) ++fp;
            if (!p[i] && g[i]) ++fn;
            if (!p[i] && !g[i]) ++tn;
        }
        EXPECT_EQ(confusion(p, g), (ConfusionCounts{tp, fp, fn, tn}));
    }
}

TEST(Metrics, HandDerivedFixture) {
    const auto m = metrics({2, 1, 0, 7});
    EXPECT_NEAR(m.accuracy, 0.9, 1e-12);
    EXPECT_NEAR(m.precision, 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(m.recall, 1.0, 1e-12);
    EXPECT_NEAR(m.f1, 0.8, 1e-12);
}

TEST(Metrics, Conventions) {
    const auto all = metrics({3, 0, 0, 4});
    EXPECT_EQ(all.accuracy, 1.0);
    EXPECT_EQ(all.precision, 1.0);
    EXPECT_EQ(all.recall, 1.0);
    EXPECT_EQ(all.f1, 1.0);
    const auto none = metrics({0, 0, 2, 3});
    EXPECT_EQ(none.precision, 0.0);
    EXPECT_EQ(none.recall, 0.0);
    EXPECT_EQ(none.f1, 0.0);
    EXPECT_THROW((void)metrics({0, 0, 0, 0}), ValidationError);
}

TEST(Metrics, MatchBruteForceOnRandomFixtures) {
    std::mt19937 rng(12);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + rng() % 30;
        const auto p = random_bools(rng, n), g = random_bools(rng, n);
        double correct = 0, pred_pos = 0, gold_pos = 0, both = 0;
        for (std::size_t i = 0; i < n; ++i) {
            correct += p[i] == g[i];
            pred_pos += p[i];
            gold_pos += g[i];
            both += p[i] && g[i];
        }
        const double prec = pred_pos ? both / pred_pos : 0.0;
        const double rec = gold_pos ? both / gold_pos : 0.0;
        const double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
        const auto m = metrics(confusion(p, g));
        EXPECT_NEAR(m.accuracy, correct / static_cast<double>(n), 1e-12);
        EXPECT_NEAR(m.precision, prec, 1e-12);
        EXPECT_NEAR(m.recall, rec, 1e-12);
        EXPECT_NEAR(m.f1, f1, 1e-12);
    }
}

TEST(Kappa, Examples) {
    EXPECT_EQ(cohen_kappa({true, false, true}, {true, false, true}), 1.0);
    EXPECT_NEAR(cohen_kappa({true, true, false, false}, {true, false, false, false}), 0.5, 1e-12);
    // Marginals 1/2 each, agreement 1/2 -> p_o = p_e.
    EXPECT_NEAR(cohen_kappa({true, true, false, false}, {true, false, true, false}), 0.0, 1e-12);
    EXPECT_EQ(cohen_kappa({true, true}, {true, true}), 1.0);
    EXPECT_THROW((void)cohen_kappa({true}, {true, false}), ValidationError);
    EXPECT_THROW((void)cohen_kappa({}, {}), ValidationError);
}

TEST(Kappa, IsSymmetric) {
    std::mt19937 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng() % 20;
        const auto a = random_bools(rng, n), b = random_bools(rng, n);
        try {
            EXPECT_DOUBLE_EQ(cohen_kappa(a, b), cohen_kappa(b, a));
        } catch (const DegenerateInput&) {
            EXPECT_THROW((void)cohen_kappa(b, a), DegenerateInput);
        }
    }
}

TEST(Rollup, Examples) {
    EXPECT_TRUE(donor_problems_rollup(prediction("a", {Category::EarlierPickup})));
    EXPECT_FALSE(donor_problems_rollup(prediction("a", {Category::RecipientProblem})));
    EXPECT_TRUE(donor_problems_rollup(prediction("a", {Category::DonorProblem})));
    EXPECT_TRUE(donor_problems_rollup(gold("a", {Category::InadequateFood})));
    CategoryVector incomplete;
    EXPECT_THROW((void)donor_problems_rollup(incomplete), ContractViolation);
}

TEST(Rollup, ImpliedByAnyConstituent) {
    std::mt19937 rng(6);
    for (int trial = 0; trial < 200; ++trial) {
        auto v = prediction("x", {});
        for (auto c : kAllCategories) v.set(c, rng() % 3 == 0);
        const bool constituent = v.is_set(Category::InadequateFood) || v.is_set(Category::EarlierPickup) ||
                                 v.is_set(Category::DonorProblem);
        EXPECT_EQ(donor_problems_rollup(v), constituent);
    }
}

TEST(Evaluate, RowsAndFailures) {
    const std::vector<GoldAnnotation> g = {gold("a", {Category::InadequateFood}), gold("b", {}),
                                           gold("c", {Category::RecipientProblem}), gold("d", {})};
    std::vector<CategoryVector> p = {prediction("a", {Category::InadequateFood}), prediction("b", {}),
                                     prediction("c", {Category::DonorProblem})};
    auto incomplete = prediction("d", {});
    incomplete.labels[0].reset();
    p.push_back(incomplete);

    const auto report = evaluate(p, g, "replay/x/Full", "Full");
    EXPECT_EQ(report.n, 3u);
    EXPECT_EQ(report.n_failed, 1u);
    EXPECT_EQ(report.rows.size(), 9u);
    EXPECT_EQ(report.rows[0].target, "AnyIssue");
    EXPECT_EQ(report.rows[1].target, "DonorProblems");
    EXPECT_EQ(report.row("AnyIssue").counts, (ConfusionCounts{2, 0, 0, 1}));
    EXPECT_EQ(report.row("DonorProblems").counts, (ConfusionCounts{1, 1, 0, 1}));
    EXPECT_EQ(report.row("RecipientProblem").counts, (ConfusionCounts{0, 0, 1, 2}));
    EXPECT_THROW((void)report.row("Nope"), NotFound);

    const auto csv = to_csv(report);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "target,n,tp,fp,fn,tn,accuracy,precision,recall,f1");
    const nlohmann::json j = report;
    EXPECT_EQ(j["backend_id"], "replay/x/Full");
}

TEST(Evaluate, AnyIssueAgreesWithOrReducedStreams) {
    std::mt19937 rng(8);
    std::vector<GoldAnnotation> g;
    std::vector<CategoryVector> p;
    std::map<std::string, bool> reduced;
    for (int i = 0; i < 60; ++i) {
        const auto id = "r" + std::to_string(i);
        auto gi = gold(id, {});
        auto pi = prediction(id, {});
        for (auto c : kAllCategories) {
            gi.labels[index_of(c)] = rng() % 5 == 0;
            pi.set(c, rng() % 5 == 0);
        }
        reduced[id] = any_issue(pi);
        g.push_back(gi);
        p.push_back(pi);
    }
    const auto full = evaluate(p, g, "b", "Full");
    const auto any = evaluate_any_issue(reduced, g, "b");
    EXPECT_EQ(full.row("AnyIssue").counts, any.row("AnyIssue").counts);
}

TEST(GoldCsv, RoundTripsAndRejectsBadInput) {
    std::vector<GoldAnnotation> g = {gold("a", {Category::SystemProblem}, "alice"), gold("a", {}, "bob")};
    const auto text = write_gold_csv(g);
    std::istringstream in(text);
    const auto back = read_gold_csv(in);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].annotator, "alice");
    EXPECT_TRUE(back[0].label(Category::SystemProblem));
    EXPECT_EQ(by_annotator(back, "bob").size(), 1u);

    std::istringstream missing("record_id,annotator,InadequateFood\na,x,true\n");
    EXPECT_THROW((void)read_gold_csv(missing), ValidationError);
    std::istringstream empty("");
    EXPECT_THROW((void)read_gold_csv(empty), ValidationError);
    auto bad = text;
    bad.replace(bad.find("true"), 4, "yes!");
    std::istringstream bad_in(bad);
    EXPECT_THROW((void)read_gold_csv(bad_in), ValidationError);
}

TEST(Agreement, PerCategoryAndPooled) {
    std::vector<GoldAnnotation> g = {
        gold("1", {Category::InadequateFood}, "a"), gold("1", {Category::InadequateFood}, "b"),
        gold("2", {Category::InadequateFood}, "a"), gold("2", {}, "b"),
        gold("3", {}, "a"),                         gold("3", {}, "b"),
        gold("4", {}, "a"),                         gold("4", {}, "b"),
    };
    const auto r = annotator_agreement(g, "a", "b");
    EXPECT_EQ(r.n, 4u);
    ASSERT_TRUE(r.per_category[index_of(Category::InadequateFood)]);
    EXPECT_NEAR(*r.per_category[index_of(Category::InadequateFood)], 0.5, 1e-12);
    // All-false on both sides: p_e = 1 with full agreement -> 1.
    EXPECT_EQ(r.per_category[index_of(Category::SystemProblem)], 1.0);
    ASSERT_TRUE(r.pooled);
    EXPECT_THROW((void)annotator_agreement(g, "a", "zed"), ValidationError);
}

TEST(Ablation, VariantIndependentBackendGivesIdenticalReports) {
    auto backend = labelling_backend([](const std::string& id, Category c) {
        return c == Category::DonorProblem && id.back() % 2 == 0;
    });
    std::vector<FeedbackRecord> records;
    std::vector<GoldAnnotation> g;
    for (int i = 0; i < 6; ++i) {
        records.push_back(make_record("r" + std::to_string(i), "comment " + std::to_string(i)));
        g.push_back(gold("r" + std::to_string(i), i % 3 == 0 ? std::initializer_list<Category>{Category::DonorProblem}
                                                               : std::initializer_list<Category>{}));
    }
    const auto reports =
        run_ablation(records, g, *backend, catalog(), kAllVariants, {2, no_delay(), system_now});
    ASSERT_EQ(reports.size(), 3u);
    for (const auto& [variant, report] : reports) {
        EXPECT_EQ(report.variant, variant_name(variant));
        for (std::size_t i = 0; i < report.rows.size(); ++i)
            EXPECT_EQ(report.rows[i].counts, reports.at(PromptVariant::Full).rows[i].counts);
    }
    EXPECT_EQ(reports.at(PromptVariant::NoFewShot).backend_id, "scripted/scripted/NoFewShot");

    EXPECT_TRUE(run_ablation(records, g, *backend, catalog(), std::span<const PromptVariant>{}).empty());
    EXPECT_THROW((void)run_ablation({}, g, *backend, catalog(), kAllVariants), ValidationError);
}

TEST(Ablation, VariantKeyedReplayDiffersWhereTablesDiffer) {
    ReplayBackend replay("ablation");
    std::vector<FeedbackRecord> records;
    std::vector<GoldAnnotation> g;
    for (int i = 0; i < 4; ++i) {
        const auto id = "r" + std::to_string(i);
        records.push_back(make_record(id, "comment"));
        g.push_back(gold(id, {Category::SystemProblem}));
        for (auto c : kAllCategories)
            replay.add(id, std::string(category_field(c)),
                       label_reply(category_field(c), c == Category::SystemProblem));
    }
    // Without guidelines, r0 misses its SystemProblem label.
    replay.add("r0", "system_problem", label_reply("system_problem", false), PromptVariant::NoGuidelines);

    const auto reports = run_ablation(records, g, replay, catalog(), kAllVariants, {1, no_delay(), system_now});
    const auto& full = reports.at(PromptVariant::Full);
    const auto& ablated = reports.at(PromptVariant::NoGuidelines);
    EXPECT_EQ(full.row("SystemProblem").counts, (ConfusionCounts{4, 0, 0, 0}));
    EXPECT_EQ(ablated.row("SystemProblem").counts, (ConfusionCounts{3, 0, 1, 0}));
    for (const auto& target : eval_targets()) {
        const bool differs = full.row(target).counts != ablated.row(target).counts;
        EXPECT_EQ(differs, target == "SystemProblem" || target == "AnyIssue") << target;
        EXPECT_EQ(reports.at(PromptVariant::NoFewShot).row(target).counts, full.row(target).counts) << target;
    }
}
