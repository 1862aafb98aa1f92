#pragma once

#include <array>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "feedtriage/backend.hpp"
#include "feedtriage/classifier.hpp"
#include "feedtriage/domain.hpp"
#include "feedtriage/prompts.hpp"

namespace feedtriage {

struct GoldAnnotation {
    std::string record_id;
    std::array<bool, kCategoryCount> labels{};
    std::string annotator;

    [[nodiscard]] bool label(Category c) const noexcept { return labels[index_of(c)]; }
};

inline constexpr std::string_view kConsensusAnnotator = "consensus";

/// Gold CSV: `record_id,annotator,<one column per category name>` with
/// true/false cells. Column order is free; every category must be present.
std::vector<GoldAnnotation> read_gold_csv(std::istream& in);
std::vector<GoldAnnotation> read_gold_csv(const std::filesystem::path& path);
std::string write_gold_csv(std::span<const GoldAnnotation> gold);

std::vector<GoldAnnotation> by_annotator(std::span<const GoldAnnotation> gold, std::string_view annotator);

struct ConfusionCounts {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

    [[nodiscard]] std::size_t total() const noexcept { return tp + fp + fn + tn; }
    bool operator==(const ConfusionCounts&) const = default;
};

struct Metrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// "true" is the positive class. Throws ValidationError on length mismatch or empty input.
ConfusionCounts confusion(const std::vector<bool>& predictions, const std::vector<bool>& gold);

/// Zero denominators give 0 for precision, recall and F1. Throws
/// ValidationError when the counts are all zero.
Metrics metrics(const ConfusionCounts& c);

/// Cohen's kappa between two raters. When chance agreement is 1 the result
/// is 1 if the raters agree everywhere; otherwise DegenerateInput.
double cohen_kappa(const std::vector<bool>& a, const std::vector<bool>& b);

/// OR of InadequateFood, EarlierPickup and DonorProblem.
bool donor_problems_rollup(const CategoryVector& v);
bool donor_problems_rollup(const GoldAnnotation& g) noexcept;

/// Row order of an EvalReport: AnyIssue, DonorProblems, then the seven categories.
inline constexpr std::string_view kAnyIssueTarget = "AnyIssue";
inline constexpr std::string_view kDonorProblemsTarget = "DonorProblems";
std::vector<std::string> eval_targets();

struct TargetResult {
    std::string target;
    ConfusionCounts counts;
    Metrics metrics;
};

struct EvalReport {
    std::string backend_id;
    std::string variant;
    std::size_t n = 0;         // records evaluated
    std::size_t n_failed = 0;  // gold records without a complete prediction
    std::vector<TargetResult> rows;

    /// Throws NotFound for an unknown target.
    [[nodiscard]] const TargetResult& row(std::string_view target) const;
};

/// Joins predictions to gold by record_id. Records whose prediction is
/// missing or incomplete are counted in n_failed and left out of every row.
EvalReport evaluate(std::span<const CategoryVector> predictions, std::span<const GoldAnnotation> gold,
                    std::string backend_id, std::string variant);

/// Single AnyIssue row from per-record booleans, for baselines that only
/// predict any-issue.
EvalReport evaluate_any_issue(const std::map<std::string, bool>& predictions, std::span<const GoldAnnotation> gold,
                              std::string backend_id);

struct AblationOptions {
    std::size_t parallelism = 4;
    RetryPolicy retry{};
    Clock clock = system_now;
};

/// Classifies `records` once per variant and evaluates each run against `gold`.
std::map<PromptVariant, EvalReport> run_ablation(std::span<const FeedbackRecord> records,
                                                 std::span<const GoldAnnotation> gold, ChatBackend& backend,
                                                 const PromptCatalog& catalog, std::span<const PromptVariant> variants,
                                                 const AblationOptions& options = {});

struct AgreementReport {
    std::size_t n = 0;
    std::array<std::optional<double>, kCategoryCount> per_category{};  // empty when degenerate
    std::optional<double> pooled;                                     // all categories concatenated
};

/// Kappa between two annotators over the records both labelled.
AgreementReport annotator_agreement(std::span<const GoldAnnotation> gold, std::string_view annotator_a,
                                    std::string_view annotator_b);

/// `target,n,tp,fp,fn,tn,accuracy,precision,recall,f1`
std::string to_csv(const EvalReport& report);
void to_json(nlohmann::json& j, const EvalReport& report);
void to_json(nlohmann::json& j, const AgreementReport& report);

}  // namespace feedtriage
