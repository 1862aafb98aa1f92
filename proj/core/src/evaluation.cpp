#include "feedtriage/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "feedtriage/csv.hpp"
#include "feedtriage/errors.hpp"

namespace feedtriage {

using nlohmann::json;

namespace {

bool parse_bool_cell(const std::string& cell, std::size_t line) {
    std::string lower;
    for (char c : cell) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (lower == "true" || lower == "1") return true;
    if (lower == "false" || lower == "0") return false;
    throw ValidationError("line " + std::to_string(line) + ": expected true/false, got '" + cell + "'");
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

std::vector<GoldAnnotation> read_gold_csv(std::istream& in) {
    csv::Reader reader(in);
    const auto header = reader.next();
    if (!header) throw ValidationError("gold file is empty");

    std::optional<std::size_t> id_col, annotator_col;
    std::array<std::optional<std::size_t>, kCategoryCount> category_cols{};
    for (std::size_t i = 0; i < header->size(); ++i) {
        const auto& name = (*header)[i];
        if (name == "record_id") id_col = i;
        else if (name == "annotator") annotator_col = i;
        else if (auto c = parse_category(name)) category_cols[index_of(*c)] = i;
    }
    std::vector<std::string> missing;
    if (!id_col) missing.emplace_back("record_id");
    if (!annotator_col) missing.emplace_back("annotator");
    for (auto c : kAllCategories)
        if (!category_cols[index_of(c)]) missing.emplace_back(category_name(c));
    if (!missing.empty()) {
        std::string list;
        for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
        throw ValidationError("gold file is missing columns: " + list);
    }

    std::vector<GoldAnnotation> out;
    while (auto row = reader.next()) {
        if (row->size() == 1 && row->front().empty()) continue;
        if (row->size() != header->size())
            throw ValidationError("line " + std::to_string(reader.line()) + ": expected " +
                                  std::to_string(header->size()) + " fields, got " + std::to_string(row->size()));
        GoldAnnotation g;
        g.record_id = (*row)[*id_col];
        g.annotator = (*row)[*annotator_col];
        for (auto c : kAllCategories) g.labels[index_of(c)] = parse_bool_cell((*row)[*category_cols[index_of(c)]], reader.line());
        out.push_back(std::move(g));
    }
    return out;
}

std::vector<GoldAnnotation> read_gold_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read gold file " + path.string());
    return read_gold_csv(in);
}

std::string write_gold_csv(std::span<const GoldAnnotation> gold) {
    std::vector<std::string> header{"record_id", "annotator"};
    for (auto c : kAllCategories) header.emplace_back(category_name(c));
    std::string out = csv::join_row(header) + "\n";
    for (const auto& g : gold) {
        std::vector<std::string> row{g.record_id, g.annotator};
        for (auto c : kAllCategories) row.emplace_back(g.label(c) ? "true" : "false");
        out += csv::join_row(row) + "\n";
    }
    return out;
}

std::vector<GoldAnnotation> by_annotator(std::span<const GoldAnnotation> gold, std::string_view annotator) {
    std::vector<GoldAnnotation> out;
    std::copy_if(gold.begin(), gold.end(), std::back_inserter(out),
                 [&](const GoldAnnotation& g) { return g.annotator == annotator; });
    return out;
}

ConfusionCounts confusion(const std::vector<bool>& predictions, const std::vector<bool>& gold) {
    if (predictions.size() != gold.size())
        throw ValidationError("confusion: " + std::to_string(predictions.size()) + " predictions vs " +
                              std::to_string(gold.size()) + " gold labels");
    if (predictions.empty()) throw ValidationError("confusion: no labels");
    ConfusionCounts c;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (predictions[i] && gold[i]) ++c.tp;
        else if (predictions[i]) ++c.fp;
        else if (gold[i]) ++c.fn;
        else ++c.tn;
    }
    return c;
}

Metrics metrics(const ConfusionCounts& c) {
    const auto total = c.total();
    if (total == 0) throw ValidationError("metrics: empty confusion counts");
    Metrics m;
    m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(total);
    m.precision = c.tp + c.fp ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
    m.recall = c.tp + c.fn ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

double cohen_kappa(const std::vector<bool>& a, const std::vector<bool>& b) {
    if (a.size() != b.size()) throw ValidationError("cohen_kappa: rater lists differ in length");
    if (a.empty()) throw ValidationError("cohen_kappa: no ratings");
    const auto n = static_cast<double>(a.size());
    double agree = 0, a_true = 0, b_true = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == b[i]) ++agree;
        if (a[i]) ++a_true;
        if (b[i]) ++b_true;
    }
    const double p_o = agree / n;
    const double p_e = (a_true / n) * (b_true / n) + (1.0 - a_true / n) * (1.0 - b_true / n);
    if (p_e == 1.0) {
        if (p_o == 1.0) return 1.0;
        throw DegenerateInput("cohen_kappa: chance agreement is 1 but raters disagree");
    }
    return (p_o - p_e) / (1.0 - p_e);
}

bool donor_problems_rollup(const CategoryVector& v) {
    for (auto c : {Category::InadequateFood, Category::EarlierPickup, Category::DonorProblem})
        if (!v.label(c)) throw ContractViolation("donor_problems_rollup on incomplete vector for '" + v.record_id + "'");
    return v.is_set(Category::InadequateFood) || v.is_set(Category::EarlierPickup) || v.is_set(Category::DonorProblem);
}

bool donor_problems_rollup(const GoldAnnotation& g) noexcept {
    return g.label(Category::InadequateFood) || g.label(Category::EarlierPickup) || g.label(Category::DonorProblem);
}

std::vector<std::string> eval_targets() {
    std::vector<std::string> out{std::string(kAnyIssueTarget), std::string(kDonorProblemsTarget)};
    for (auto c : kAllCategories) out.emplace_back(category_name(c));
    return out;
}

const TargetResult& EvalReport::row(std::string_view target) const {
    for (const auto& r : rows)
        if (r.target == target) return r;
    throw NotFound("no evaluation row for target '" + std::string(target) + "'");
}

namespace {

TargetResult make_row(std::string target, const std::vector<bool>& pred, const std::vector<bool>& gold) {
    TargetResult r{std::move(target), {}, {}};
    if (pred.empty()) return r;
    r.counts = confusion(pred, gold);
    r.metrics = metrics(r.counts);
    return r;
}

}  // namespace

EvalReport evaluate(std::span<const CategoryVector> predictions, std::span<const GoldAnnotation> gold,
                    std::string backend_id, std::string variant) {
    std::map<std::string, const CategoryVector*> by_id;
    for (const auto& p : predictions) by_id[p.record_id] = &p;

    const auto targets = eval_targets();
    std::vector<std::vector<bool>> pred(targets.size()), truth(targets.size());
    EvalReport report;
    report.backend_id = std::move(backend_id);
    report.variant = std::move(variant);

    for (const auto& g : gold) {
        const auto it = by_id.find(g.record_id);
        if (it == by_id.end() || !it->second->complete()) {
            ++report.n_failed;
            continue;
        }
        const auto& v = *it->second;
        ++report.n;
        pred[0].push_back(any_issue(v));
        truth[0].push_back(std::any_of(g.labels.begin(), g.labels.end(), [](bool b) { return b; }));
        pred[1].push_back(donor_problems_rollup(v));
        truth[1].push_back(donor_problems_rollup(g));
        for (auto c : kAllCategories) {
            pred[2 + index_of(c)].push_back(v.is_set(c));
            truth[2 + index_of(c)].push_back(g.label(c));
        }
    }
    for (std::size_t t = 0; t < targets.size(); ++t) report.rows.push_back(make_row(targets[t], pred[t], truth[t]));
    return report;
}

EvalReport evaluate_any_issue(const std::map<std::string, bool>& predictions, std::span<const GoldAnnotation> gold,
                              std::string backend_id) {
    EvalReport report;
    report.backend_id = std::move(backend_id);
    report.variant = "n/a";
    std::vector<bool> pred, truth;
    for (const auto& g : gold) {
        const auto it = predictions.find(g.record_id);
        if (it == predictions.end()) {
            ++report.n_failed;
            continue;
        }
        ++report.n;
        pred.push_back(it->second);
        truth.push_back(std::any_of(g.labels.begin(), g.labels.end(), [](bool b) { return b; }));
    }
    report.rows.push_back(make_row(std::string(kAnyIssueTarget), pred, truth));
    return report;
}

std::map<PromptVariant, EvalReport> run_ablation(std::span<const FeedbackRecord> records,
                                                 std::span<const GoldAnnotation> gold, ChatBackend& backend,
                                                 const PromptCatalog& catalog, std::span<const PromptVariant> variants,
                                                 const AblationOptions& options) {
    if (records.empty() && !variants.empty()) throw ValidationError("run_ablation: empty corpus");
    std::map<PromptVariant, EvalReport> out;
    for (auto variant : variants) {
        Classifier classifier(backend, catalog, {variant, options.retry, 0.0, options.clock});
        std::vector<CategoryVector> predictions;
        for (auto& outcome : classifier.classify_batch(records, options.parallelism))
            if (outcome.vector) predictions.push_back(std::move(*outcome.vector));
        out.emplace(variant,
                    evaluate(predictions, gold, classifier.backend_id(), std::string(variant_name(variant))));
    }
    return out;
}

AgreementReport annotator_agreement(std::span<const GoldAnnotation> gold, std::string_view annotator_a,
                                    std::string_view annotator_b) {
    std::map<std::string, const GoldAnnotation*> first;
    for (const auto& g : gold)
        if (g.annotator == annotator_a) first[g.record_id] = &g;

    std::array<std::vector<bool>, kCategoryCount> a, b;
    std::vector<bool> pooled_a, pooled_b;
    AgreementReport report;
    for (const auto& g : gold) {
        if (g.annotator != annotator_b) continue;
        const auto it = first.find(g.record_id);
        if (it == first.end()) continue;
        ++report.n;
        for (auto c : kAllCategories) {
            a[index_of(c)].push_back(it->second->label(c));
            b[index_of(c)].push_back(g.label(c));
            pooled_a.push_back(it->second->label(c));
            pooled_b.push_back(g.label(c));
        }
    }
    if (report.n == 0) throw ValidationError("annotators share no records");
    auto safe_kappa = [](const std::vector<bool>& x, const std::vector<bool>& y) -> std::optional<double> {
        try {
            return cohen_kappa(x, y);
        } catch (const DegenerateInput&) {
            return std::nullopt;
        }
    };
    for (auto c : kAllCategories) report.per_category[index_of(c)] = safe_kappa(a[index_of(c)], b[index_of(c)]);
    report.pooled = safe_kappa(pooled_a, pooled_b);
    return report;
}

std::string to_csv(const EvalReport& report) {
    std::string out = "target,n,tp,fp,fn,tn,accuracy,precision,recall,f1\n";
    for (const auto& r : report.rows) {
        out += csv::join_row({r.target, std::to_string(r.counts.total()), std::to_string(r.counts.tp),
                              std::to_string(r.counts.fp), std::to_string(r.counts.fn), std::to_string(r.counts.tn),
                              fmt(r.metrics.accuracy), fmt(r.metrics.precision), fmt(r.metrics.recall),
                              fmt(r.metrics.f1)});
        out += '\n';
    }
    return out;
}

void to_json(json& j, const EvalReport& report) {
    json rows = json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"target", r.target},
                        {"tp", r.counts.tp},
                        {"fp", r.counts.fp},
                        {"fn", r.counts.fn},
                        {"tn", r.counts.tn},
                        {"accuracy", r.metrics.accuracy},
                        {"precision", r.metrics.precision},
                        {"recall", r.metrics.recall},
                        {"f1", r.metrics.f1}});
    }
    j = {{"backend_id", report.backend_id},
         {"variant", report.variant},
         {"n", report.n},
         {"n_failed", report.n_failed},
         {"rows", std::move(rows)}};
}

void to_json(json& j, const AgreementReport& report) {
    json per = json::object();
    for (auto c : kAllCategories) {
        const auto& k = report.per_category[index_of(c)];
        per[std::string(category_name(c))] = k ? json(*k) : json(nullptr);
    }
    j = {{"n", report.n}, {"per_category", std::move(per)}, {"pooled", report.pooled ? json(*report.pooled) : json(nullptr)}};
}

}  // namespace feedtriage
