#include "feedtriage/tfidf.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "feedtriage/errors.hpp"

namespace feedtriage {

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            if (!current.empty()) tokens.push_back(std::move(current));
            current.clear();
        } else if (std::ispunct(c)) {
            continue;
        } else {
            current.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

namespace {

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

TfidfModel::SparseRow TfidfModel::features(std::string_view comment) const {
    std::map<std::size_t, double> counts;
    for (const auto& token : tokenize(comment)) {
        if (auto it = vocabulary_.find(token); it != vocabulary_.end()) counts[it->second] += 1.0;
    }
    SparseRow row;
    double norm = 0.0;
    for (const auto& [index, tf] : counts) {
        const double value = tf * idf_[index];
        row.emplace_back(index, value);
        norm += value * value;
    }
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (auto& entry : row) entry.second /= norm;
    }
    return row;
}

TfidfModel TfidfModel::train(std::span<const LabeledComment> corpus, const TfidfTrainOptions& options) {
    if (corpus.empty()) throw TrainError("TF-IDF training corpus is empty");
    const bool has_positive = std::any_of(corpus.begin(), corpus.end(), [](const auto& c) { return c.any_issue; });
    const bool has_negative = std::any_of(corpus.begin(), corpus.end(), [](const auto& c) { return !c.any_issue; });
    if (!has_positive || !has_negative) throw TrainError("TF-IDF training corpus contains a single class");

    TfidfModel model;
    std::vector<std::size_t> document_frequency;
    for (const auto& doc : corpus) {
        std::set<std::string> seen;
        for (auto& token : tokenize(doc.comment)) {
            if (!seen.insert(token).second) continue;
            auto [it, inserted] = model.vocabulary_.try_emplace(token, model.vocabulary_.size());
            if (inserted) document_frequency.push_back(0);
            ++document_frequency[it->second];
        }
    }
    const auto n = static_cast<double>(corpus.size());
    model.idf_.resize(document_frequency.size());
    for (std::size_t i = 0; i < document_frequency.size(); ++i)
        model.idf_[i] = std::log((1.0 + n) / (1.0 + static_cast<double>(document_frequency[i]))) + 1.0;

    std::vector<SparseRow> rows;
    rows.reserve(corpus.size());
    for (const auto& doc : corpus) rows.push_back(model.features(doc.comment));

    model.weights_.assign(model.vocabulary_.size(), 0.0);
    std::vector<double> gradient(model.weights_.size());
    for (int iter = 0; iter < options.iterations; ++iter) {
        std::fill(gradient.begin(), gradient.end(), 0.0);
        double intercept_gradient = 0.0;
        for (std::size_t d = 0; d < rows.size(); ++d) {
            double z = model.intercept_;
            for (const auto& [index, value] : rows[d]) z += model.weights_[index] * value;
            const double residual = sigmoid(z) - (corpus[d].any_issue ? 1.0 : 0.0);
            for (const auto& [index, value] : rows[d]) gradient[index] += residual * value;
            intercept_gradient += residual;
        }
        for (std::size_t i = 0; i < model.weights_.size(); ++i)
            model.weights_[i] -= options.learning_rate * (gradient[i] / n + options.l2 * model.weights_[i]);
        model.intercept_ -= options.learning_rate * intercept_gradient / n;
    }
    return model;
}

double TfidfModel::probability(std::string_view comment) const {
    double z = intercept_;
    for (const auto& [index, value] : features(comment)) z += weights_[index] * value;
    return sigmoid(z);
}

std::optional<double> TfidfModel::weight(std::string_view term) const {
    const auto it = vocabulary_.find(term);
    if (it == vocabulary_.end()) return std::nullopt;
    return weights_[it->second];
}

}  // namespace feedtriage
