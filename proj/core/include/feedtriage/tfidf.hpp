#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace feedtriage {

/// Lowercases ASCII, deletes punctuation, splits on whitespace.
std::vector<std::string> tokenize(std::string_view text);

struct LabeledComment {
    std::string comment;
    bool any_issue = false;
};

struct TfidfTrainOptions {
    int iterations = 2000;
    double learning_rate = 1.0;
    double l2 = 1e-4;
};

/// Unigram TF-IDF features (smoothed idf, L2-normalised rows) feeding a
/// logistic regression for the any-issue label. Training is full-batch
/// gradient descent with a fixed iteration count, so a fixed corpus order
/// gives a bit-identical model.
class TfidfModel {
public:
    /// Throws TrainError on an empty or single-class corpus.
    static TfidfModel train(std::span<const LabeledComment> corpus, const TfidfTrainOptions& options = {});

    [[nodiscard]] double probability(std::string_view comment) const;
    [[nodiscard]] bool predict(std::string_view comment) const { return probability(comment) >= 0.5; }

    /// Coefficient for `term`, or nullopt when out of vocabulary.
    [[nodiscard]] std::optional<double> weight(std::string_view term) const;
    [[nodiscard]] double intercept() const noexcept { return intercept_; }
    [[nodiscard]] std::size_t vocabulary_size() const noexcept { return vocabulary_.size(); }

private:
    using SparseRow = std::vector<std::pair<std::size_t, double>>;
    [[nodiscard]] SparseRow features(std::string_view comment) const;

    std::map<std::string, std::size_t, std::less<>> vocabulary_;
    std::vector<double> idf_;
    std::vector<double> weights_;
    double intercept_ = 0.0;
};

}  // namespace feedtriage
