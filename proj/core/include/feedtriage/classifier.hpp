#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "feedtriage/backend.hpp"
#include "feedtriage/domain.hpp"
#include "feedtriage/prompts.hpp"
#include "feedtriage/retry.hpp"

namespace feedtriage {

using Clock = std::function<Timestamp()>;

Timestamp system_now();

struct ClassifierOptions {
    PromptVariant variant = PromptVariant::Full;
    RetryPolicy retry{};
    double temperature = 0.0;
    Clock clock = system_now;
};

inline constexpr std::string_view kEmptyCommentExplanation = "empty comment";

/// Result slot for one record of a batch: a vector (possibly incomplete) or
/// the error that stopped the record.
struct ClassifyOutcome {
    std::string record_id;
    std::optional<CategoryVector> vector;
    std::string error;

    [[nodiscard]] bool ok() const noexcept { return vector && vector->complete(); }
};

/// Seven independent binary calls per record, one per category.
///
/// A category whose reply cannot be parsed after the retry budget is left
/// unset (the vector is incomplete) and its explanation carries the parse
/// failure. Transport failures past the budget raise ClassificationError.
/// Blank comments are never sent: they get an all-false vector.
class Classifier {
public:
    Classifier(ChatBackend& backend, const PromptCatalog& catalog, ClassifierOptions options = {});

    [[nodiscard]] CategoryVector classify(const FeedbackRecord& record) const;

    /// Results come back in input order. At most `parallelism` backend calls
    /// are in flight; a failing record does not abort the others.
    [[nodiscard]] std::vector<ClassifyOutcome> classify_batch(std::span<const FeedbackRecord> records,
                                                              std::size_t parallelism) const;

    [[nodiscard]] std::string backend_id() const;
    [[nodiscard]] const ClassifierOptions& options() const noexcept { return options_; }

private:
    ChatBackend& backend_;
    const PromptCatalog& catalog_;
    ClassifierOptions options_;
};

/// Runs `fn(i)` for i in [0, n) on up to `parallelism` worker threads.
void parallel_for(std::size_t n, std::size_t parallelism, const std::function<void(std::size_t)>& fn);

}  // namespace feedtriage
