#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "feedtriage/backend.hpp"
#include "feedtriage/domain.hpp"
#include "feedtriage/retry.hpp"

namespace feedtriage {

struct DirectionsPair {
    std::string donor_direction;
    std::string recipient_direction;
};

enum class RewriteValidation : std::uint8_t { Passed, AdditivityViolation, ParseFailed };
enum class ReviewStatus : std::uint8_t { Pending, Accepted, Rejected };

std::string_view validation_name(RewriteValidation v) noexcept;
std::optional<RewriteValidation> parse_validation(std::string_view text) noexcept;
std::string_view review_name(ReviewStatus s) noexcept;
std::optional<ReviewStatus> parse_review(std::string_view text) noexcept;

struct DirectionRewrite {
    std::string record_id;
    bool donor_direction_change = false;
    std::string rewritten_donor_direction;
    bool recipient_direction_change = false;
    std::string rewritten_recipient_direction;
    std::string explanation;
    RewriteValidation validation = RewriteValidation::Passed;
    ReviewStatus review_status = ReviewStatus::Pending;

    [[nodiscard]] bool any_change() const noexcept { return donor_direction_change || recipient_direction_change; }
    bool operator==(const DirectionRewrite&) const = default;
};

/// Passed iff the whitespace-normalised `original` occurs contiguously in the
/// whitespace-normalised `rewritten`. An empty original always passes.
RewriteValidation validate_additivity(std::string_view original, std::string_view rewritten);

/// Collapses whitespace runs to one space and trims both ends.
std::string normalize_whitespace(std::string_view text);

/// The rewrite prompt followed by the record's input block.
std::string build_rewrite_prompt(std::string_view prompt_text, const FeedbackRecord& record,
                                 const DirectionsPair& dirs);

/// Parses the five-field reply. A false change flag clears its text; a true
/// flag with empty text is a ParseError.
DirectionRewrite parse_rewrite_response(std::string_view raw, std::string record_id);

struct RewriterOptions {
    RetryPolicy retry{};
    double temperature = 0.0;
};

class DirectionRewriter {
public:
    DirectionRewriter(ChatBackend& backend, std::string prompt_text, RewriterOptions options = {});

    /// Blank comments return an unchanged rewrite without a backend call.
    /// Unparseable replies after retries yield validation = ParseFailed.
    /// Transport failures past the budget propagate as ClassificationError.
    [[nodiscard]] DirectionRewrite rewrite(const FeedbackRecord& record, const DirectionsPair& dirs) const;

private:
    ChatBackend& backend_;
    std::string prompt_text_;
    RewriterOptions options_;
};

/// Rewrites that may be applied once accepted: Passed with at least one change.
std::vector<DirectionRewrite> apply_report(std::span<const DirectionRewrite> rewrites);
/// Rewrites an organizer must inspect before anything can happen: any validation failure.
std::vector<DirectionRewrite> review_queue(std::span<const DirectionRewrite> rewrites);

struct RubricScore {
    std::string rewrite_id;
    int helpfulness = 0;
    int novelty = 0;
    int clarity = 0;
    std::string annotator;
};

struct RubricSummary {
    double helpfulness = 0.0;
    double novelty = 0.0;
    double clarity = 0.0;
    double perfect_share = 0.0;  // rewrites averaging 5 on all three criteria
    std::size_t n_rewrites = 0;
};

/// Averages annotators per rewrite, then across rewrites. Throws
/// ValidationError on empty input or a score outside [1, 5].
RubricSummary aggregate_rubric(std::span<const RubricScore> scores);

void to_json(nlohmann::json& j, const DirectionRewrite& r);
void from_json(const nlohmann::json& j, DirectionRewrite& r);

/// CSV summary: record_id,donor_changed,recipient_changed,validation,review_status
std::string rewrite_summary_csv(std::span<const DirectionRewrite> rewrites);

}  // namespace feedtriage
