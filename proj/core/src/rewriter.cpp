#include "feedtriage/rewriter.hpp"

#include <cctype>
#include <map>
#include <thread>

#include "feedtriage/csv.hpp"
#include "feedtriage/errors.hpp"
#include "feedtriage/response_parser.hpp"

namespace feedtriage {

using nlohmann::json;

std::string_view validation_name(RewriteValidation v) noexcept {
    switch (v) {
        case RewriteValidation::Passed: return "Passed";
        case RewriteValidation::AdditivityViolation: return "AdditivityViolation";
        case RewriteValidation::ParseFailed: return "ParseFailed";
    }
    return "Passed";
}

std::optional<RewriteValidation> parse_validation(std::string_view text) noexcept {
    for (auto v : {RewriteValidation::Passed, RewriteValidation::AdditivityViolation, RewriteValidation::ParseFailed})
        if (text == validation_name(v)) return v;
    return std::nullopt;
}

std::string_view review_name(ReviewStatus s) noexcept {
    switch (s) {
        case ReviewStatus::Pending: return "Pending";
        case ReviewStatus::Accepted: return "Accepted";
        case ReviewStatus::Rejected: return "Rejected";
    }
    return "Pending";
}

std::optional<ReviewStatus> parse_review(std::string_view text) noexcept {
    for (auto s : {ReviewStatus::Pending, ReviewStatus::Accepted, ReviewStatus::Rejected})
        if (text == review_name(s)) return s;
    return std::nullopt;
}

std::string normalize_whitespace(std::string_view text) {
    std::string out;
    bool pending_space = false;
    for (char ch : text) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(ch);
    }
    return out;
}

RewriteValidation validate_additivity(std::string_view original, std::string_view rewritten) {
    const auto before = normalize_whitespace(original);
    if (before.empty()) return RewriteValidation::Passed;
    return normalize_whitespace(rewritten).find(before) != std::string::npos ? RewriteValidation::Passed
                                                                              : RewriteValidation::AdditivityViolation;
}

std::string build_rewrite_prompt(std::string_view prompt_text, const FeedbackRecord& record,
                                 const DirectionsPair& dirs) {
    nlohmann::ordered_json input;
    input["donor"] = record.donor_name;
    input["recipient"] = record.recipient_name;
    input["volunteer_comment"] = record.comment;
    input["donor_direction"] = dirs.donor_direction;
    input["recipient_direction"] = dirs.recipient_direction;

    std::string out(prompt_text);
    if (!out.empty() && out.back() != '\n') out.push_back('\n');
    out += "**Input:**\n```json\n";
    out += input.dump(2);
    out += "\n```\n";
    return out;
}

DirectionRewrite parse_rewrite_response(std::string_view raw, std::string record_id) {
    const auto object = extract_first_json_object(raw);
    if (!object) throw ParseError("no JSON object in rewrite reply", std::string(raw));

    auto flag = [&](const char* name) {
        const auto it = object->find(name);
        if (it == object->end() || !it->is_boolean())
            throw ParseError(std::string("rewrite reply field '") + name + "' missing or not boolean", std::string(raw));
        return it->get<bool>();
    };
    auto text = [&](const char* name) -> std::string {
        const auto it = object->find(name);
        if (it == object->end() || it->is_null()) return {};
        if (!it->is_string())
            throw ParseError(std::string("rewrite reply field '") + name + "' is not a string", std::string(raw));
        return it->get<std::string>();
    };

    DirectionRewrite out;
    out.record_id = std::move(record_id);
    out.donor_direction_change = flag("donor_direction_change");
    out.recipient_direction_change = flag("recipient_direction_change");
    out.rewritten_donor_direction = out.donor_direction_change ? text("rewritten_donor_direction") : std::string{};
    out.rewritten_recipient_direction =
        out.recipient_direction_change ? text("rewritten_recipient_direction") : std::string{};
    out.explanation = text("explanation");

    if (out.donor_direction_change && normalize_whitespace(out.rewritten_donor_direction).empty())
        throw ParseError("donor direction change flagged without rewritten text", std::string(raw));
    if (out.recipient_direction_change && normalize_whitespace(out.rewritten_recipient_direction).empty())
        throw ParseError("recipient direction change flagged without rewritten text", std::string(raw));
    return out;
}

DirectionRewriter::DirectionRewriter(ChatBackend& backend, std::string prompt_text, RewriterOptions options)
    : backend_(backend), prompt_text_(std::move(prompt_text)), options_(options) {
    if (prompt_text_.empty()) throw ConfigError("direction rewrite prompt is empty");
}

DirectionRewrite DirectionRewriter::rewrite(const FeedbackRecord& record, const DirectionsPair& dirs) const {
    DirectionRewrite out;
    out.record_id = record.record_id;
    if (record.comment_blank()) {
        out.explanation = "empty comment";
        return out;
    }

    const BackendRequest request{backend_.model_name(),
                                 {{ChatMessage::Role::User, build_rewrite_prompt(prompt_text_, record, dirs)}},
                                 options_.temperature};
    const CallContext context{record.record_id, std::string(kRewriteTask), PromptVariant::Full};

    std::string last_error;
    bool transport_failed = false;
    for (int attempt = 0; attempt <= options_.retry.retries; ++attempt) {
        if (attempt > 0 && options_.retry.base_delay.count() > 0)
            std::this_thread::sleep_for(options_.retry.delay(attempt - 1));
        try {
            out = parse_rewrite_response(backend_.complete(request, context).raw_text, record.record_id);
            last_error.clear();
            break;
        } catch (const TransportError& e) {
            transport_failed = true;
            last_error = e.what();
        } catch (const ParseError& e) {
            transport_failed = false;
            last_error = std::string(e.what()) + "; raw reply: " + e.raw();
        }
    }
    if (!last_error.empty()) {
        if (transport_failed)
            throw ClassificationError("rewrite for record '" + record.record_id + "': " + last_error);
        out = DirectionRewrite{};
        out.record_id = record.record_id;
        out.validation = RewriteValidation::ParseFailed;
        out.explanation = "rewrite failed: " + last_error;
        return out;
    }

    out.validation = RewriteValidation::Passed;
    if (out.donor_direction_change &&
        validate_additivity(dirs.donor_direction, out.rewritten_donor_direction) != RewriteValidation::Passed)
        out.validation = RewriteValidation::AdditivityViolation;
    if (out.recipient_direction_change &&
        validate_additivity(dirs.recipient_direction, out.rewritten_recipient_direction) != RewriteValidation::Passed)
        out.validation = RewriteValidation::AdditivityViolation;
    out.review_status = ReviewStatus::Pending;
    return out;
}

std::vector<DirectionRewrite> apply_report(std::span<const DirectionRewrite> rewrites) {
    std::vector<DirectionRewrite> out;
    for (const auto& r : rewrites)
        if (r.validation == RewriteValidation::Passed && r.any_change() && r.review_status != ReviewStatus::Rejected)
            out.push_back(r);
    return out;
}

std::vector<DirectionRewrite> review_queue(std::span<const DirectionRewrite> rewrites) {
    std::vector<DirectionRewrite> out;
    for (const auto& r : rewrites)
        if (r.validation != RewriteValidation::Passed && r.review_status == ReviewStatus::Pending) out.push_back(r);
    return out;
}

RubricSummary aggregate_rubric(std::span<const RubricScore> scores) {
    if (scores.empty()) throw ValidationError("no rubric scores to aggregate");
    struct Sum {
        double h = 0, n = 0, c = 0;
        int count = 0;
    };
    std::map<std::string, Sum> per_rewrite;
    for (const auto& s : scores) {
        for (int v : {s.helpfulness, s.novelty, s.clarity})
            if (v < 1 || v > 5) throw ValidationError("rubric score " + std::to_string(v) + " outside [1,5]");
        auto& sum = per_rewrite[s.rewrite_id];
        sum.h += s.helpfulness;
        sum.n += s.novelty;
        sum.c += s.clarity;
        ++sum.count;
    }
    RubricSummary out;
    std::size_t perfect = 0;
    for (const auto& [id, sum] : per_rewrite) {
        const double h = sum.h / sum.count, n = sum.n / sum.count, c = sum.c / sum.count;
        out.helpfulness += h;
        out.novelty += n;
        out.clarity += c;
        if (h == 5.0 && n == 5.0 && c == 5.0) ++perfect;
    }
    out.n_rewrites = per_rewrite.size();
    const auto n = static_cast<double>(out.n_rewrites);
    out.helpfulness /= n;
    out.novelty /= n;
    out.clarity /= n;
    out.perfect_share = static_cast<double>(perfect) / n;
    return out;
}

void to_json(json& j, const DirectionRewrite& r) {
    j = {{"record_id", r.record_id},
         {"donor_direction_change", r.donor_direction_change},
         {"rewritten_donor_direction", r.rewritten_donor_direction},
         {"recipient_direction_change", r.recipient_direction_change},
         {"rewritten_recipient_direction", r.rewritten_recipient_direction},
         {"explanation", r.explanation},
         {"validation", validation_name(r.validation)},
         {"review_status", review_name(r.review_status)}};
}

void from_json(const json& j, DirectionRewrite& r) {
    r.record_id = j.at("record_id").get<std::string>();
    r.donor_direction_change = j.at("donor_direction_change").get<bool>();
    r.rewritten_donor_direction = j.value("rewritten_donor_direction", "");
    r.recipient_direction_change = j.at("recipient_direction_change").get<bool>();
    r.rewritten_recipient_direction = j.value("rewritten_recipient_direction", "");
    r.explanation = j.value("explanation", "");
    r.validation = parse_validation(j.value("validation", "Passed")).value_or(RewriteValidation::ParseFailed);
    r.review_status = parse_review(j.value("review_status", "Pending")).value_or(ReviewStatus::Pending);
}

std::string rewrite_summary_csv(std::span<const DirectionRewrite> rewrites) {
    std::string out = "record_id,donor_changed,recipient_changed,validation,review_status\n";
    for (const auto& r : rewrites) {
        out += csv::join_row({r.record_id, r.donor_direction_change ? "true" : "false",
                              r.recipient_direction_change ? "true" : "false", std::string(validation_name(r.validation)),
                              std::string(review_name(r.review_status))});
        out += '\n';
    }
    return out;
}

}  // namespace feedtriage
