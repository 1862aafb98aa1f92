#include "feedtriage/domain.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

#include "feedtriage/errors.hpp"

namespace feedtriage {

namespace {

constexpr std::array<std::string_view, kCategoryCount> kNames = {
    "InadequateFood", "EarlierPickup", "DonorProblem",    "RecipientProblem",
    "UpdateContact",  "SystemProblem", "DirectionProblem",
};

constexpr std::array<std::string_view, kCategoryCount> kFields = {
    "inadequate_food", "earlier_pickup", "donor_problem",     "recipient_problem",
    "update_contact",  "system_problem", "direction_problem",
};

bool parse_digits(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
        v = v * 10 + (s[i] - '0');
    }
    out = v;
    return true;
}

bool expect(std::string_view s, std::size_t pos, char c) { return pos < s.size() && s[pos] == c; }

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
    auto fail = [&]() -> Timestamp {
        throw ValidationError("invalid RFC 3339 timestamp: '" + std::string(text) + "'");
    };
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    if (!parse_digits(text, 0, 4, y) || !expect(text, 4, '-') || !parse_digits(text, 5, 2, mo) ||
        !expect(text, 7, '-') || !parse_digits(text, 8, 2, d))
        return fail();
    if (text.size() < 11 || (text[10] != 'T' && text[10] != 't' && text[10] != ' ')) return fail();
    if (!parse_digits(text, 11, 2, h) || !expect(text, 13, ':') || !parse_digits(text, 14, 2, mi) ||
        !expect(text, 16, ':') || !parse_digits(text, 17, 2, sec))
        return fail();

    std::size_t pos = 19;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        const auto start = pos;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
        if (pos == start) return fail();
    }
    int offset_minutes = 0;
    if (pos < text.size() && (text[pos] == 'Z' || text[pos] == 'z')) {
        ++pos;
    } else if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
        const int sign = text[pos] == '-' ? -1 : 1;
        int oh = 0, om = 0;
        if (!parse_digits(text, pos + 1, 2, oh) || !expect(text, pos + 3, ':') ||
            !parse_digits(text, pos + 4, 2, om))
            return fail();
        offset_minutes = sign * (oh * 60 + om);
        pos += 6;
    } else {
        return fail();
    }
    if (pos != text.size()) return fail();

    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                                          std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || sec > 60) return fail();
    const auto days = std::chrono::sys_days{ymd};
    return Timestamp{days.time_since_epoch()} + std::chrono::hours{h} + std::chrono::minutes{mi} +
           std::chrono::seconds{sec} - std::chrono::minutes{offset_minutes};
}

std::string format_timestamp(Timestamp t) {
    const auto days = std::chrono::floor<std::chrono::days>(t);
    const std::chrono::year_month_day ymd{days};
    const std::chrono::hh_mm_ss hms{t - days};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
    return buf;
}

std::string_view category_name(Category c) noexcept { return kNames[index_of(c)]; }
std::string_view category_field(Category c) noexcept { return kFields[index_of(c)]; }

std::optional<Category> parse_category(std::string_view text) noexcept {
    for (auto c : kAllCategories) {
        if (text == category_name(c) || text == category_field(c)) return c;
    }
    return std::nullopt;
}

std::string_view role_name(EntityRole r) noexcept { return r == EntityRole::Donor ? "donor" : "recipient"; }

std::optional<EntityRole> parse_role(std::string_view text) noexcept {
    if (text == "donor" || text == "Donor") return EntityRole::Donor;
    if (text == "recipient" || text == "Recipient") return EntityRole::Recipient;
    return std::nullopt;
}

std::string_view status_name(InterventionStatus s) noexcept {
    switch (s) {
        case InterventionStatus::Unreviewed: return "Unreviewed";
        case InterventionStatus::NeedsAction: return "NeedsAction";
        case InterventionStatus::Done: return "Done";
        case InterventionStatus::Dismissed: return "Dismissed";
    }
    return "Unreviewed";
}

std::optional<InterventionStatus> parse_status(std::string_view text) noexcept {
    for (auto s : {InterventionStatus::Unreviewed, InterventionStatus::NeedsAction, InterventionStatus::Done,
                   InterventionStatus::Dismissed}) {
        if (text == status_name(s)) return s;
    }
    return std::nullopt;
}

bool FeedbackRecord::comment_blank() const noexcept {
    return std::all_of(comment.begin(), comment.end(),
                       [](char ch) { return std::isspace(static_cast<unsigned char>(ch)) != 0; });
}

void validate(const FeedbackRecord& record) {
    if (record.record_id.empty()) throw ValidationError("record_id is empty");
    if (record.donor_id.empty()) throw ValidationError("donor_id is empty");
    if (record.recipient_id.empty()) throw ValidationError("recipient_id is empty");
    if (record.rating && (*record.rating < 1 || *record.rating > 4))
        throw ValidationError("rating " + std::to_string(*record.rating) + " outside [1,4]");
}

bool CategoryVector::complete() const noexcept {
    return std::all_of(labels.begin(), labels.end(), [](const auto& l) { return l.has_value(); });
}

void CategoryVector::set(Category c, bool value, std::string explanation) {
    labels[index_of(c)] = value;
    explanations[index_of(c)] = std::move(explanation);
}

CategoryVector CategoryVector::all_false(std::string record_id, std::string explanation, Timestamp classified_at,
                                         std::string backend_id) {
    CategoryVector v;
    v.record_id = std::move(record_id);
    for (auto c : kAllCategories) v.set(c, false, explanation);
    v.classified_at = classified_at;
    v.backend_id = std::move(backend_id);
    return v;
}

bool any_issue(const CategoryVector& v) {
    if (!v.complete()) throw ContractViolation("any_issue on incomplete vector for record '" + v.record_id + "'");
    return std::any_of(v.labels.begin(), v.labels.end(), [](const auto& l) { return *l; });
}

}  // namespace feedtriage
