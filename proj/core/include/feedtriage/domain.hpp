#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace feedtriage {

using Timestamp = std::chrono::sys_seconds;

/// Parses RFC 3339 (`2025-05-15T08:30:00Z`, `...+02:00`, fractional seconds
/// dropped). A space is accepted in place of `T`. Throws ValidationError.
Timestamp parse_timestamp(std::string_view text);

/// Formats as `YYYY-MM-DDTHH:MM:SSZ`.
std::string format_timestamp(Timestamp t);

/// Issue taxonomy. The set is closed; `kCategoryCount` members in a fixed order.
enum class Category : std::uint8_t {
    InadequateFood,
    EarlierPickup,
    DonorProblem,
    RecipientProblem,
    UpdateContact,
    SystemProblem,
    DirectionProblem,
};

inline constexpr std::size_t kCategoryCount = 7;

inline constexpr std::array<Category, kCategoryCount> kAllCategories = {
    Category::InadequateFood, Category::EarlierPickup,  Category::DonorProblem,
    Category::RecipientProblem, Category::UpdateContact, Category::SystemProblem,
    Category::DirectionProblem,
};

constexpr std::size_t index_of(Category c) noexcept { return static_cast<std::size_t>(c); }

/// Canonical name, e.g. "DirectionProblem".
std::string_view category_name(Category c) noexcept;
/// snake_case name used as the response field and store column suffix, e.g. "direction_problem".
std::string_view category_field(Category c) noexcept;
/// Accepts either the canonical or the snake_case name.
std::optional<Category> parse_category(std::string_view text) noexcept;

enum class EntityRole : std::uint8_t { Donor, Recipient };

std::string_view role_name(EntityRole r) noexcept;  // "donor" / "recipient"
std::optional<EntityRole> parse_role(std::string_view text) noexcept;

enum class InterventionStatus : std::uint8_t { Unreviewed, NeedsAction, Done, Dismissed };

std::string_view status_name(InterventionStatus s) noexcept;
std::optional<InterventionStatus> parse_status(std::string_view text) noexcept;

struct FeedbackRecord {
    std::string record_id;
    std::string trip_id;
    std::string donor_id;
    std::string donor_name;
    std::string recipient_id;
    std::string recipient_name;
    Timestamp created_at{};
    std::optional<int> rating;  // 1..4
    std::string comment;

    /// True when the comment is empty or whitespace only.
    [[nodiscard]] bool comment_blank() const noexcept;
};

/// Throws ValidationError if the record breaks a field invariant.
void validate(const FeedbackRecord& record);

/// Seven labels for one record. A label that could not be obtained from the
/// backend is left empty; such a vector is incomplete.
struct CategoryVector {
    std::string record_id;
    std::array<std::optional<bool>, kCategoryCount> labels{};
    std::array<std::string, kCategoryCount> explanations{};
    Timestamp classified_at{};
    std::string backend_id;

    [[nodiscard]] bool complete() const noexcept;
    [[nodiscard]] std::optional<bool> label(Category c) const noexcept { return labels[index_of(c)]; }
    [[nodiscard]] bool is_set(Category c) const noexcept { return labels[index_of(c)].value_or(false); }
    void set(Category c, bool value, std::string explanation = {});

    /// All seven labels false; used for records whose comment is blank.
    static CategoryVector all_false(std::string record_id, std::string explanation,
                                    Timestamp classified_at, std::string backend_id);

    bool operator==(const CategoryVector&) const = default;
};

/// OR over all seven labels. Throws ContractViolation on an incomplete vector.
bool any_issue(const CategoryVector& v);

struct OrganizerAnnotation {
    std::string record_id;
    std::string note;
    InterventionStatus intervention_status = InterventionStatus::Unreviewed;
    Timestamp updated_at{};
    std::string author;
};

}  // namespace feedtriage
