#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "feedtriage/domain.hpp"

namespace feedtriage {

enum class PromptVariant : std::uint8_t { Full, NoGuidelines, NoFewShot };

inline constexpr std::array<PromptVariant, 3> kAllVariants = {PromptVariant::Full, PromptVariant::NoGuidelines,
                                                              PromptVariant::NoFewShot};

std::string_view variant_name(PromptVariant v) noexcept;
std::optional<PromptVariant> parse_variant(std::string_view text) noexcept;

struct FewShotExample {
    std::string donor;
    std::string recipient;
    std::string comment;
    bool label = false;
    std::string explanation;
};

/// One per-category classification prompt. `description` carries the role
/// explanation and task framing; `guidelines` are the numbered labelling
/// rules; `few_shot` the worked examples shown before the record.
struct PromptTemplate {
    Category category{};
    std::string response_field;  // boolean field name expected in the reply
    std::string description;
    std::vector<std::string> guidelines;
    std::vector<FewShotExample> few_shot;
};

inline constexpr std::size_t kMinFewShot = 3;
inline constexpr std::size_t kMaxFewShot = 8;

/// Throws ValidationError when the template is unusable for the full variant.
void validate(const PromptTemplate& t);

/// `For this rescue, the donor is X; the recipient is Y. Comment: Z`
std::string render_rescue(std::string_view donor, std::string_view recipient, std::string_view comment);

/// Expected assistant output for one example, e.g. `{"inadequate_food":true,"explanation":"..."}`.
std::string render_label_json(std::string_view field, bool label, std::string_view explanation);

/// Renders the prompt for one record and category. Throws ValidationError
/// for a blank comment; callers short-circuit those records.
std::string build_prompt(const PromptTemplate& t, PromptVariant variant, const FeedbackRecord& record);

/// Section headings, exposed so tests can check which sections a variant carries.
inline constexpr std::string_view kGuidelinesHeading = "Guidelines for Analysis:";
inline constexpr std::string_view kExamplesHeading = "Example Comment Analysis:";
inline constexpr std::string_view kAnalysisInstruction = "Now, it’s your turn. Analyze the following rescue";

void to_json(nlohmann::json& j, const PromptTemplate& t);
void from_json(const nlohmann::json& j, PromptTemplate& t);

/// The seven templates indexed by category.
class PromptCatalog {
public:
    PromptCatalog() = default;
    explicit PromptCatalog(std::array<PromptTemplate, kCategoryCount> templates);

    /// Reads `<field>.json` for every category from `dir`, plus the direction
    /// rewrite prompt from `direction_rewrite.md`.
    static PromptCatalog load(const std::filesystem::path& dir);

    [[nodiscard]] const PromptTemplate& at(Category c) const { return templates_[index_of(c)]; }
    [[nodiscard]] const std::string& rewrite_prompt() const noexcept { return rewrite_prompt_; }
    void set_rewrite_prompt(std::string text) { rewrite_prompt_ = std::move(text); }

private:
    std::array<PromptTemplate, kCategoryCount> templates_{};
    std::string rewrite_prompt_;
};

/// Directory the build tree or install tree placed the bundled prompt files in.
std::filesystem::path default_prompt_dir();

}  // namespace feedtriage
