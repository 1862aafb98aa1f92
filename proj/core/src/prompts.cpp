#include "feedtriage/prompts.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "feedtriage/errors.hpp"

namespace feedtriage {

using nlohmann::json;

std::string_view variant_name(PromptVariant v) noexcept {
    switch (v) {
        case PromptVariant::Full: return "Full";
        case PromptVariant::NoGuidelines: return "NoGuidelines";
        case PromptVariant::NoFewShot: return "NoFewShot";
    }
    return "Full";
}

std::optional<PromptVariant> parse_variant(std::string_view text) noexcept {
    for (auto v : kAllVariants) {
        if (text == variant_name(v)) return v;
    }
    return std::nullopt;
}

void validate(const PromptTemplate& t) {
    const auto name = std::string(category_name(t.category));
    if (t.response_field.empty()) throw ValidationError(name + " template has no response field");
    if (t.description.empty()) throw ValidationError(name + " template has no description");
    if (t.few_shot.size() < kMinFewShot || t.few_shot.size() > kMaxFewShot)
        throw ValidationError(name + " template needs " + std::to_string(kMinFewShot) + "-" +
                              std::to_string(kMaxFewShot) + " few-shot examples, has " +
                              std::to_string(t.few_shot.size()));
}

std::string render_rescue(std::string_view donor, std::string_view recipient, std::string_view comment) {
    std::string out = "For this rescue, the donor is ";
    out += donor;
    out += "; the recipient is ";
    out += recipient;
    out += ". Comment: ";
    out += comment;
    return out;
}

std::string render_label_json(std::string_view field, bool label, std::string_view explanation) {
    std::string out = "{\"";
    out += field;
    out += "\": ";
    out += label ? "true" : "false";
    out += ", \"explanation\": ";
    out += json(std::string(explanation)).dump();
    out += "}";
    return out;
}

std::string build_prompt(const PromptTemplate& t, PromptVariant variant, const FeedbackRecord& record) {
    if (record.comment_blank())
        throw ValidationError("record '" + record.record_id + "' has a blank comment; nothing to classify");

    std::ostringstream out;
    out << t.description << "\n\n";

    if (variant != PromptVariant::NoGuidelines && !t.guidelines.empty()) {
        out << kGuidelinesHeading << '\n';
        for (std::size_t i = 0; i < t.guidelines.size(); ++i) out << i + 1 << ". " << t.guidelines[i] << '\n';
        out << '\n';
    }

    if (variant != PromptVariant::NoFewShot && !t.few_shot.empty()) {
        out << kExamplesHeading << '\n';
        for (std::size_t i = 0; i < t.few_shot.size(); ++i) {
            const auto& ex = t.few_shot[i];
            out << i + 1 << ". " << render_rescue(ex.donor, ex.recipient, ex.comment) << "\n\n    "
                << render_label_json(t.response_field, ex.label, ex.explanation) << "\n\n";
        }
    }

    out << "Respond with a single JSON object of the form {\"" << t.response_field
        << "\": true or false, \"explanation\": \"<one sentence>\"}.\n\n";
    out << kAnalysisInstruction << '\n' << render_rescue(record.donor_name, record.recipient_name, record.comment);
    return out.str();
}

void to_json(json& j, const PromptTemplate& t) {
    json examples = json::array();
    for (const auto& ex : t.few_shot) {
        examples.push_back({{"donor", ex.donor},
                            {"recipient", ex.recipient},
                            {"comment", ex.comment},
                            {"label", ex.label},
                            {"explanation", ex.explanation}});
    }
    j = json{{"category", category_name(t.category)},
             {"response_field", t.response_field},
             {"description", t.description},
             {"guidelines", t.guidelines},
             {"few_shot", std::move(examples)}};
}

void from_json(const json& j, PromptTemplate& t) {
    const auto name = j.at("category").get<std::string>();
    const auto category = parse_category(name);
    if (!category) throw ValidationError("unknown category '" + name + "' in prompt template");
    t.category = *category;
    t.response_field = j.value("response_field", std::string(category_field(*category)));
    t.description = j.at("description").get<std::string>();
    t.guidelines = j.value("guidelines", std::vector<std::string>{});
    t.few_shot.clear();
    for (const auto& ex : j.value("few_shot", json::array())) {
        t.few_shot.push_back({ex.at("donor").get<std::string>(), ex.at("recipient").get<std::string>(),
                              ex.at("comment").get<std::string>(), ex.at("label").get<bool>(),
                              ex.value("explanation", "")});
    }
}

PromptCatalog::PromptCatalog(std::array<PromptTemplate, kCategoryCount> templates) : templates_(std::move(templates)) {
    for (auto c : kAllCategories) {
        if (templates_[index_of(c)].category != c)
            throw ValidationError("prompt catalog slot " + std::string(category_name(c)) + " holds another category");
    }
}

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read prompt file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

PromptCatalog PromptCatalog::load(const std::filesystem::path& dir) {
    std::array<PromptTemplate, kCategoryCount> templates{};
    for (auto c : kAllCategories) {
        const auto path = dir / (std::string(category_field(c)) + ".json");
        PromptTemplate t;
        try {
            t = json::parse(read_file(path)).get<PromptTemplate>();
        } catch (const json::exception& e) {
            throw ConfigError("malformed prompt template " + path.string() + ": " + e.what());
        }
        if (t.category != c) throw ConfigError(path.string() + " declares category " + std::string(category_name(t.category)));
        validate(t);
        templates[index_of(c)] = std::move(t);
    }
    PromptCatalog catalog(std::move(templates));
    catalog.set_rewrite_prompt(read_file(dir / "direction_rewrite.md"));
    return catalog;
}

std::filesystem::path default_prompt_dir() {
    if (const char* env = std::getenv("FEEDTRIAGE_PROMPT_DIR"); env && *env) return env;
#ifdef FEEDTRIAGE_INSTALLED_PROMPT_DIR
    if (std::filesystem::exists(FEEDTRIAGE_INSTALLED_PROMPT_DIR)) return FEEDTRIAGE_INSTALLED_PROMPT_DIR;
#endif
#ifdef FEEDTRIAGE_SOURCE_PROMPT_DIR
    return FEEDTRIAGE_SOURCE_PROMPT_DIR;
#else
    return "prompts";
#endif
}

}  // namespace feedtriage
