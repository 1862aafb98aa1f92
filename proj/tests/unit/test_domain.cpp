#include <random>

#include <gtest/gtest.h>

#include "feedtriage/domain.hpp"
#include "feedtriage/errors.hpp"
#include "feedtriage/serialize.hpp"
#include "test_support.hpp"

using namespace feedtriage;
using feedtriage::testing::make_record;
using feedtriage::testing::ts;

namespace {

CategoryVector vector_with(std::initializer_list<Category> positives) {
    auto v = CategoryVector::all_false("r1", "", ts("2024-01-01T00:00:00Z"), "test");
    for (auto c : positives) v.set(c, true);
    return v;
}

}  // namespace

TEST(Domain, CategorySetIsClosedAndOrdered) {
    ASSERT_EQ(kAllCategories.size(), 7u);
    for (std::size_t i = 0; i < kAllCategories.size(); ++i) {
        EXPECT_EQ(index_of(kAllCategories[i]), i);
        EXPECT_EQ(parse_category(category_name(kAllCategories[i])), kAllCategories[i]);
        EXPECT_EQ(parse_category(category_field(kAllCategories[i])), kAllCategories[i]);
    }
    EXPECT_FALSE(parse_category("FoodSafety"));
    EXPECT_EQ(category_field(Category::InadequateFood), "inadequate_food");
}

TEST(Domain, AnyIssueExamples) {
    EXPECT_FALSE(any_issue(vector_with({})));
    EXPECT_TRUE(any_issue(vector_with({Category::SystemProblem})));
    EXPECT_TRUE(any_issue(vector_with({Category::DonorProblem, Category::DirectionProblem})));
}

TEST(Domain, AnyIssueRejectsIncompleteVector) {
    auto v = vector_with({});
    v.labels[index_of(Category::UpdateContact)].reset();
    EXPECT_FALSE(v.complete());
    EXPECT_THROW((void)any_issue(v), ContractViolation);
}

TEST(Domain, AnyIssueFalseIffAllLabelsFalse) {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 500; ++trial) {
        auto v = vector_with({});
        bool all_false = true;
        for (auto c : kAllCategories) {
            const bool on = rng() % 5 == 0;
            v.set(c, on);
            all_false = all_false && !on;
        }
        EXPECT_EQ(!any_issue(v), all_false);
    }
}

TEST(Domain, CategoryVectorJsonRoundTripIsExact) {
    std::mt19937 rng(11);
    const std::vector<std::string> texts = {"", "plain", "quote \" and \\ backslash", "tab\tnew\nline",
                                            "caf\xC3\xA9 \xE2\x80\x99 \xF0\x9F\x8D\x8E", "{\"json\": true}"};
    for (int trial = 0; trial < 200; ++trial) {
        CategoryVector v;
        v.record_id = "rec-" + std::to_string(trial);
        v.classified_at = Timestamp{std::chrono::seconds{1'700'000'000 + trial}};
        v.backend_id = "replay/m/Full";
        for (auto c : kAllCategories) {
            const auto roll = rng() % 3;
            if (roll < 2) v.labels[index_of(c)] = roll == 1;
            v.explanations[index_of(c)] = texts[rng() % texts.size()];
        }
        const nlohmann::json j = v;
        const auto back = nlohmann::json::parse(j.dump()).get<CategoryVector>();
        EXPECT_EQ(back, v);
    }
}

TEST(Domain, RecordValidation) {
    EXPECT_NO_THROW(validate(make_record("a", "ok")));
    EXPECT_NO_THROW(validate(make_record("a", "ok", "d", "r", std::nullopt)));
    EXPECT_THROW(validate(make_record("a", "ok", "d", "r", 0)), ValidationError);
    EXPECT_THROW(validate(make_record("a", "ok", "d", "r", 5)), ValidationError);
    EXPECT_THROW(validate(make_record("a", "ok", "", "r")), ValidationError);
    EXPECT_THROW(validate(make_record("a", "ok", "d", "")), ValidationError);
    EXPECT_THROW(validate(make_record("", "ok")), ValidationError);
}

TEST(Domain, BlankComments) {
    EXPECT_TRUE(make_record("a", "").comment_blank());
    EXPECT_TRUE(make_record("a", "  \t\n ").comment_blank());
    EXPECT_FALSE(make_record("a", " x ").comment_blank());
}

TEST(Domain, TimestampParsing) {
    EXPECT_EQ(format_timestamp(ts("2024-03-05T07:08:09Z")), "2024-03-05T07:08:09Z");
    EXPECT_EQ(format_timestamp(ts("2024-03-05T07:08:09.750Z")), "2024-03-05T07:08:09Z");
    EXPECT_EQ(format_timestamp(ts("2024-03-05T07:08:09+02:00")), "2024-03-05T05:08:09Z");
    EXPECT_EQ(format_timestamp(ts("2024-03-05T23:30:00-01:00")), "2024-03-06T00:30:00Z");
    EXPECT_EQ(ts("1970-01-01T00:00:00Z").time_since_epoch().count(), 0);
    EXPECT_THROW(ts("2024-03-05"), ValidationError);
    EXPECT_THROW(ts("2024-13-05T00:00:00Z"), ValidationError);
    EXPECT_THROW(ts("2024-02-30T00:00:00Z"), ValidationError);
    EXPECT_THROW(ts("yesterday"), ValidationError);
}

TEST(Domain, StatusAndRoleNames) {
    for (auto s : {InterventionStatus::Unreviewed, InterventionStatus::NeedsAction, InterventionStatus::Done,
                   InterventionStatus::Dismissed})
        EXPECT_EQ(parse_status(status_name(s)), s);
    EXPECT_FALSE(parse_status("Closed"));
    EXPECT_EQ(parse_role("donor"), EntityRole::Donor);
    EXPECT_EQ(parse_role("recipient"), EntityRole::Recipient);
    EXPECT_FALSE(parse_role("volunteer"));
    EXPECT_EQ(OrganizerAnnotation{}.intervention_status, InterventionStatus::Unreviewed);
}
