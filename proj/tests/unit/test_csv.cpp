#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "feedtriage/csv.hpp"
#include "feedtriage/errors.hpp"

using namespace feedtriage;

namespace {

std::vector<std::vector<std::string>> read_all(const std::string& text) {
    std::istringstream in(text);
    csv::Reader reader(in);
    std::vector<std::vector<std::string>> rows;
    while (auto row = reader.next()) rows.push_back(*row);
    return rows;
}

}  // namespace

TEST(Csv, QuotedFieldsAndCrlf) {
    const auto rows = read_all("a,b,c\r\n\"x, y\",\"say \"\"hi\"\"\",\"two\nlines\"\r\n1,,3");
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"a", "b", "c"}));
    EXPECT_EQ(rows[1], (std::vector<std::string>{"x, y", "say \"hi\"", "two\nlines"}));
    EXPECT_EQ(rows[2], (std::vector<std::string>{"1", "", "3"}));
}

TEST(Csv, LineNumbersCountEmbeddedNewlines) {
    std::istringstream in("h\n\"a\nb\"\nc\n");
    csv::Reader reader(in);
    ASSERT_TRUE(reader.next());
    EXPECT_EQ(reader.line(), 1u);
    ASSERT_TRUE(reader.next());
    EXPECT_EQ(reader.line(), 2u);
    ASSERT_TRUE(reader.next());
    EXPECT_EQ(reader.line(), 4u);
    EXPECT_FALSE(reader.next());
}

TEST(Csv, UnterminatedQuoteIsAnError) {
    std::istringstream in("\"open,1\n2\n");
    csv::Reader reader(in);
    EXPECT_THROW((void)reader.next(), ValidationError);
}

TEST(Csv, EscapeRoundTrips) {
    std::mt19937 rng(3);
    const std::string alphabet = "ab ,\"\n\r\txyz";
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<std::string> fields(1 + rng() % 5);
        for (auto& f : fields) {
            const auto len = rng() % 8;
            for (std::size_t i = 0; i < len; ++i) f.push_back(alphabet[rng() % alphabet.size()]);
        }
        if (fields.size() == 1 && fields[0].empty()) fields[0] = "z";
        const auto rows = read_all(csv::join_row(fields) + "\n");
        ASSERT_EQ(rows.size(), 1u);
        EXPECT_EQ(rows[0], fields);
    }
}
