#include <gtest/gtest.h>

#include "contract.hpp"

namespace {

class Contract : public ::testing::TestWithParam<std::filesystem::path> {};

TEST_P(Contract, Replays) {
    const auto result = adgen::contract::run_case_file(GetParam());
    for (const auto& f : result.failures) ADD_FAILURE() << f;
    EXPECT_GT(result.steps_run, 0u);
}

INSTANTIATE_TEST_SUITE_P(Api, Contract, ::testing::ValuesIn(adgen::contract::case_files(ADGEN_CONTRACT_DIR)),
                         [](const auto& info) { return info.param.stem().string(); });

TEST(ContractMatch, SubsetAndMatchers) {
    using nlohmann::json;
    using adgen::contract::match;
    const json actual = {{"id", "g0123"}, {"n", 3}, {"list", {1, 2, 3}}, {"extra", true}};
    EXPECT_TRUE(match({{"id", "$re:^g[0-9]+$"}, {"n", 3}}, actual).empty());
    EXPECT_TRUE(match({{"list", {{"$length", 3}}}, {"missing", "$absent"}}, actual).empty());
    EXPECT_TRUE(match({{"list", {{"$each", "$integer"}}}}, actual).empty());
    EXPECT_TRUE(match({{"list", {{"$contains", 2}}}}, actual).empty());
    EXPECT_EQ(match({{"n", 4}}, actual).size(), 1u);
    EXPECT_EQ(match({{"list", {1, 2}}}, actual).size(), 1u);
    EXPECT_EQ(match({{"id", "$absent"}}, actual).size(), 1u);
    EXPECT_EQ(match({{"nope", "$any"}}, actual).size(), 1u);
    EXPECT_TRUE(match("$$literal", json("$literal")).empty());
}

}  // namespace
