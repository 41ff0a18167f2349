#include <gtest/gtest.h>

#include <algorithm>

#include "adgen/errors.hpp"
#include "adgen/prompts.hpp"

using namespace adgen;

namespace {

bool contains(const std::string& s, std::string_view needle) { return s.find(needle) != std::string::npos; }

}  // namespace

TEST(Prompts, BundledAssets) {
    auto names = prompts::asset_names();
    std::sort(names.begin(), names.end());
    EXPECT_EQ(names, (std::vector<std::string>{"describe_scene", "judge_authenticity", "judge_layout_quality", "judge_retry",
                                               "judge_theme_alignment", "judge_visual_appeal", "layout_system",
                                               "layout_user", "profile_product", "som_sentence"}));
    EXPECT_THROW(prompts::asset("nope"), InvalidArgument);
}

TEST(Prompts, Anchors) {
    const auto profile = prompts::profile_product("Gray 3-seat sofa, 84 x 35 x 33 inches", "Sofa");
    EXPECT_TRUE(profile.starts_with("You are an Advertising Marketing Expert"));
    EXPECT_TRUE(contains(profile, "product title information: Gray 3-seat sofa, 84 x 35 x 33 inches."));
    EXPECT_TRUE(contains(profile, "falls under the category of Sofa?"));
    EXPECT_TRUE(contains(profile, R"(JSON format:{"question number" : "answer"})"));

    const auto scene = prompts::describe_scene("living room", "Modern");
    EXPECT_TRUE(scene.starts_with("You are an Advertising Marketing Expert"));
    EXPECT_TRUE(contains(scene, "how the layout of the living room looks like"));
    EXPECT_TRUE(contains(scene, "Given the theme as Modern,"));

    EXPECT_TRUE(contains(prompts::layout_system(), "floor line on 768px from top"));
    EXPECT_TRUE(contains(prompts::layout_system(), R"("object {width: ?px; height: ?px; left: ?px; top: ?px; layer: ?}")"));

    const auto user = prompts::layout_user("gray sofa (200 x 90 x 85 cm)", 2.2, "floor lamp", 0.25, "sofa left");
    EXPECT_TRUE(contains(user, "size (in cm) 500 x 400 x 200"));
    EXPECT_TRUE(contains(user, "width-to-height ratio of 2.200"));
    EXPECT_TRUE(contains(user, "with first line gray sofa (200 x 90 x 85 cm) and second line floor lamp."));
}

TEST(Prompts, JudgePromptsAskForJson) {
    for (const char* name : {"judge_authenticity", "judge_visual_appeal", "judge_layout_quality", "judge_theme_alignment"}) {
        const auto plain = prompts::judge_system(name, false);
        EXPECT_TRUE(contains(plain, R"({"score": , "explanation": })")) << name;
        EXPECT_TRUE(contains(plain, "give a score from 1 to 5")) << name;
        const auto som = prompts::judge_system(name, true);
        EXPECT_EQ(som.size(), plain.size() + 1 + prompts::asset("som_sentence").size()) << name;
        EXPECT_EQ(som.find(prompts::asset("som_sentence")), plain.find(". ") + 2) << name;
    }
}

TEST(Prompts, FillSubstitutesAndCollapsesBraces) {
    EXPECT_EQ(prompts::fill("a {x} {{b}} {y-z}", {{"x", "1"}, {"y-z", "{2}"}}), "a 1 {b} {2}");
    EXPECT_EQ(prompts::fill("{{}}", {}), "{}");
    EXPECT_THROW(prompts::fill("{missing}", {}), InvalidArgument);
    EXPECT_THROW(prompts::fill("{open", {{"open", ""}}), InvalidArgument);
}
