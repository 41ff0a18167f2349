#include <gtest/gtest.h>

#include <random>

#include "adgen/background.hpp"
#include "adgen/errors.hpp"
#include "adgen/mock_backends.hpp"

using namespace adgen;

namespace {

SceneBrief brief(const std::string& photo, const std::string& theme) {
    SceneBrief b;
    b.photo_description = photo;
    b.theme = theme;
    return b;
}

GrayImage square_alpha(int size, PixelRect r) {
    GrayImage a(size, size, 0);
    for (int y = r.top; y < r.bottom(); ++y)
        for (int x = r.left; x < r.right(); ++x) *a.at(x, y) = 255;
    return a;
}

std::size_t protected_count(const Mask& m) { return m.bits().size() - m.count(); }

// Reference dilation: a pixel is protected when some foreground pixel lies
// within Chebyshev distance `margin`.
Mask brute_mask(const GrayImage& alpha, int margin) {
    Mask m(alpha.width(), alpha.height(), true);
    for (int y = 0; y < alpha.height(); ++y) {
        for (int x = 0; x < alpha.width(); ++x) {
            if (!*alpha.at(x, y)) continue;
            for (int dy = -margin; dy <= margin; ++dy) {
                for (int dx = -margin; dx <= margin; ++dx) {
                    const int u = x + dx, v = y + dy;
                    if (u >= 0 && v >= 0 && u < alpha.width() && v < alpha.height()) m.set(u, v, false);
                }
            }
        }
    }
    return m;
}

BackgroundRequest canvas_request() {
    BackgroundRequest req;
    req.canvas = RgbImage(kCanvasSize, kCanvasSize, 255);
    const PixelRect box{300, 400, 200, 368};
    for (int y = box.top; y < box.bottom(); ++y)
        for (int x = box.left; x < box.right(); ++x) std::fill_n(req.canvas.at(x, y), 3, 90);
    req.foreground_alpha = square_alpha(kCanvasSize, box);
    req.prompt = "A modern living room, Modern style";
    req.seed = 11;
    return req;
}

class RogueInpainter final : public InpaintBackend {
public:
    RgbImage inpaint(const InpaintRequest& req) override { return RgbImage(req.canvas.width(), req.canvas.height(), 3); }
};

}  // namespace

TEST(BackgroundPrompt, PhotoDescriptionPassesThrough) {
    const auto p = build_background_prompt(brief("A modern living room with a gray sofa", "Modern"));
    EXPECT_EQ(p.prompt, "A modern living room with a gray sofa");
    EXPECT_EQ(p.negative_prompt, kDefaultNegativePrompt);
}

TEST(BackgroundPrompt, UserEditIsVerbatim) {
    const auto p = build_background_prompt(brief("ignored", "Modern"), std::string("a modern coffee table"));
    EXPECT_EQ(p.prompt, "a modern coffee table");
}

TEST(BackgroundPrompt, ThemeAppendedWhenMissing) {
    EXPECT_EQ(build_background_prompt(brief("A bright room by the sea", "Coastal")).prompt,
              "A bright room by the sea, Coastal style");
    EXPECT_EQ(build_background_prompt(brief("A bright room", ""), std::nullopt, "blurry").negative_prompt, "blurry");
}

TEST(InpaintMask, ZeroMarginProtectsExactlyTheForeground) {
    const auto alpha = square_alpha(64, {10, 20, 5, 7});
    const auto m = make_inpaint_mask(alpha, 0);
    EXPECT_EQ(protected_count(m), 35u);
    EXPECT_FALSE(m.get(10, 20));
    EXPECT_TRUE(m.get(9, 20));
    EXPECT_TRUE(m.get(15, 20));
}

TEST(InpaintMask, MarginGrowsSquareBySixteen) {
    const auto alpha = square_alpha(400, {150, 150, 100, 100});
    const auto m = make_inpaint_mask(alpha, 8);
    EXPECT_EQ(protected_count(m), 116u * 116u);
    EXPECT_FALSE(m.get(142, 142));
    EXPECT_TRUE(m.get(141, 142));
    EXPECT_FALSE(m.get(257, 257));
    EXPECT_TRUE(m.get(258, 257));
}

TEST(InpaintMask, NegativeMarginRejected) {
    EXPECT_THROW(make_inpaint_mask(GrayImage(4, 4, 0), -1), InvalidArgument);
}

TEST(InpaintMask, MatchesBruteForceDilation) {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 200; ++i) {
        const int w = 8 + static_cast<int>(rng() % 40), h = 8 + static_cast<int>(rng() % 40);
        GrayImage alpha(w, h, 0);
        const int blobs = static_cast<int>(rng() % 6);
        for (int k = 0; k < blobs * 10; ++k) *alpha.at(static_cast<int>(rng() % w), static_cast<int>(rng() % h)) = 1 + rng() % 255;
        const int margin = static_cast<int>(rng() % 7);
        ASSERT_EQ(make_inpaint_mask(alpha, margin), brute_mask(alpha, margin)) << i;
    }
}

TEST(InpaintMask, LargerMarginProtectsMore) {
    std::mt19937_64 rng(3);
    GrayImage alpha(80, 60, 0);
    for (int k = 0; k < 40; ++k) *alpha.at(static_cast<int>(rng() % 80), static_cast<int>(rng() % 60)) = 200;
    Mask prev = make_inpaint_mask(alpha, 0);
    for (int margin = 1; margin <= 12; ++margin) {
        const Mask cur = make_inpaint_mask(alpha, margin);
        for (std::size_t i = 0; i < cur.bits().size(); ++i) {
            if (cur.bits()[i]) ASSERT_TRUE(prev.bits()[i]) << margin;
        }
        prev = cur;
    }
}

TEST(Background, RequestCarriesControls) {
    const auto req = build_inpaint_request(canvas_request());
    ASSERT_EQ(req.controls.size(), 2u);
    EXPECT_EQ(req.controls[0], (ControlSpec{ControlType::depth, kDefaultControlStrength}));
    EXPECT_EQ(req.controls[1], (ControlSpec{ControlType::canny, kDefaultControlStrength}));
    EXPECT_EQ(req.negative_prompt, kDefaultNegativePrompt);
    EXPECT_EQ(req.seed, 11u);

    auto none = canvas_request();
    none.control_strength = 0.0;
    EXPECT_TRUE(build_inpaint_request(none).controls.empty());
}

TEST(Background, InvalidRequestsRejected) {
    auto r = canvas_request();
    r.control_strength = 1.5;
    EXPECT_THROW(build_inpaint_request(r), InvalidArgument);
    r = canvas_request();
    r.prompt = "  ";
    EXPECT_THROW(build_inpaint_request(r), InvalidArgument);
    r = canvas_request();
    r.foreground_alpha = GrayImage(10, 10, 0);
    EXPECT_THROW(build_inpaint_request(r), InvalidArgument);
}

TEST(Background, ProductPixelsSurvive) {
    MockInpainter backend;
    const auto req = canvas_request();
    const auto out = generate_background(backend, req);
    EXPECT_TRUE(out.preservation.pass);
    EXPECT_EQ(out.preservation.changed_fraction, 0.0);
    EXPECT_TRUE(out.audit.pass);
    for (int y = 400; y < 768; y += 7)
        for (int x = 300; x < 500; x += 7) ASSERT_EQ(out.ad_image.at(x, y)[0], 90);
    // the margin stays white, the rest is repainted
    EXPECT_EQ(out.ad_image.at(296, 500)[0], 255);
    EXPECT_FALSE(out.inpaint_mask.get(296, 500));
    EXPECT_TRUE(out.inpaint_mask.get(10, 10));
    EXPECT_NE(out.ad_image, req.canvas);
}

TEST(Background, RogueBackendIsPostComposited) {
    RogueInpainter backend;
    const auto out = generate_background(backend, canvas_request());
    EXPECT_TRUE(out.preservation.pass);
    EXPECT_FALSE(out.audit.pass);
    EXPECT_EQ(out.audit.changed_fraction, 1.0);
    EXPECT_EQ(out.audit.max_channel_delta, 252);
    EXPECT_EQ(out.ad_image.at(400, 500)[0], 90);
    EXPECT_EQ(out.raw_image.at(400, 500)[0], 3);
}

TEST(Background, SeedAndPromptDetermineOutput) {
    MockInpainter backend;
    auto req = canvas_request();
    const auto a = generate_background(backend, req);
    const auto b = generate_background(backend, req);
    EXPECT_EQ(a.ad_image, b.ad_image);
    req.seed = 12;
    EXPECT_NE(generate_background(backend, req).ad_image, a.ad_image);
}

TEST(AblationA4, ClearsControlsOnly) {
    const auto req = build_inpaint_request(canvas_request());
    const auto a4 = apply_ablation_A4(req);
    EXPECT_TRUE(a4.controls.empty());
    EXPECT_EQ(apply_ablation_A4(a4), a4);
    auto expected = req;
    expected.controls.clear();
    EXPECT_EQ(a4, expected);

    MockInpainter backend;
    const auto out = generate_background(backend, canvas_request(), true);
    EXPECT_TRUE(out.request.controls.empty());
    EXPECT_EQ(out.request.canvas, req.canvas);
    EXPECT_EQ(out.request.inpaint_mask, req.inpaint_mask);
}

TEST(Background, NoForegroundRepaintsEverything) {
    auto req = canvas_request();
    req.foreground_alpha = GrayImage(kCanvasSize, kCanvasSize, 0);
    MockInpainter backend;
    const auto out = generate_background(backend, req);
    EXPECT_EQ(out.inpaint_mask.count(), static_cast<std::size_t>(kCanvasSize) * kCanvasSize);
    EXPECT_TRUE(out.preservation.pass);
    EXPECT_EQ(out.preservation.changed_fraction, 0.0);
}

TEST(Preservation, JsonRoundTrip) {
    const PreservationReport r{0.25, 17, false};
    EXPECT_EQ(preservation_from_json(preservation_to_json(r)), r);
}
