#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <thread>

#include "adgen/errors.hpp"
#include "adgen/gateway.hpp"
#include "adgen/gateway_config.hpp"
#include "adgen/hashing.hpp"
#include "adgen/http_backends.hpp"
#include "adgen/json_answer.hpp"
#include "adgen/mock_backends.hpp"
#include "test_env.hpp"

// after Eigen: resolv.h defines _res
#include <httplib.h>

using namespace adgen;

namespace {

ChatVisionRequest profile_request() {
    ChatVisionRequest req;
    req.system_prompt = "profiler";
    req.user_text = "sofa please";
    req.images.push_back(encode_png(testenv::solid_image(8, 8, 10, 20, 30)));
    return req;
}

InpaintRequest blank_request(bool mask_value) {
    InpaintRequest r;
    r.canvas = RgbImage(kCanvasSize, kCanvasSize, 255);
    for (int y = 400; y < 600; ++y) {
        for (int x = 300; x < 500; ++x) {
            auto* p = r.canvas.at(x, y);
            p[0] = 90, p[1] = 40, p[2] = 10;
        }
    }
    r.inpaint_mask = Mask(kCanvasSize, kCanvasSize, mask_value);
    r.prompt = "modern living room";
    r.seed = 5;
    return r;
}

// In-process stand-in for an external model service.
class FakeService {
public:
    explicit FakeService(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
        server_.Post("/.*", [this, handler](const httplib::Request& req, httplib::Response& res) {
            ++calls;
            handler(req, res);
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeService() {
        server_.stop();
        thread_.join();
    }
    std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }
    std::atomic<int> calls{0};

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

BackendConfig http_config(const std::string& endpoint, int attempts = 3) {
    BackendConfig c;
    c.kind = BackendKind::http;
    c.endpoint = endpoint;
    c.timeout_s = 2.0;
    c.retry.max_attempts = attempts;
    c.retry.backoff_base_s = 0.0;
    return c;
}

}  // namespace

TEST(JsonAnswer, StripsFences) {
    const auto j = parse_json_answer("```json\n{\"score\": 4, \"explanation\": \"ok\"}\n```");
    EXPECT_EQ(j.at("score"), 4);
}

TEST(JsonAnswer, CleanObject) { EXPECT_TRUE(parse_json_answer(R"({"1":"Yes"})").contains("1")); }

TEST(JsonAnswer, StripsProse) { EXPECT_EQ(parse_json_answer("Sure! {\"a\":1} trailing"), nlohmann::json({{"a", 1}})); }

TEST(JsonAnswer, BracesInsideStrings) {
    EXPECT_EQ(parse_json_answer(R"(x {"a": "}{", "b": {"c": 2}} y)").at("b").at("c"), 2);
}

TEST(JsonAnswer, SkipsUnparseableCandidates) {
    EXPECT_EQ(parse_json_answer("{not json} then {\"k\": true}").at("k"), true);
}

TEST(JsonAnswer, NoObjectKeepsRawText) {
    try {
        parse_json_answer("no json here {");
        FAIL();
    } catch (const UnparseableModelOutput& e) {
        EXPECT_EQ(e.raw(), "no json here {");
    }
}

TEST(MockChat, ConfiguredRuleIsEchoed) {
    MockVisionChat chat;
    chat.add_rule({{"sofa"}, {R"({"1":"Yes","2":"gray fabric sofa","3":"200 x 90 x 85 in cm","4":"living room"})"}});
    EXPECT_EQ(chat_vision(chat, profile_request()),
              R"({"1":"Yes","2":"gray fabric sofa","3":"200 x 90 x 85 in cm","4":"living room"})");
}

TEST(MockChat, IdenticalRequestsIdenticalText) {
    MockVisionChat chat(3);
    chat.add_rule({{"sofa"}, {"a", "b", "c", "d", "e"}});
    const auto first = chat_vision(chat, profile_request());
    for (int i = 0; i < 5; ++i) EXPECT_EQ(chat_vision(chat, profile_request()), first);
}

TEST(MockChat, KeyDependsOnImagesAndSeed) {
    MockVisionChat a(1), b(2);
    auto req = profile_request();
    EXPECT_NE(a.request_key(req), b.request_key(req));
    auto other = req;
    other.images[0] = encode_png(testenv::solid_image(8, 8, 11, 20, 30));
    EXPECT_NE(a.request_key(req), a.request_key(other));
}

TEST(MockChat, EmptyUserTextRejectedBeforeDispatch) {
    MockVisionChat chat;
    auto req = profile_request();
    req.user_text = "  ";
    EXPECT_THROW(chat_vision(chat, req), InvalidArgument);
    req.user_text = "x";
    req.images.assign(5, req.images[0]);
    EXPECT_THROW(chat_vision(chat, req), InvalidArgument);
}

TEST(MockChat, NoRuleIsATestBug) {
    MockVisionChat chat;
    EXPECT_THROW(chat_vision(chat, profile_request()), MockRuleMissing);
}

TEST(MockChat, RulesFromJson) {
    const auto rules = mock_rules_from_json(
        nlohmann::json::parse(R"({"rules": [{"contains": ["sofa"], "responses": ["r1"]}]})"));
    ASSERT_EQ(rules.size(), 1u);
    EXPECT_EQ(rules[0].contains, std::vector<std::string>{"sofa"});
}

TEST(MockDepth, FloorDepthGrowsTowardHorizon) {
    const auto k = intrinsics_from_fov(320, 240);
    const auto d = synthesize_plane_depth(320, 240, k, {});
    // theta = 0: horizon at cy; rows within 16 of it lie past the 20 m cap
    for (int x : {0, 160, 319}) {
        EXPECT_FALSE(d.is_valid(x, 130));
        float prev = 0.0f;
        for (int v = 239; v > 136; --v) {
            ASSERT_TRUE(d.is_valid(x, v)) << v;
            EXPECT_GT(d.at(x, v), prev);
            prev = d.at(x, v);
        }
    }
    for (int v = 0; v <= 120; ++v) EXPECT_FALSE(d.is_valid(160, v));
}

TEST(MockDepth, TiltChangesDepth) {
    const auto k = intrinsics_from_fov(320, 240);
    SyntheticPlaneParams tilted;
    tilted.tilt_deg = 20.0;
    const auto a = synthesize_plane_depth(320, 240, k, {});
    const auto b = synthesize_plane_depth(320, 240, k, tilted);
    EXPECT_NE(a.at(160, 200), b.at(160, 200));
}

TEST(MockDepth, MatchesClosedForm) {
    const auto k = intrinsics_from_fov(200, 150);
    SyntheticPlaneParams p;
    p.tilt_deg = 15.0;
    p.camera_height_m = 1.4;
    const auto d = synthesize_plane_depth(200, 150, k, p);
    const double t = 15.0 * M_PI / 180.0;
    for (int v : {60, 90, 149}) {
        const double expected = 1.4 / (std::cos(t) * (v - k.cy) / k.fy + std::sin(t));
        EXPECT_NEAR(d.at(37, v), expected, 1e-5 * expected);
    }
}

// sigma = 0.01: the relative error against a closed-form clean depth has a
// sample standard deviation of 0.01 +- 0.002.
TEST(MockDepth, NoiseStddev) {
    const int w = 256, h = 192;
    const auto k = intrinsics_from_fov(w, h);
    SyntheticPlaneParams p;
    p.tilt_deg = 10.0;
    p.noise_sigma = 0.01;
    p.seed = 99;
    const auto d = synthesize_plane_depth(w, h, k, p);
    const double t = 10.0 * M_PI / 180.0;
    double sum = 0.0, sum_sq = 0.0;
    std::size_t n = 0;
    for (int v = 0; v < h; ++v) {
        for (int u = 0; u < w; ++u) {
            if (!d.is_valid(u, v)) continue;
            const double clean = 1.0 / (std::cos(t) * (v - k.cy) / k.fy + std::sin(t));
            const double rel = (d.at(u, v) - clean) / clean;
            sum += rel;
            sum_sq += rel * rel;
            ++n;
        }
    }
    ASSERT_GT(n, 10000u);
    const double mean = sum / n;
    const double var = (sum_sq - n * mean * mean) / (n - 1);
    EXPECT_NEAR(std::sqrt(var), 0.01, 0.002);
}

TEST(MockDepth, ConfiguredTiltByImage) {
    const auto img = testenv::solid_image(64, 48, 200, 200, 200);
    MockDepthConfig cfg;
    cfg.tilt_by_image[image_key(img)] = 33.0;
    MockDepth depth(cfg);
    SyntheticPlaneParams p;
    p.tilt_deg = 33.0;
    const auto expected = synthesize_plane_depth(64, 48, intrinsics_from_fov(64, 48), p);
    const auto got = estimate_depth(depth, img);
    EXPECT_EQ(got.values, expected.values);
}

TEST(MockSegment, PureWhiteIsBackground) {
    MockSegmenter seg;
    EXPECT_EQ(segment(seg, RgbImage(64, 64, 255), "product").count(), 0u);
}

TEST(MockSegment, BlackSquareIsForeground) {
    MockSegmenter seg;
    RgbImage img(64, 64, 255);
    for (int y = 22; y < 42; ++y) {
        for (int x = 22; x < 42; ++x) std::fill_n(img.at(x, y), 3, 0);
    }
    const auto m = segment(seg, img, "product");
    EXPECT_EQ(m.count(), 400u);
    for (int y = 0; y < 64; ++y) {
        for (int x = 0; x < 64; ++x) EXPECT_EQ(m.get(x, y), x >= 22 && x < 42 && y >= 22 && y < 42);
    }
}

// sofa_fixture.png is an anti-aliased silhouette; 22659 pixels have at least
// half coverage, counted once when the fixture was made.
TEST(MockSegment, FixtureAreaNearHandCount) {
    const auto img = load_rgb(testenv::data_dir() / "sofa_fixture.png");
    MockSegmenter seg;
    const double area = static_cast<double>(segment(seg, img, "product").count());
    EXPECT_NEAR(area, 22659.0, 0.05 * 22659.0);
}

TEST(MockInpaint, AllFalseMaskIsIdentity) {
    MockInpainter m;
    const auto r = blank_request(false);
    EXPECT_EQ(inpaint(m, r).image, r.canvas);
}

TEST(MockInpaint, Deterministic) {
    MockInpainter m;
    const auto r = blank_request(true);
    EXPECT_EQ(inpaint(m, r).image, inpaint(m, r).image);
}

TEST(MockInpaint, PromptChangesOnlyMaskedPixels) {
    MockInpainter m;
    auto a = blank_request(false);
    for (int y = 0; y < kCanvasSize; ++y) {
        for (int x = 0; x < 300; ++x) a.inpaint_mask.set(x, y, true);
    }
    auto b = a;
    b.prompt = "coastal living room";
    const auto ia = inpaint(m, a).image;
    const auto ib = inpaint(m, b).image;
    std::size_t differing = 0;
    for (int y = 0; y < kCanvasSize; ++y) {
        for (int x = 0; x < kCanvasSize; ++x) {
            const bool same = std::equal(ia.at(x, y), ia.at(x, y) + 3, ib.at(x, y));
            if (!a.inpaint_mask.get(x, y)) {
                ASSERT_TRUE(same);
                ASSERT_TRUE(std::equal(ia.at(x, y), ia.at(x, y) + 3, a.canvas.at(x, y)));
            } else if (!same) {
                ++differing;
            }
        }
    }
    EXPECT_GT(differing, 0u);
}

TEST(Inpaint, ValidatesRequest) {
    MockInpainter m;
    auto r = blank_request(true);
    r.controls = {{ControlType::depth, 1.5}};
    EXPECT_THROW(inpaint(m, r), InvalidArgument);
    r = blank_request(true);
    r.inpaint_mask = Mask(10, 10);
    EXPECT_THROW(inpaint(m, r), InvalidArgument);
    r = blank_request(true);
    r.steps = 0;
    EXPECT_THROW(inpaint(m, r), InvalidArgument);
}

TEST(Inpaint, WrapperRestoresProtectedPixels) {
    // a backend that ignores the mask entirely
    struct Rogue final : InpaintBackend {
        RgbImage inpaint(const InpaintRequest& req) override { return RgbImage(req.canvas.width(), req.canvas.height(), 7); }
    } rogue;
    const auto r = blank_request(false);
    const auto out = inpaint(rogue, r);
    EXPECT_EQ(out.image, r.canvas);
    EXPECT_NE(out.raw, r.canvas);
}

TEST(GatewayConfig, RoundTripAndValidation) {
    auto g = mock_gateway_config();
    g.depth.mock["default_tilt_deg"] = 12.5;
    const auto back = gateway_config_from_json(gateway_config_to_json(g));
    EXPECT_EQ(back.depth.mock["default_tilt_deg"], 12.5);
    EXPECT_THROW(gateway_config_from_json(nlohmann::json::parse(R"({"chat": {"kind": "http"}})")), InvalidArgument);
    EXPECT_THROW(gateway_config_from_json(nlohmann::json::parse(R"({"chat": {"kind": "grpc"}})")), InvalidArgument);
}

TEST(GatewayConfig, BuildsMockGateway) {
    const auto gw = build_gateway(mock_gateway_config());
    ASSERT_TRUE(gw.chat && gw.depth && gw.segmenter && gw.inpainter);
    EXPECT_EQ(mock_depth_config_from_json(nlohmann::json::parse(R"({"tilts": {"k": 4.0}})")).tilt_by_image.at("k"), 4.0);
}

TEST(HttpBackend, UnreachableIsBackendUnavailableAfterRetries) {
    int port = 0;
    {
        httplib::Server probe;
        port = probe.bind_to_any_port("127.0.0.1");
    }  // closed again: nothing listens there now
    HttpVisionChat chat(http_config("http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions"));
    int sleeps = 0;
    chat.transport().sleeper = [&](std::chrono::duration<double>) { ++sleeps; };
    EXPECT_THROW(chat_vision(chat, profile_request()), BackendUnavailable);
    EXPECT_EQ(sleeps, 2);
}

TEST(HttpBackend, BackoffDoubles) {
    FakeService svc([](const httplib::Request&, httplib::Response& res) { res.status = 503; });
    auto cfg = http_config(svc.url("/chat"), 4);
    cfg.retry.backoff_base_s = 0.5;
    HttpVisionChat chat(cfg);
    std::vector<double> waits;
    chat.transport().sleeper = [&](std::chrono::duration<double> d) { waits.push_back(d.count()); };
    EXPECT_THROW(chat_vision(chat, profile_request()), BackendUnavailable);
    EXPECT_EQ(svc.calls, 4);
    EXPECT_EQ(waits, (std::vector<double>{0.5, 1.0, 2.0}));
}

TEST(HttpBackend, ChatRoundTrip) {
    nlohmann::json seen;
    FakeService svc([&](const httplib::Request& req, httplib::Response& res) {
        seen = nlohmann::json::parse(req.body);
        res.set_content(R"({"choices": [{"message": {"content": "hello"}}]})", "application/json");
    });
    HttpVisionChat chat(http_config(svc.url("/v1/chat/completions")));
    EXPECT_EQ(chat_vision(chat, profile_request()), "hello");
    ASSERT_EQ(seen["messages"].size(), 2u);
    EXPECT_EQ(seen["messages"][0]["role"], "system");
    const auto& content = seen["messages"][1]["content"];
    EXPECT_EQ(content[0]["text"], "sofa please");
    EXPECT_EQ(content[1]["type"], "image_url");
}

TEST(HttpBackend, InpaintWrongDimensionsIsProtocolViolation) {
    FakeService svc([](const httplib::Request&, httplib::Response& res) {
        const nlohmann::json body = {{"image", base64_encode(encode_png(RgbImage(512, 512, 0)))}};
        res.set_content(body.dump(), "application/json");
    });
    HttpInpainter backend(http_config(svc.url("/inpaint")));
    EXPECT_THROW(inpaint(backend, blank_request(true)), BackendProtocolViolation);
}

TEST(HttpBackend, InpaintPostCompositeEnforced) {
    FakeService svc([](const httplib::Request& req, httplib::Response& res) {
        const auto body = nlohmann::json::parse(req.body);
        EXPECT_EQ(body["controls"].size(), 1u);
        const nlohmann::json reply = {{"image", base64_encode(encode_png(RgbImage(kCanvasSize, kCanvasSize, 3)))}};
        res.set_content(reply.dump(), "application/json");
    });
    HttpInpainter backend(http_config(svc.url("/inpaint")));
    auto r = blank_request(false);
    r.controls = {{ControlType::canny, 0.2}};
    const auto out = inpaint(backend, r);
    EXPECT_EQ(out.image, r.canvas);
}

TEST(HttpBackend, ClientErrorFailsFast) {
    FakeService svc([](const httplib::Request&, httplib::Response& res) { res.status = 400; });
    HttpVisionChat chat(http_config(svc.url("/chat")));
    chat.transport().sleeper = [](std::chrono::duration<double>) {};
    EXPECT_THROW(chat_vision(chat, profile_request()), BackendUnavailable);
    EXPECT_EQ(svc.calls, 1);
}

TEST(HttpBackend, HttpKindNeedsEndpoint) {
    BackendConfig c;
    c.kind = BackendKind::http;
    EXPECT_THROW(c.validate(), InvalidArgument);
}
