#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "adgen/gateway.hpp"
#include "adgen/geometry.hpp"

namespace adgen {

/// A static chat reply: fires when every `contains` substring occurs in the
/// system prompt or user text. With several `responses`, one is chosen by the
/// request key so repeated requests always get the same text.
struct MockRule {
    std::vector<std::string> contains;
    std::vector<std::string> responses;
};

/// Programmatic reply. Returns nullopt to decline the request.
using MockResponder = std::function<std::optional<std::string>(const ChatVisionRequest&, std::uint64_t key)>;

class MockVisionChat final : public VisionChatBackend {
public:
    explicit MockVisionChat(std::uint64_t seed = 0) : seed_(seed) {}

    void add_rule(MockRule rule) { rules_.push_back(std::move(rule)); }
    void add_responder(MockResponder responder) { responders_.push_back(std::move(responder)); }

    /// Deterministic key of (system prompt, user text, images, seed).
    std::uint64_t request_key(const ChatVisionRequest& req) const;

    /// Static rules first (in insertion order), then responders. Throws
    /// MockRuleMissing when nothing matches.
    std::string complete(const ChatVisionRequest& req) override;

private:
    std::uint64_t seed_;
    std::vector<MockRule> rules_;
    std::vector<MockResponder> responders_;
};

/// Parses `{"rules": [{"contains": [...], "responses": [...]}], "seed": N}`.
std::vector<MockRule> mock_rules_from_json(const nlohmann::json& j);

/// Scripted replies for the bundled prompt families: product profiling from
/// the title text, scene briefs, layout planning from the stated aspect
/// ratios and sizes, and judge verdicts. `image_labels` maps sha256 of PNG
/// bytes to a short product description used by the scene writer.
void install_builtin_responders(MockVisionChat& chat, std::map<std::string, std::string> image_labels = {});

// Individual builtin responders, exposed for tests.
std::optional<std::string> mock_profile_from_title(const ChatVisionRequest& req, std::uint64_t key);
std::optional<std::string> mock_layout_planner(const ChatVisionRequest& req, std::uint64_t key);
std::optional<std::string> mock_judge(const ChatVisionRequest& req, std::uint64_t key);

struct SyntheticPlaneParams {
    double tilt_deg = 0.0;          // camera pitch below horizontal
    double camera_height_m = 1.0;   // camera height above the floor
    double noise_sigma = 0.0;       // multiplicative, fraction of depth
    double max_depth_m = 20.0;      // farther floor is reported invalid
    std::uint64_t seed = 0;
};

/// Metric depth of an infinite floor plane seen by a pinhole camera pitched
/// down by `tilt_deg`. In camera coordinates the floor normal is
/// (0, -cos t, -sin t) and the plane is n . X = -h.
DepthMap synthesize_plane_depth(int width, int height, const CameraIntrinsics& intrinsics,
                                const SyntheticPlaneParams& params);

struct MockDepthConfig {
    double default_tilt_deg = 10.0;
    std::map<std::string, double> tilt_by_image;  // image_key() -> tilt
    double camera_height_m = 1.0;
    double noise_sigma = 0.0;
    double max_depth_m = 20.0;
    double hfov_deg = kDefaultHorizontalFovDeg;
    std::uint64_t seed = 0;
};

class MockDepth final : public DepthBackend {
public:
    explicit MockDepth(MockDepthConfig config) : config_(std::move(config)) {}
    DepthMap estimate(const RgbImage& image) override;
    const MockDepthConfig& config() const { return config_; }

private:
    MockDepthConfig config_;
};

inline constexpr int kDefaultWhiteThreshold = 245;

/// Pixels with every channel >= threshold are background.
class MockSegmenter final : public SegmentationBackend {
public:
    explicit MockSegmenter(int threshold = kDefaultWhiteThreshold) : threshold_(threshold) {}
    SegmentationMask segment(const RgbImage& image, std::string_view query) override;

private:
    int threshold_;
};

/// Fills mask-true pixels with a procedural texture seeded by the request;
/// mask-false pixels are copied from the canvas.
class MockInpainter final : public InpaintBackend {
public:
    RgbImage inpaint(const InpaintRequest& req) override;
};

}  // namespace adgen
