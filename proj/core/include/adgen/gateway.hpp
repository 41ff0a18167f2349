#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adgen/image.hpp"

namespace adgen {

using EncodedImage = std::vector<std::uint8_t>;

inline constexpr std::size_t kMaxChatImages = 4;

struct ChatVisionRequest {
    std::optional<std::string> system_prompt;
    std::string user_text;
    std::vector<EncodedImage> images;  // PNG bytes, dispatch order preserved
    std::string model_id = "gpt-4o";
    double temperature = 0.0;
};

struct DepthMap {
    int width = 0;
    int height = 0;
    std::vector<float> values;        // metres, row-major
    std::vector<std::uint8_t> valid;  // 1 where values is meaningful

    float at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
    bool is_valid(int x, int y) const { return valid[static_cast<std::size_t>(y) * width + x] != 0; }
};

/// Foreground-true mask with the queried image's dimensions.
using SegmentationMask = Mask;

enum class ControlType { depth, canny };

std::string to_string(ControlType type);
ControlType parse_control_type(std::string_view text);

struct ControlSpec {
    ControlType type = ControlType::depth;
    double strength = 0.0;
    bool operator==(const ControlSpec&) const = default;
};

inline constexpr int kCanvasSize = 1024;
inline constexpr int kDefaultInpaintSteps = 30;

struct InpaintRequest {
    RgbImage canvas;
    Mask inpaint_mask;  // true = the model may repaint this pixel
    std::string prompt;
    std::string negative_prompt;
    std::vector<ControlSpec> controls;
    std::uint64_t seed = 0;
    int steps = kDefaultInpaintSteps;

    bool operator==(const InpaintRequest&) const = default;
};

struct InpaintResult {
    RgbImage image;  // mask-false pixels copied back from the canvas
    RgbImage raw;    // backend output before post-compositing, kept for audit
};

class VisionChatBackend {
public:
    virtual ~VisionChatBackend() = default;
    virtual std::string complete(const ChatVisionRequest& req) = 0;
};

class DepthBackend {
public:
    virtual ~DepthBackend() = default;
    virtual DepthMap estimate(const RgbImage& image) = 0;
};

class SegmentationBackend {
public:
    virtual ~SegmentationBackend() = default;
    virtual SegmentationMask segment(const RgbImage& image, std::string_view query) = 0;
};

class InpaintBackend {
public:
    virtual ~InpaintBackend() = default;
    virtual RgbImage inpaint(const InpaintRequest& req) = 0;
};

/// The four model capabilities the pipeline consumes.
struct ModelGateway {
    std::shared_ptr<VisionChatBackend> chat;
    std::shared_ptr<DepthBackend> depth;
    std::shared_ptr<SegmentationBackend> segmenter;
    std::shared_ptr<InpaintBackend> inpainter;
    std::string chat_model = "gpt-4o";
};

// Validating front doors. Preconditions are checked before dispatch
// (InvalidArgument) and backend replies of the wrong shape raise
// BackendProtocolViolation.
std::string chat_vision(VisionChatBackend& backend, const ChatVisionRequest& req);
DepthMap estimate_depth(DepthBackend& backend, const RgbImage& image);
SegmentationMask segment(SegmentationBackend& backend, const RgbImage& image, std::string_view query);
InpaintResult inpaint(InpaintBackend& backend, const InpaintRequest& req);

void validate_inpaint_request(const InpaintRequest& req);

/// Copies every mask-false pixel of `canvas` into `image`.
void composite_protected(RgbImage& image, const RgbImage& canvas, const Mask& inpaint_mask);

/// Stable content key of a raster (dimensions + pixels).
std::string image_key(const RgbImage& image);

}  // namespace adgen
