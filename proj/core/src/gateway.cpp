#include "adgen/gateway.hpp"

#include <cmath>

#include "adgen/errors.hpp"
#include "adgen/hashing.hpp"
#include "adgen/text.hpp"

namespace adgen {

std::string to_string(ControlType type) { return type == ControlType::depth ? "depth" : "canny"; }

ControlType parse_control_type(std::string_view text) {
    const std::string t = text::lower(text);
    if (t == "depth") return ControlType::depth;
    if (t == "canny") return ControlType::canny;
    throw InvalidArgument("unknown control type '" + std::string(text) + "' (expected depth or canny)");
}

std::string chat_vision(VisionChatBackend& backend, const ChatVisionRequest& req) {
    if (text::trim(req.user_text).empty()) throw InvalidArgument("chat request user_text must not be empty");
    if (req.images.size() > kMaxChatImages) throw InvalidArgument("chat request carries more than 4 images");
    if (!(req.temperature >= 0.0 && req.temperature <= 2.0)) throw InvalidArgument("temperature must lie in [0, 2]");
    return backend.complete(req);
}

DepthMap estimate_depth(DepthBackend& backend, const RgbImage& image) {
    if (image.empty()) throw InvalidArgument("depth estimation needs a decoded image");
    DepthMap depth = backend.estimate(image);
    const std::size_t n = image.pixel_count();
    if (depth.width != image.width() || depth.height != image.height() || depth.values.size() != n ||
        depth.valid.size() != n) {
        throw BackendProtocolViolation("depth map dimensions do not match the source image");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (depth.valid[i] && !(std::isfinite(depth.values[i]) && depth.values[i] > 0.0f)) depth.valid[i] = 0;
    }
    return depth;
}

SegmentationMask segment(SegmentationBackend& backend, const RgbImage& image, std::string_view query) {
    if (image.empty()) throw InvalidArgument("segmentation needs a decoded image");
    SegmentationMask mask = backend.segment(image, query);
    if (mask.width() != image.width() || mask.height() != image.height()) {
        throw BackendProtocolViolation("segmentation mask dimensions do not match the source image");
    }
    return mask;
}

void validate_inpaint_request(const InpaintRequest& req) {
    if (req.canvas.width() != kCanvasSize || req.canvas.height() != kCanvasSize) {
        throw InvalidArgument("inpaint canvas must be 1024x1024");
    }
    if (req.inpaint_mask.width() != req.canvas.width() || req.inpaint_mask.height() != req.canvas.height()) {
        throw InvalidArgument("inpaint mask dimensions must equal canvas dimensions");
    }
    for (const auto& c : req.controls) {
        if (!(c.strength >= 0.0 && c.strength <= 1.0)) throw InvalidArgument("control strength must lie in [0, 1]");
    }
    if (req.steps <= 0) throw InvalidArgument("inpaint steps must be positive");
}

void composite_protected(RgbImage& image, const RgbImage& canvas, const Mask& inpaint_mask) {
    for (int y = 0; y < canvas.height(); ++y) {
        for (int x = 0; x < canvas.width(); ++x) {
            if (!inpaint_mask.get(x, y)) {
                const std::uint8_t* src = canvas.at(x, y);
                std::uint8_t* dst = image.at(x, y);
                dst[0] = src[0];
                dst[1] = src[1];
                dst[2] = src[2];
            }
        }
    }
}

InpaintResult inpaint(InpaintBackend& backend, const InpaintRequest& req) {
    validate_inpaint_request(req);
    InpaintResult result;
    result.raw = backend.inpaint(req);
    if (result.raw.width() != req.canvas.width() || result.raw.height() != req.canvas.height()) {
        throw BackendProtocolViolation("inpaint backend returned an image of the wrong dimensions");
    }
    result.image = result.raw;
    composite_protected(result.image, req.canvas, req.inpaint_mask);
    return result;
}

std::string image_key(const RgbImage& image) {
    std::string header = std::to_string(image.width()) + "x" + std::to_string(image.height()) + ":";
    std::vector<std::uint8_t> buf(header.begin(), header.end());
    buf.insert(buf.end(), image.bytes().begin(), image.bytes().end());
    return sha256_hex(buf);
}

}  // namespace adgen
