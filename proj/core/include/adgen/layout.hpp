#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "adgen/gateway.hpp"
#include "adgen/image.hpp"
#include "adgen/pairing.hpp"
#include "adgen/room_type.hpp"

namespace adgen {

struct SceneBrief {
    std::string desc_a;             // <= 3 words
    std::string desc_b;             // <= 3 words
    std::string layout_prompt;      // <= 30 words
    std::string photo_description;  // <= 40 words
    std::string theme;
    RoomType room_type = RoomType::living_room;
    bool operator==(const SceneBrief&) const = default;
};

nlohmann::json brief_to_json(const SceneBrief& b);
SceneBrief brief_from_json(const nlohmann::json& j);

inline constexpr std::size_t kMaxDescWords = 3;
inline constexpr std::size_t kMaxLayoutPromptWords = 30;
inline constexpr std::size_t kMaxPhotoWords = 40;

/// Two-image scene prompt. Over-long answers are truncated and noted in
/// `diagnostics`; missing answers throw UnparseableModelOutput.
SceneBrief describe_scene(VisionChatBackend& chat, const RgbImage& image_a, const RgbImage& image_b, RoomType room,
                          std::string_view theme, const std::string& model_id = "gpt-4o",
                          std::vector<std::string>* diagnostics = nullptr);

/// Product label used inside the layout prompt: the short description, with
/// " (L x W x H cm)" appended when dimensions are known.
std::string layout_product_label(std::string_view desc, const std::optional<Dimensions>& dims);

struct LayoutTextRequest {
    std::string product_a;  // as produced by layout_product_label
    std::string product_b;
    double aspect_a = 1.0;  // width / height of the tight cutout box
    double aspect_b = 1.0;
    std::string layout_prompt;
    std::vector<std::string> feedback;  // validation findings from a previous attempt
};

ChatVisionRequest layout_chat_request(const LayoutTextRequest& req, const RgbImage& image_a, const RgbImage& image_b,
                                      const std::string& model_id = "gpt-4o");

/// Raw model text for the layout request. Throws InvalidArgument on
/// non-positive aspect ratios.
std::string generate_layout_text(VisionChatBackend& chat, const LayoutTextRequest& req, const RgbImage& image_a,
                                 const RgbImage& image_b, const std::string& model_id = "gpt-4o");

struct LayoutBox {
    std::string label;
    int width_px = 0;
    int height_px = 0;
    int left_px = 0;
    int top_px = 0;
    int layer = 0;  // 0 = foreground

    int right() const { return left_px + width_px; }
    int bottom() const { return top_px + height_px; }
    PixelRect rect() const { return {left_px, top_px, width_px, height_px}; }
    bool operator==(const LayoutBox&) const = default;
};

inline constexpr int kFloorLinePx = 768;
inline constexpr int kFloorBandPx = 160;

struct LayoutSpec {
    std::array<LayoutBox, 2> boxes;  // product A, product B
    int canvas_px = kCanvasSize;
    int floor_line_px = kFloorLinePx;
    // Source products of the boxes. Not part of the line format.
    std::array<std::string, 2> item_ids;
    bool operator==(const LayoutSpec&) const = default;
};

/// `label {width: Wpx; height: Hpx; left: Lpx; top: Tpx; layer: N}` per box,
/// newline separated.
std::string serialize_layout(const LayoutSpec& spec);

/// Parses the two layout lines. Lines without braces (prose, code fences)
/// are ignored. When `expected_labels` are non-empty they replace the model's
/// labels in order. Throws LayoutParseError.
LayoutSpec parse_layout(std::string_view raw, const std::array<std::string, 2>& expected_labels = {});

enum class FindingKind { bounds, aspect, relative_scale, floor, overlap_layer };
std::string to_string(FindingKind kind);

enum class LayoutAction { accept, retry, clamp_and_accept };
std::string to_string(LayoutAction action);

struct LayoutFinding {
    FindingKind kind = FindingKind::bounds;
    int box = -1;  // index of the offending box, -1 when it concerns the pair
    double measured = 0.0;
    double limit = 0.0;
    std::string message;
    LayoutAction severity = LayoutAction::accept;
};

struct ValidationPolicy {
    std::map<FindingKind, LayoutAction> actions = {
        {FindingKind::bounds, LayoutAction::retry},        {FindingKind::aspect, LayoutAction::accept},
        {FindingKind::relative_scale, LayoutAction::retry}, {FindingKind::floor, LayoutAction::retry},
        {FindingKind::overlap_layer, LayoutAction::retry},
    };
    double aspect_tolerance = 0.10;
    double relative_scale_tolerance = 0.40;
    int floor_band_px = kFloorBandPx;
    int max_retries = 3;
    bool check_relative_scale = true;

    LayoutAction action_for(FindingKind kind) const;
};

struct ValidationReport {
    std::vector<LayoutFinding> findings;
    LayoutAction decision = LayoutAction::accept;
    bool has(FindingKind kind) const;
};

nlohmann::json report_to_json(const ValidationReport& r);
ValidationReport report_from_json(const nlohmann::json& j);

ValidationReport validate_layout(const LayoutSpec& spec, double aspect_a, double aspect_b,
                                 const std::optional<Dimensions>& dims_a, const std::optional<Dimensions>& dims_b,
                                 const ValidationPolicy& policy = {});

/// Forces a spec into shape: fixes relative scale against the dimensions
/// (resizing box B about its bottom centre), drops floating boxes onto the
/// floor line, separates the layers of overlapping boxes and finally rescales
/// and shifts every box inside the canvas.
LayoutSpec clamp_layout(const LayoutSpec& spec, const std::optional<Dimensions>& dims_a,
                        const std::optional<Dimensions>& dims_b, const ValidationPolicy& policy = {});

struct LayoutAttempt {
    std::string raw;
    std::string error;  // parse failure, if any
    ValidationReport report;
};

struct LayoutPlan {
    LayoutSpec spec;
    ValidationReport report;  // report of the accepted attempt (before clamping)
    std::vector<LayoutAttempt> attempts;
    bool clamped = false;
    std::string raw;  // text of the accepted attempt
};

/// Generate, parse, validate; retry with the findings appended while the
/// policy says retry; clamp after the last retry.
LayoutPlan plan_layout(VisionChatBackend& chat, const LayoutTextRequest& req, const RgbImage& image_a,
                       const RgbImage& image_b, const std::optional<Dimensions>& dims_a,
                       const std::optional<Dimensions>& dims_b, const ValidationPolicy& policy = {},
                       const std::string& model_id = "gpt-4o");

/// Checks a caller-supplied spec. Retry findings cannot be retried here, so
/// they are clamped.
LayoutPlan accept_user_layout(const LayoutSpec& spec, double aspect_a, double aspect_b,
                              const std::optional<Dimensions>& dims_a, const std::optional<Dimensions>& dims_b,
                              const ValidationPolicy& policy = {});

/// Side-by-side placement: equal heights, bottoms on the floor line, the
/// pair centred horizontally.
LayoutSpec side_by_side_layout(const std::string& label_a, double aspect_a, const std::string& label_b,
                               double aspect_b);

struct Cutout {
    RgbaImage rgba;
    std::string source_item;
    PixelRect bbox_tight;
    double aspect() const { return static_cast<double>(bbox_tight.width) / bbox_tight.height; }
};

/// remove_white: alpha from segment(image, "product"); otherwise opaque.
/// Throws EmptyForeground when no pixel survives.
Cutout extract_cutout(const RgbImage& image, bool remove_white, SegmentationBackend& segmenter,
                      std::string source_item = {});

/// Tight box of alpha > 0, empty rect when there is none.
PixelRect alpha_bbox(const RgbaImage& rgba);

struct ComposedCanvas {
    RgbImage canvas;
    GrayImage alpha;
};

/// Where a cutout of the given size lands inside `box`: letterbox fit, centred.
PixelRect fit_rect(const LayoutBox& box, int content_width, int content_height);

/// Cutouts are matched to boxes through item ids when both sides carry them,
/// otherwise by position.
ComposedCanvas compose_canvas(const LayoutSpec& spec, const Cutout& a, const Cutout& b);

}  // namespace adgen
