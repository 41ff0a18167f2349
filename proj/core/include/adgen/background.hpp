#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include <json.hpp>

#include "adgen/gateway.hpp"
#include "adgen/image.hpp"
#include "adgen/layout.hpp"

namespace adgen {

inline constexpr const char* kDefaultNegativePrompt = "deformed, extra limbs, text, watermark, low quality";
inline constexpr double kDefaultControlStrength = 0.2;
inline constexpr int kDefaultProtectMarginPx = 4;

struct BackgroundPrompt {
    std::string prompt;
    std::string negative_prompt;
};

/// user_edit verbatim if given, else the photo description; the theme is
/// appended as ", <Theme> style" when the text does not mention it.
BackgroundPrompt build_background_prompt(const SceneBrief& brief, const std::optional<std::string>& user_edit = {},
                                         const std::string& negative_prompt = kDefaultNegativePrompt);

/// true = repaintable. Protected = alpha > 0 dilated by a square of radius
/// `protect_margin_px`.
Mask make_inpaint_mask(const GrayImage& foreground_alpha, int protect_margin_px = kDefaultProtectMarginPx);

struct BackgroundRequest {
    RgbImage canvas;
    GrayImage foreground_alpha;
    std::string prompt;
    std::string negative_prompt = kDefaultNegativePrompt;
    double control_strength = kDefaultControlStrength;
    std::uint64_t seed = 0;
    int protect_margin_px = kDefaultProtectMarginPx;
    int steps = kDefaultInpaintSteps;
};

struct PreservationReport {
    double changed_fraction = 0.0;
    int max_channel_delta = 0;
    bool pass = true;
    bool operator==(const PreservationReport&) const = default;
};

nlohmann::json preservation_to_json(const PreservationReport& r);
PreservationReport preservation_from_json(const nlohmann::json& j);

/// Compares `image` with `canvas` on the protected (mask-false) pixels.
PreservationReport measure_preservation(const RgbImage& image, const RgbImage& canvas, const Mask& inpaint_mask);

InpaintRequest build_inpaint_request(const BackgroundRequest& req);

/// Removes every structural control.
InpaintRequest apply_ablation_A4(InpaintRequest req);

struct BackgroundResult {
    RgbImage ad_image;
    Mask inpaint_mask;
    PreservationReport preservation;  // of the shipped image, always a pass
    PreservationReport audit;         // of the raw backend output
    RgbImage raw_image;
    InpaintRequest request;
};

BackgroundResult generate_background(InpaintBackend& backend, const BackgroundRequest& req, bool ablate_controls = false);

}  // namespace adgen
