#include "adgen/background.hpp"

#include <algorithm>
#include <cstdlib>
#include <vector>

#include "adgen/errors.hpp"
#include "adgen/text.hpp"

namespace adgen {

using nlohmann::json;

BackgroundPrompt build_background_prompt(const SceneBrief& brief, const std::optional<std::string>& user_edit,
                                         const std::string& negative_prompt) {
    BackgroundPrompt out;
    out.prompt = user_edit ? *user_edit : brief.photo_description;
    const std::string theme = text::trim(brief.theme);
    if (!theme.empty() && !text::icontains(out.prompt, theme)) out.prompt += ", " + theme + " style";
    out.negative_prompt = negative_prompt;
    return out;
}

Mask make_inpaint_mask(const GrayImage& alpha, int margin) {
    if (margin < 0) throw InvalidArgument("protect margin must be >= 0");
    const int w = alpha.width();
    const int h = alpha.height();
    // Separable square dilation: rows, then columns.
    std::vector<std::uint8_t> rows(static_cast<std::size_t>(w) * h, 0);
    for (int y = 0; y < h; ++y) {
        int last = -1'000'000;
        for (int x = 0; x < w; ++x) {
            if (alpha.at(x, y)[0] > 0) last = x;
            if (x - last <= margin) rows[static_cast<std::size_t>(y) * w + x] = 1;
        }
        last = 1'000'000;
        for (int x = w - 1; x >= 0; --x) {
            if (alpha.at(x, y)[0] > 0) last = x;
            if (last - x <= margin) rows[static_cast<std::size_t>(y) * w + x] = 1;
        }
    }
    Mask mask(w, h, true);
    for (int x = 0; x < w; ++x) {
        int last = -1'000'000;
        for (int y = 0; y < h; ++y) {
            if (rows[static_cast<std::size_t>(y) * w + x]) last = y;
            if (y - last <= margin) mask.set(x, y, false);
        }
        last = 1'000'000;
        for (int y = h - 1; y >= 0; --y) {
            if (rows[static_cast<std::size_t>(y) * w + x]) last = y;
            if (last - y <= margin) mask.set(x, y, false);
        }
    }
    return mask;
}

json preservation_to_json(const PreservationReport& r) {
    return {{"changed_fraction", r.changed_fraction}, {"max_channel_delta", r.max_channel_delta}, {"pass", r.pass}};
}

PreservationReport preservation_from_json(const json& j) {
    return {j.at("changed_fraction").get<double>(), j.at("max_channel_delta").get<int>(), j.at("pass").get<bool>()};
}

PreservationReport measure_preservation(const RgbImage& image, const RgbImage& canvas, const Mask& inpaint_mask) {
    if (image.width() != canvas.width() || image.height() != canvas.height()) {
        throw InvalidArgument("preservation check needs equal image sizes");
    }
    std::size_t protected_px = 0;
    std::size_t changed = 0;
    int max_delta = 0;
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            if (inpaint_mask.get(x, y)) continue;
            ++protected_px;
            const std::uint8_t* a = image.at(x, y);
            const std::uint8_t* b = canvas.at(x, y);
            int delta = 0;
            for (int c = 0; c < 3; ++c) delta = std::max(delta, std::abs(int(a[c]) - int(b[c])));
            if (delta) ++changed;
            max_delta = std::max(max_delta, delta);
        }
    }
    PreservationReport r;
    r.changed_fraction = protected_px ? static_cast<double>(changed) / protected_px : 0.0;
    r.max_channel_delta = max_delta;
    r.pass = changed == 0;
    return r;
}

InpaintRequest build_inpaint_request(const BackgroundRequest& req) {
    if (!(req.control_strength >= 0.0 && req.control_strength <= 1.0)) {
        throw InvalidArgument("control strength must lie in [0, 1]");
    }
    if (text::trim(req.prompt).empty()) throw InvalidArgument("background prompt must not be empty");
    if (req.canvas.width() != req.foreground_alpha.width() || req.canvas.height() != req.foreground_alpha.height()) {
        throw InvalidArgument("canvas and foreground alpha differ in size");
    }
    InpaintRequest out;
    out.canvas = req.canvas;
    out.inpaint_mask = make_inpaint_mask(req.foreground_alpha, req.protect_margin_px);
    out.prompt = req.prompt;
    out.negative_prompt = req.negative_prompt;
    if (req.control_strength > 0.0) {
        out.controls = {{ControlType::depth, req.control_strength}, {ControlType::canny, req.control_strength}};
    }
    out.seed = req.seed;
    out.steps = req.steps;
    return out;
}

InpaintRequest apply_ablation_A4(InpaintRequest req) {
    req.controls.clear();
    return req;
}

BackgroundResult generate_background(InpaintBackend& backend, const BackgroundRequest& req, bool ablate_controls) {
    BackgroundResult out;
    out.request = build_inpaint_request(req);
    if (ablate_controls) out.request = apply_ablation_A4(std::move(out.request));
    InpaintResult res = inpaint(backend, out.request);
    out.audit = measure_preservation(res.raw, out.request.canvas, out.request.inpaint_mask);
    out.ad_image = std::move(res.image);
    out.raw_image = std::move(res.raw);
    out.inpaint_mask = out.request.inpaint_mask;
    out.preservation = measure_preservation(out.ad_image, out.request.canvas, out.inpaint_mask);
    return out;
}

}  // namespace adgen
