#include "adgen/layout.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <regex>
#include <set>

#include "adgen/errors.hpp"
#include "adgen/json_answer.hpp"
#include "adgen/prompts.hpp"
#include "adgen/text.hpp"

namespace adgen {

using nlohmann::json;

json brief_to_json(const SceneBrief& b) {
    return {{"desc_a", b.desc_a},
            {"desc_b", b.desc_b},
            {"layout_prompt", b.layout_prompt},
            {"photo_description", b.photo_description},
            {"theme", b.theme},
            {"room_type", to_string(b.room_type)}};
}

SceneBrief brief_from_json(const json& j) {
    SceneBrief b;
    b.desc_a = j.at("desc_a").get<std::string>();
    b.desc_b = j.at("desc_b").get<std::string>();
    b.layout_prompt = j.at("layout_prompt").get<std::string>();
    b.photo_description = j.at("photo_description").get<std::string>();
    b.theme = j.at("theme").get<std::string>();
    b.room_type = parse_room_type(j.at("room_type").get<std::string>());
    return b;
}

namespace {

std::string limited_answer(const json& answers, const char* key, std::size_t max_words, const std::string& raw,
                           std::vector<std::string>* diagnostics) {
    const auto it = answers.find(key);
    if (it == answers.end()) throw UnparseableModelOutput(std::string("scene answer lacks key \"") + key + "\"", raw);
    if (!it->is_string()) throw UnparseableModelOutput(std::string("scene answer \"") + key + "\" is not text", raw);
    const std::string value = text::trim(it->get<std::string>());
    if (value.empty()) throw UnparseableModelOutput(std::string("scene answer \"") + key + "\" is empty", raw);
    bool truncated = false;
    std::string out = text::truncate_words(value, max_words, &truncated);
    if (truncated && diagnostics) {
        diagnostics->push_back(std::string("answer ") + key + " had " + std::to_string(text::word_count(value)) +
                               " words, truncated to " + std::to_string(max_words));
    }
    return out;
}

}  // namespace

SceneBrief describe_scene(VisionChatBackend& chat, const RgbImage& image_a, const RgbImage& image_b, RoomType room,
                          std::string_view theme, const std::string& model_id, std::vector<std::string>* diagnostics) {
    if (text::trim(theme).empty()) throw InvalidArgument("describe_scene needs a theme");
    if (image_a.empty() || image_b.empty()) throw InvalidArgument("describe_scene needs both product images");
    ChatVisionRequest req;
    req.user_text = prompts::describe_scene(display_name(room), theme);
    req.images = {encode_png(image_a), encode_png(image_b)};
    req.model_id = model_id;
    const std::string raw = chat_vision(chat, req);
    const json answers = parse_json_answer(raw);
    SceneBrief b;
    b.desc_a = limited_answer(answers, "1", kMaxDescWords, raw, diagnostics);
    b.desc_b = limited_answer(answers, "2", kMaxDescWords, raw, diagnostics);
    b.layout_prompt = limited_answer(answers, "3", kMaxLayoutPromptWords, raw, diagnostics);
    b.photo_description = limited_answer(answers, "4", kMaxPhotoWords, raw, diagnostics);
    b.theme = text::trim(theme);
    b.room_type = room;
    return b;
}

std::string layout_product_label(std::string_view desc, const std::optional<Dimensions>& dims) {
    std::string out = text::trim(desc);
    if (dims) {
        out += " (" + text::format_fixed(dims->length, 0) + " x " + text::format_fixed(dims->width, 0) + " x " +
               text::format_fixed(dims->height, 0) + " cm)";
    }
    return out;
}

ChatVisionRequest layout_chat_request(const LayoutTextRequest& req, const RgbImage& image_a, const RgbImage& image_b,
                                      const std::string& model_id) {
    if (!(req.aspect_a > 0.0) || !(req.aspect_b > 0.0)) {
        throw InvalidArgument("layout aspect ratios must be positive (got " + text::format_fixed(req.aspect_a, 3) +
                              ", " + text::format_fixed(req.aspect_b, 3) + ")");
    }
    ChatVisionRequest chat_req;
    chat_req.system_prompt = prompts::layout_system();
    chat_req.user_text = prompts::layout_user(req.product_a, req.aspect_a, req.product_b, req.aspect_b, req.layout_prompt);
    if (!req.feedback.empty()) {
        chat_req.user_text += "\nThe previous layout was rejected:";
        for (const auto& f : req.feedback) chat_req.user_text += "\n- " + f;
        chat_req.user_text += "\nReturn a corrected layout CSS with two lines.";
    }
    if (!image_a.empty()) chat_req.images.push_back(encode_png(image_a));
    if (!image_b.empty()) chat_req.images.push_back(encode_png(image_b));
    chat_req.model_id = model_id;
    return chat_req;
}

std::string generate_layout_text(VisionChatBackend& chat, const LayoutTextRequest& req, const RgbImage& image_a,
                                 const RgbImage& image_b, const std::string& model_id) {
    return chat_vision(chat, layout_chat_request(req, image_a, image_b, model_id));
}

// ---------------------------------------------------------------------------
// Line format
// ---------------------------------------------------------------------------

std::string serialize_layout(const LayoutSpec& spec) {
    std::string out;
    for (std::size_t i = 0; i < spec.boxes.size(); ++i) {
        const LayoutBox& b = spec.boxes[i];
        if (i) out += "\n";
        out += b.label + " {width: " + std::to_string(b.width_px) + "px; height: " + std::to_string(b.height_px) +
               "px; left: " + std::to_string(b.left_px) + "px; top: " + std::to_string(b.top_px) +
               "px; layer: " + std::to_string(b.layer) + "}";
    }
    return out;
}

namespace {

std::string clean_label(std::string_view s) {
    std::string label = text::trim(s);
    auto strip_front = [&](const char* chars) {
        const auto p = label.find_first_not_of(chars);
        label = p == std::string::npos ? std::string() : label.substr(p);
    };
    strip_front("-*`\"' \t");
    while (!label.empty() && std::string_view("`\"': \t").find(label.back()) != std::string_view::npos) label.pop_back();
    return label;
}

LayoutBox parse_line(const std::string& line, std::size_t line_no) {
    const std::size_t open = line.find('{');
    const std::size_t close = line.rfind('}');
    const std::string where = "layout line " + std::to_string(line_no);
    if (close == std::string::npos || close < open) throw LayoutParseError(where + " has no closing brace");
    LayoutBox box;
    box.label = clean_label(std::string_view(line).substr(0, open));
    std::string body = line.substr(open + 1, close - open - 1);
    // Tolerate the doubled braces of the prompt template.
    while (!body.empty() && (body.front() == '{' || std::isspace(static_cast<unsigned char>(body.front())))) body.erase(0, 1);
    while (!body.empty() && (body.back() == '}' || std::isspace(static_cast<unsigned char>(body.back())))) body.pop_back();

    static const std::regex kInt(R"(^([+-]?\d+)\s*(px)?$)", std::regex::icase);
    std::map<std::string, int> values;
    std::size_t start = 0;
    while (start <= body.size()) {
        std::size_t end = body.find(';', start);
        if (end == std::string::npos) end = body.size();
        const std::string part = text::trim(std::string_view(body).substr(start, end - start));
        start = end + 1;
        if (part.empty()) continue;
        const std::size_t colon = part.find(':');
        if (colon == std::string::npos) throw LayoutParseError(where + ": expected key: value, got '" + part + "'");
        const std::string key = text::lower(text::trim(std::string_view(part).substr(0, colon)));
        const std::string value = text::trim(std::string_view(part).substr(colon + 1));
        static const std::set<std::string> kKeys = {"width", "height", "left", "top", "layer"};
        if (!kKeys.count(key)) throw LayoutParseError(where + ": unknown key '" + key + "'");
        if (values.count(key)) throw LayoutParseError(where + ": duplicate key '" + key + "'");
        std::smatch m;
        if (!std::regex_match(value, m, kInt)) {
            throw LayoutParseError(where + ": value of '" + key + "' is not an integer: '" + value + "'");
        }
        try {
            values[key] = std::stoi(m[1].str());
        } catch (const std::out_of_range&) {
            throw LayoutParseError(where + ": value of '" + key + "' is out of range");
        }
    }
    std::string missing;
    for (const char* key : {"width", "height", "left", "top", "layer"}) {
        if (!values.count(key)) missing += std::string(missing.empty() ? "" : ", ") + key;
    }
    if (!missing.empty()) throw LayoutParseError(where + " is missing keys: " + missing);
    box.width_px = values["width"];
    box.height_px = values["height"];
    box.left_px = values["left"];
    box.top_px = values["top"];
    box.layer = values["layer"];
    return box;
}

}  // namespace

LayoutSpec parse_layout(std::string_view raw, const std::array<std::string, 2>& expected_labels) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    const std::string s(raw);
    while (start <= s.size()) {
        std::size_t end = s.find('\n', start);
        if (end == std::string::npos) end = s.size();
        std::string line = text::trim(std::string_view(s).substr(start, end - start));
        start = end + 1;
        if (line.find('{') != std::string::npos) lines.push_back(std::move(line));
    }
    if (lines.size() != 2) {
        throw LayoutParseError("expected exactly 2 layout lines, found " + std::to_string(lines.size()));
    }
    LayoutSpec spec;
    for (std::size_t i = 0; i < 2; ++i) {
        spec.boxes[i] = parse_line(lines[i], i + 1);
        if (!expected_labels[i].empty()) spec.boxes[i].label = expected_labels[i];
    }
    return spec;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

std::string to_string(FindingKind kind) {
    switch (kind) {
        case FindingKind::bounds: return "bounds";
        case FindingKind::aspect: return "aspect";
        case FindingKind::relative_scale: return "relative_scale";
        case FindingKind::floor: return "floor";
        case FindingKind::overlap_layer: return "overlap_layer";
    }
    return "unknown";
}

namespace {

FindingKind parse_finding_kind(const std::string& s) {
    for (auto k : {FindingKind::bounds, FindingKind::aspect, FindingKind::relative_scale, FindingKind::floor,
                   FindingKind::overlap_layer}) {
        if (to_string(k) == s) return k;
    }
    throw InvalidArgument("unknown finding kind '" + s + "'");
}

LayoutAction parse_action(const std::string& s) {
    for (auto a : {LayoutAction::accept, LayoutAction::retry, LayoutAction::clamp_and_accept}) {
        if (to_string(a) == s) return a;
    }
    throw InvalidArgument("unknown layout action '" + s + "'");
}

}  // namespace

std::string to_string(LayoutAction action) {
    switch (action) {
        case LayoutAction::accept: return "accept";
        case LayoutAction::retry: return "retry";
        case LayoutAction::clamp_and_accept: return "clamp_and_accept";
    }
    return "unknown";
}

LayoutAction ValidationPolicy::action_for(FindingKind kind) const {
    const auto it = actions.find(kind);
    return it == actions.end() ? LayoutAction::retry : it->second;
}

bool ValidationReport::has(FindingKind kind) const {
    return std::any_of(findings.begin(), findings.end(), [&](const LayoutFinding& f) { return f.kind == kind; });
}

json report_to_json(const ValidationReport& r) {
    json findings = json::array();
    for (const auto& f : r.findings) {
        findings.push_back({{"kind", to_string(f.kind)},
                            {"box", f.box},
                            {"measured", f.measured},
                            {"limit", f.limit},
                            {"message", f.message},
                            {"severity", to_string(f.severity)}});
    }
    return {{"findings", findings}, {"decision", to_string(r.decision)}};
}

ValidationReport report_from_json(const json& j) {
    ValidationReport r;
    for (const auto& f : j.at("findings")) {
        r.findings.push_back({parse_finding_kind(f.at("kind").get<std::string>()), f.at("box").get<int>(),
                              f.at("measured").get<double>(), f.at("limit").get<double>(),
                              f.at("message").get<std::string>(), parse_action(f.at("severity").get<std::string>())});
    }
    r.decision = parse_action(j.at("decision").get<std::string>());
    return r;
}

ValidationReport validate_layout(const LayoutSpec& spec, double aspect_a, double aspect_b,
                                 const std::optional<Dimensions>& dims_a, const std::optional<Dimensions>& dims_b,
                                 const ValidationPolicy& policy) {
    ValidationReport report;
    auto add = [&](FindingKind kind, int box, double measured, double limit, std::string message) {
        report.findings.push_back({kind, box, measured, limit, std::move(message), policy.action_for(kind)});
    };
    const int canvas = spec.canvas_px;
    const std::array<double, 2> aspects = {aspect_a, aspect_b};

    for (int i = 0; i < 2; ++i) {
        const LayoutBox& b = spec.boxes[i];
        const std::string name = "box " + std::to_string(i + 1) + " (" + b.label + ")";
        // (1) bounds
        if (b.width_px < 1 || b.height_px < 1) {
            add(FindingKind::bounds, i, std::min(b.width_px, b.height_px), 1,
                name + " has a non-positive size " + std::to_string(b.width_px) + "x" + std::to_string(b.height_px));
        }
        if (b.left_px < 0 || b.top_px < 0) {
            add(FindingKind::bounds, i, std::min(b.left_px, b.top_px), 0, name + " starts outside the canvas");
        }
        if (b.right() > canvas) {
            add(FindingKind::bounds, i, b.right(), canvas,
                name + ": left + width = " + std::to_string(b.right()) + " exceeds " + std::to_string(canvas) + "px");
        }
        if (b.bottom() > canvas) {
            add(FindingKind::bounds, i, b.bottom(), canvas,
                name + ": top + height = " + std::to_string(b.bottom()) + " exceeds " + std::to_string(canvas) + "px");
        }
        // (2) aspect
        if (b.width_px >= 1 && b.height_px >= 1 && aspects[i] > 0.0) {
            const double ratio = static_cast<double>(b.width_px) / b.height_px;
            const double dev = std::abs(ratio - aspects[i]) / aspects[i];
            if (dev > policy.aspect_tolerance) {
                add(FindingKind::aspect, i, dev, policy.aspect_tolerance,
                    name + " has width/height " + text::format_fixed(ratio, 3) + " but the product is " +
                        text::format_fixed(aspects[i], 3));
            }
        }
        // (4) floor plausibility
        const int lowest_bottom = spec.floor_line_px - policy.floor_band_px;
        if (b.bottom() < lowest_bottom || b.bottom() > canvas) {
            add(FindingKind::floor, i, b.bottom(), lowest_bottom,
                name + " has its bottom edge at " + std::to_string(b.bottom()) + "px, outside [" +
                    std::to_string(lowest_bottom) + ", " + std::to_string(canvas) + "]");
        }
    }

    // (3) relative scale
    const LayoutBox& a = spec.boxes[0];
    const LayoutBox& b = spec.boxes[1];
    if (policy.check_relative_scale && dims_a && dims_b && dims_a->height > 0 && dims_b->height > 0 &&
        a.height_px >= 1 && b.height_px >= 1) {
        const double expected = dims_a->height / dims_b->height;
        const double actual = static_cast<double>(a.height_px) / b.height_px;
        const double dev = std::abs(actual - expected) / expected;
        if (dev > policy.relative_scale_tolerance) {
            add(FindingKind::relative_scale, -1, dev, policy.relative_scale_tolerance,
                "height ratio " + text::format_fixed(actual, 3) + " differs from the real ratio " +
                    text::format_fixed(expected, 3) + " by " + text::format_fixed(100.0 * dev, 0) + "%");
        }
    }
    // (5) overlap and layers
    if (!intersect(a.rect(), b.rect()).empty() && a.layer == b.layer) {
        add(FindingKind::overlap_layer, -1, a.layer, 0,
            "the boxes overlap but share layer " + std::to_string(a.layer));
    }

    bool any_retry = false;
    bool any_clamp = false;
    for (const auto& f : report.findings) {
        any_retry |= f.severity == LayoutAction::retry;
        any_clamp |= f.severity == LayoutAction::clamp_and_accept;
    }
    report.decision = any_retry ? LayoutAction::retry : any_clamp ? LayoutAction::clamp_and_accept : LayoutAction::accept;
    return report;
}

namespace {

void scale_about_bottom_centre(LayoutBox& box, double s) {
    const double cx = box.left_px + box.width_px / 2.0;
    const int bottom = box.bottom();
    box.width_px = std::max(1, static_cast<int>(std::lround(box.width_px * s)));
    box.height_px = std::max(1, static_cast<int>(std::lround(box.height_px * s)));
    box.left_px = static_cast<int>(std::lround(cx - box.width_px / 2.0));
    box.top_px = bottom - box.height_px;
}

}  // namespace

LayoutSpec clamp_layout(const LayoutSpec& spec, const std::optional<Dimensions>& dims_a,
                        const std::optional<Dimensions>& dims_b, const ValidationPolicy& policy) {
    LayoutSpec out = spec;
    const int canvas = out.canvas_px;
    for (auto& b : out.boxes) {
        b.width_px = std::max(1, b.width_px);
        b.height_px = std::max(1, b.height_px);
    }
    LayoutBox& a = out.boxes[0];
    LayoutBox& b = out.boxes[1];
    if (policy.check_relative_scale && dims_a && dims_b && dims_a->height > 0 && dims_b->height > 0) {
        const double target_hb = a.height_px * dims_b->height / dims_a->height;
        scale_about_bottom_centre(b, target_hb / b.height_px);
    }
    const int lowest_bottom = out.floor_line_px - policy.floor_band_px;
    for (auto& box : out.boxes) {
        if (box.width_px > canvas || box.height_px > canvas) {
            const double s = std::min(static_cast<double>(canvas) / box.width_px,
                                      static_cast<double>(canvas) / box.height_px);
            scale_about_bottom_centre(box, s);
        }
        box.width_px = std::min(box.width_px, canvas);
        box.height_px = std::min(box.height_px, canvas);
        if (box.bottom() < lowest_bottom) box.top_px = out.floor_line_px - box.height_px;
        box.left_px = std::clamp(box.left_px, 0, canvas - box.width_px);
        box.top_px = std::clamp(box.top_px, 0, canvas - box.height_px);
    }
    if (!intersect(a.rect(), b.rect()).empty() && a.layer == b.layer) {
        // The box standing lower on the floor is nearer the camera.
        if (b.bottom() >= a.bottom()) {
            b.layer = 0;
            a.layer = 1;
        } else {
            a.layer = 0;
            b.layer = 1;
        }
    }
    return out;
}

namespace {

std::vector<std::string> feedback_lines(const ValidationReport& report) {
    std::vector<std::string> out;
    for (const auto& f : report.findings) {
        if (f.severity == LayoutAction::retry) out.push_back(f.message);
    }
    return out;
}

}  // namespace

LayoutPlan plan_layout(VisionChatBackend& chat, const LayoutTextRequest& req, const RgbImage& image_a,
                       const RgbImage& image_b, const std::optional<Dimensions>& dims_a,
                       const std::optional<Dimensions>& dims_b, const ValidationPolicy& policy,
                       const std::string& model_id) {
    LayoutPlan plan;
    LayoutTextRequest current = req;
    std::optional<std::size_t> last_parsed;
    std::vector<LayoutSpec> specs;
    const std::array<std::string, 2> labels = {req.product_a, req.product_b};
    const int attempts = 1 + std::max(0, policy.max_retries);
    for (int attempt = 0; attempt < attempts; ++attempt) {
        LayoutAttempt record;
        record.raw = generate_layout_text(chat, current, image_a, image_b, model_id);
        LayoutSpec spec;
        try {
            spec = parse_layout(record.raw, labels);
        } catch (const LayoutParseError& e) {
            record.error = e.what();
            plan.attempts.push_back(std::move(record));
            specs.emplace_back();
            current.feedback = {std::string("the layout could not be parsed: ") + e.what()};
            continue;
        }
        record.report = validate_layout(spec, req.aspect_a, req.aspect_b, dims_a, dims_b, policy);
        const LayoutAction decision = record.report.decision;
        current.feedback = feedback_lines(record.report);
        plan.attempts.push_back(record);
        specs.push_back(spec);
        last_parsed = plan.attempts.size() - 1;
        if (decision == LayoutAction::retry) continue;
        plan.raw = record.raw;
        plan.report = record.report;
        if (decision == LayoutAction::clamp_and_accept) {
            plan.spec = clamp_layout(spec, dims_a, dims_b, policy);
            plan.clamped = true;
        } else {
            plan.spec = spec;
        }
        return plan;
    }
    if (!last_parsed) {
        throw LayoutParseError("no parseable layout after " + std::to_string(attempts) + " attempts; last error: " +
                               plan.attempts.back().error);
    }
    const LayoutAttempt& last = plan.attempts[*last_parsed];
    plan.raw = last.raw;
    plan.report = last.report;
    plan.report.decision = LayoutAction::clamp_and_accept;
    plan.spec = clamp_layout(specs[*last_parsed], dims_a, dims_b, policy);
    plan.clamped = true;
    return plan;
}

LayoutPlan accept_user_layout(const LayoutSpec& spec, double aspect_a, double aspect_b,
                              const std::optional<Dimensions>& dims_a, const std::optional<Dimensions>& dims_b,
                              const ValidationPolicy& policy) {
    LayoutPlan plan;
    plan.report = validate_layout(spec, aspect_a, aspect_b, dims_a, dims_b, policy);
    plan.raw = serialize_layout(spec);
    plan.attempts.push_back({plan.raw, {}, plan.report});
    if (plan.report.decision == LayoutAction::accept) {
        plan.spec = spec;
    } else {
        plan.report.decision = LayoutAction::clamp_and_accept;
        plan.spec = clamp_layout(spec, dims_a, dims_b, policy);
        plan.clamped = true;
    }
    return plan;
}

LayoutSpec side_by_side_layout(const std::string& label_a, double aspect_a, const std::string& label_b,
                               double aspect_b) {
    if (!(aspect_a > 0.0) || !(aspect_b > 0.0)) throw InvalidArgument("side-by-side layout needs positive aspects");
    constexpr int kMargin = 48;
    constexpr int kGap = 48;
    double height = 400.0;
    const double room = kCanvasSize - 2.0 * kMargin - kGap;
    if (height * (aspect_a + aspect_b) > room) height = room / (aspect_a + aspect_b);
    const int h = std::max(1, static_cast<int>(std::floor(height)));
    const int wa = std::max(1, static_cast<int>(std::lround(h * aspect_a)));
    const int wb = std::max(1, static_cast<int>(std::lround(h * aspect_b)));
    const int total = wa + kGap + wb;
    const int left_a = std::max(0, (kCanvasSize - total) / 2);
    LayoutSpec spec;
    spec.boxes[0] = {label_a, wa, h, left_a, kFloorLinePx - h, 0};
    spec.boxes[1] = {label_b, wb, h, std::min(kCanvasSize - wb, left_a + wa + kGap), kFloorLinePx - h, 0};
    return spec;
}

// ---------------------------------------------------------------------------
// Cutouts and canvas
// ---------------------------------------------------------------------------

PixelRect alpha_bbox(const RgbaImage& rgba) {
    int x0 = rgba.width(), y0 = rgba.height(), x1 = -1, y1 = -1;
    for (int y = 0; y < rgba.height(); ++y) {
        for (int x = 0; x < rgba.width(); ++x) {
            if (rgba.at(x, y)[3] == 0) continue;
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    }
    if (x1 < 0) return {};
    return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

Cutout extract_cutout(const RgbImage& image, bool remove_white, SegmentationBackend& segmenter,
                      std::string source_item) {
    if (image.empty()) throw InvalidArgument("extract_cutout needs a decoded image");
    Cutout cut;
    cut.source_item = std::move(source_item);
    cut.rgba = RgbaImage(image.width(), image.height());
    SegmentationMask fg;
    if (remove_white) fg = segment(segmenter, image, "product");
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            const std::uint8_t* s = image.at(x, y);
            std::uint8_t* d = cut.rgba.at(x, y);
            d[0] = s[0];
            d[1] = s[1];
            d[2] = s[2];
            d[3] = (!remove_white || fg.get(x, y)) ? 255 : 0;
        }
    }
    cut.bbox_tight = alpha_bbox(cut.rgba);
    if (cut.bbox_tight.empty()) {
        throw EmptyForeground("no foreground pixels in the image of " +
                              (cut.source_item.empty() ? std::string("the product") : cut.source_item));
    }
    return cut;
}

PixelRect fit_rect(const LayoutBox& box, int content_width, int content_height) {
    const int bw = std::max(1, box.width_px);
    const int bh = std::max(1, box.height_px);
    const double s = std::min(static_cast<double>(bw) / content_width, static_cast<double>(bh) / content_height);
    const int fw = std::clamp(static_cast<int>(std::lround(content_width * s)), 1, bw);
    const int fh = std::clamp(static_cast<int>(std::lround(content_height * s)), 1, bh);
    return {box.left_px + (bw - fw) / 2, box.top_px + (bh - fh) / 2, fw, fh};
}

ComposedCanvas compose_canvas(const LayoutSpec& spec, const Cutout& a, const Cutout& b) {
    std::array<const Cutout*, 2> cut = {&a, &b};
    if (!spec.item_ids[0].empty() && !spec.item_ids[1].empty() && a.source_item == spec.item_ids[1] &&
        b.source_item == spec.item_ids[0] && a.source_item != b.source_item) {
        std::swap(cut[0], cut[1]);
    }
    const int n = spec.canvas_px;
    ComposedCanvas out{RgbImage(n, n, 255), GrayImage(n, n, 0)};

    std::array<int, 2> order = {0, 1};
    std::stable_sort(order.begin(), order.end(),
                     [&](int i, int j) { return spec.boxes[i].layer > spec.boxes[j].layer; });
    for (int i : order) {
        const Cutout& c = *cut[i];
        if (c.bbox_tight.empty()) throw InvalidArgument("compose_canvas needs non-empty cutouts");
        const RgbaImage tight = crop(c.rgba, c.bbox_tight);
        const PixelRect dst = fit_rect(spec.boxes[i], tight.width(), tight.height());
        const RgbaImage scaled = resize_nearest(tight, dst.width, dst.height);
        for (int y = 0; y < dst.height; ++y) {
            const int cy = dst.top + y;
            if (cy < 0 || cy >= n) continue;
            for (int x = 0; x < dst.width; ++x) {
                const int cx = dst.left + x;
                if (cx < 0 || cx >= n) continue;
                const std::uint8_t* s = scaled.at(x, y);
                const int alpha = s[3];
                if (alpha == 0) continue;
                std::uint8_t* d = out.canvas.at(cx, cy);
                for (int ch = 0; ch < 3; ++ch) d[ch] = static_cast<std::uint8_t>((s[ch] * alpha + d[ch] * (255 - alpha) + 127) / 255);
                std::uint8_t* da = out.alpha.at(cx, cy);
                *da = static_cast<std::uint8_t>(alpha + (*da * (255 - alpha) + 127) / 255);
            }
        }
    }
    return out;
}

}  // namespace adgen
