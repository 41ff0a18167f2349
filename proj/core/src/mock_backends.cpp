#include "adgen/mock_backends.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <regex>

#include "adgen/errors.hpp"
#include "adgen/hashing.hpp"
#include "adgen/text.hpp"

namespace adgen {

using nlohmann::json;

std::uint64_t MockVisionChat::request_key(const ChatVisionRequest& req) const {
    std::uint64_t h = fnv1a64(req.system_prompt.value_or(""));
    h = fnv1a64("\x1f" + req.user_text, h);
    for (const auto& img : req.images) h = fnv1a64(img, h ^ 0x5bd1e995ULL);
    return derive_seed(seed_, h);
}

std::string MockVisionChat::complete(const ChatVisionRequest& req) {
    const std::string haystack = req.system_prompt.value_or("") + "\n" + req.user_text;
    const std::uint64_t key = request_key(req);
    for (const auto& rule : rules_) {
        if (rule.responses.empty()) continue;
        const bool hit = std::all_of(rule.contains.begin(), rule.contains.end(),
                                     [&](const std::string& s) { return haystack.find(s) != std::string::npos; });
        if (hit) return rule.responses[key % rule.responses.size()];
    }
    for (const auto& responder : responders_) {
        if (auto reply = responder(req, key)) return *reply;
    }
    throw MockRuleMissing("no mock rule matches request starting with '" + haystack.substr(0, 80) + "'");
}

std::vector<MockRule> mock_rules_from_json(const json& j) {
    std::vector<MockRule> rules;
    if (!j.contains("rules")) return rules;
    for (const auto& r : j.at("rules")) {
        MockRule rule;
        rule.contains = r.value("contains", std::vector<std::string>{});
        if (r.contains("response")) rule.responses.push_back(r["response"].is_string() ? r["response"].get<std::string>()
                                                                                      : r["response"].dump());
        for (const auto& resp : r.value("responses", json::array())) {
            rule.responses.push_back(resp.is_string() ? resp.get<std::string>() : resp.dump());
        }
        rules.push_back(std::move(rule));
    }
    return rules;
}

namespace {

struct ProductArchetype {
    const char* keyword;
    const char* description;
    const char* room;
};

// Order matters: more specific keywords first.
constexpr ProductArchetype kArchetypes[] = {
    {"nightstand", "oak nightstand", "bedroom"},   {"dresser", "white wooden dresser", "bedroom"},
    {"bed", "upholstered platform bed", "bedroom"}, {"ottoman", "tufted ottoman", "living room"},
    {"recliner", "brown recliner chair", "living room"}, {"sofa", "gray fabric sofa", "living room"},
    {"lamp", "brass floor lamp", "living room"},   {"shelf", "wooden bookshelf", "living room"},
    {"rug", "woven area rug", "living room"},      {"stool", "wooden bar stool", "kitchen"},
    {"dining", "oak dining table", "kitchen"},     {"island", "marble kitchen island", "kitchen"},
    {"bathtub", "freestanding white bathtub", "bathroom"}, {"vanity", "bathroom vanity cabinet", "bathroom"},
    {"towel", "chrome towel rack", "bathroom"},    {"chair", "accent armchair", "living room"},
};

std::string between(const std::string& s, const std::string& open, const std::string& close) {
    const auto a = s.find(open);
    if (a == std::string::npos) return {};
    const auto start = a + open.size();
    const auto b = s.find(close, start);
    if (b == std::string::npos) return {};
    return s.substr(start, b - start);
}

std::string dims_from_text(const std::string& s) {
    static const std::regex kDims(R"((\d+(?:\.\d+)?)\s*[xX]\s*(\d+(?:\.\d+)?)\s*[xX]\s*(\d+(?:\.\d+)?)\s*cm)");
    std::smatch m;
    if (std::regex_search(s, m, kDims)) return m[1].str() + " x " + m[2].str() + " x " + m[3].str() + " in cm";
    return "N/A";
}

bool category_matches(const std::string& title_lower, const std::string& category) {
    for (auto word : text::split_words(text::lower(category))) {
        if (word.size() > 3 && word.back() == 's') word.pop_back();
        if (word.size() >= 3 && title_lower.find(word) != std::string::npos) return true;
    }
    return false;
}

}  // namespace

std::optional<std::string> mock_profile_from_title(const ChatVisionRequest& req, std::uint64_t) {
    const std::string& u = req.user_text;
    if (u.find("product title information: ") == std::string::npos) return std::nullopt;
    const std::string title = between(u, "product title information: ", ". You will generate");
    const std::string category = between(u, "under the category of ", "? Answer Yes or No.");
    const std::string lower = text::lower(title);
    std::string desc;
    std::string room = "living room";
    for (const auto& a : kArchetypes) {
        if (lower.find(a.keyword) != std::string::npos) {
            desc = a.description;
            room = a.room;
            break;
        }
    }
    if (desc.empty()) desc = text::truncate_words(lower, 3);
    const bool match = category_matches(lower, category);
    json answer = {{"1", match ? "Yes" : "No"}, {"2", desc}, {"3", dims_from_text(title)}, {"4", room}};
    return "```json\n" + answer.dump() + "\n```";
}

namespace {

std::optional<std::string> mock_scene_writer(const ChatVisionRequest& req, std::uint64_t key,
                                             const std::map<std::string, std::string>& labels) {
    const std::string& u = req.user_text;
    if (u.find("You are given two product images") == std::string::npos) return std::nullopt;
    const std::string room = between(u, "layout of the ", " looks like");
    const std::string style = between(u, "Given the theme as ", ", come up");
    auto label = [&](std::size_t i, const char* fallback) {
        if (i < req.images.size()) {
            const auto it = labels.find(sha256_hex(req.images[i]));
            if (it != labels.end()) return it->second;
        }
        return std::string(fallback);
    };
    const std::string a = label(0, "first product");
    const std::string b = label(1, "second product");
    static constexpr const char* kPlacements[] = {
        "Place the {a} against the back wall with the {b} beside it, framed by soft daylight from a tall window.",
        "Center the {a} on a textured rug and set the {b} to its right, leaving open floor in front.",
        "Set the {a} near a bright corner and the {b} slightly forward, with plants completing the scene.",
    };
    static constexpr const char* kBackdrops[] = {"warm afternoon light", "soft neutral walls", "large windows and plants"};
    std::string layout = kPlacements[key % 3];
    layout = text::replace_all(text::replace_all(layout, "{a}", a), "{b}", b);
    const std::string photo = style + " " + room + " featuring a " + a + " and a " + b + ", " + kBackdrops[(key >> 8) % 3] +
                              ", " + text::lower(style) + " decor, professional product photography";
    json answer = {{"1", a}, {"2", b}, {"3", layout}, {"4", photo}};
    return "Here is the answer:\n" + answer.dump();
}

struct PlannedProduct {
    std::string label;
    double aspect = 1.0;
    std::optional<double> height_cm;
};

PlannedProduct parse_product_label(const std::string& label, double aspect) {
    static const std::regex kSize(R"(^(.*?)\s*\((\d+(?:\.\d+)?) x (\d+(?:\.\d+)?) x (\d+(?:\.\d+)?) cm\)\s*$)");
    PlannedProduct p{label, aspect, std::nullopt};
    std::smatch m;
    if (std::regex_match(label, m, kSize)) {
        p.label = m[1].str();
        p.height_cm = std::stod(m[4].str());
    }
    return p;
}

}  // namespace

std::optional<std::string> mock_layout_planner(const ChatVisionRequest& req, std::uint64_t key) {
    if (req.system_prompt.value_or("").find("plan the layout of the products") == std::string::npos) return std::nullopt;
    static const std::regex kHead(
        R"(^A (.+?) with width-to-height ratio of ([0-9.]+), and (.+?) with width-to-height ratio of ([0-9.]+)\.)");
    std::smatch m;
    if (!std::regex_search(req.user_text, m, kHead)) return std::nullopt;
    PlannedProduct a = parse_product_label(m[1].str(), std::stod(m[2].str()));
    PlannedProduct b = parse_product_label(m[3].str(), std::stod(m[4].str()));

    double ha = 420.0;
    double hb = 300.0 + static_cast<double>(key % 5) * 20.0;
    if (a.height_cm && b.height_cm && *a.height_cm > 0 && *b.height_cm > 0) {
        const double tallest = std::max(*a.height_cm, *b.height_cm);
        ha = 440.0 * *a.height_cm / tallest;
        hb = 440.0 * *b.height_cm / tallest;
    }
    double wa = ha * std::max(a.aspect, 0.05);
    double wb = hb * std::max(b.aspect, 0.05);
    // Keep both products on the canvas with margins.
    const double budget = 1024.0 - 3 * 48.0;
    if (wa + wb > budget) {
        const double s = budget / (wa + wb);
        wa *= s, wb *= s, ha *= s, hb *= s;
    }
    const int jitter = static_cast<int>((key >> 16) % 40);
    const int bottom = 768 + static_cast<int>((key >> 24) % 60);
    auto round_px = [](double v) { return std::max(1, static_cast<int>(std::lround(v))); };
    const int wa_px = round_px(wa), ha_px = round_px(ha), wb_px = round_px(wb), hb_px = round_px(hb);
    const int left_a = 48 + jitter / 2;
    const int left_b = std::max(0, 1024 - 48 - wb_px - jitter / 2);
    auto line = [](const std::string& label, int w, int h, int l, int t, int layer) {
        return label + " {width: " + std::to_string(w) + "px; height: " + std::to_string(h) + "px; left: " +
               std::to_string(l) + "px; top: " + std::to_string(t) + "px; layer: " + std::to_string(layer) + "}";
    };
    return line(a.label, wa_px, ha_px, left_a, std::max(0, bottom - ha_px), 1) + "\n" +
           line(b.label, wb_px, hb_px, left_b, std::max(0, bottom + 20 - hb_px), 0);
}

std::optional<std::string> mock_judge(const ChatVisionRequest& req, std::uint64_t key) {
    if (req.system_prompt.value_or("").find("give a score from 1 to 5") == std::string::npos) return std::nullopt;
    const int score = 3 + static_cast<int>(key % 3);
    json verdict = {{"score", score}, {"explanation", "Deterministic mock verdict."}};
    return verdict.dump();
}

void install_builtin_responders(MockVisionChat& chat, std::map<std::string, std::string> image_labels) {
    chat.add_responder(mock_profile_from_title);
    chat.add_responder([labels = std::move(image_labels)](const ChatVisionRequest& req, std::uint64_t key) {
        return mock_scene_writer(req, key, labels);
    });
    chat.add_responder(mock_layout_planner);
    chat.add_responder(mock_judge);
}

DepthMap synthesize_plane_depth(int width, int height, const CameraIntrinsics& k, const SyntheticPlaneParams& p) {
    DepthMap depth;
    depth.width = width;
    depth.height = height;
    depth.values.assign(static_cast<std::size_t>(width) * height, 0.0f);
    depth.valid.assign(static_cast<std::size_t>(width) * height, 0);
    const double t = deg_to_rad(p.tilt_deg);
    const double ct = std::cos(t);
    const double st = std::sin(t);
    std::mt19937_64 rng(p.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int v = 0; v < height; ++v) {
        const double ry = (v - k.cy) / k.fy;
        const double denom = ct * ry + st;  // -(n . r)
        for (int u = 0; u < width; ++u) {
            const std::size_t i = static_cast<std::size_t>(v) * width + u;
            if (denom <= 1e-9) continue;
            double d = p.camera_height_m / denom;
            if (d > p.max_depth_m) continue;
            if (p.noise_sigma > 0.0) d *= 1.0 + p.noise_sigma * gauss(rng);
            if (!(d > 0.0)) continue;
            depth.values[i] = static_cast<float>(d);
            depth.valid[i] = 1;
        }
    }
    return depth;
}

DepthMap MockDepth::estimate(const RgbImage& image) {
    const std::string key = image_key(image);
    const auto it = config_.tilt_by_image.find(key);
    SyntheticPlaneParams params;
    params.tilt_deg = it == config_.tilt_by_image.end() ? config_.default_tilt_deg : it->second;
    params.camera_height_m = config_.camera_height_m;
    params.noise_sigma = config_.noise_sigma;
    params.max_depth_m = config_.max_depth_m;
    params.seed = derive_seed(config_.seed, fnv1a64(key));
    return synthesize_plane_depth(image.width(), image.height(),
                                  intrinsics_from_fov(image.width(), image.height(), config_.hfov_deg), params);
}

SegmentationMask MockSegmenter::segment(const RgbImage& image, std::string_view) {
    SegmentationMask mask(image.width(), image.height());
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            const std::uint8_t* px = image.at(x, y);
            const bool background = px[0] >= threshold_ && px[1] >= threshold_ && px[2] >= threshold_;
            mask.set(x, y, !background);
        }
    }
    return mask;
}

RgbImage MockInpainter::inpaint(const InpaintRequest& req) {
    std::uint64_t key = fnv1a64(req.prompt);
    key = fnv1a64("\x1f" + req.negative_prompt, key);
    for (const auto& c : req.controls) {
        key = fnv1a64(to_string(c.type) + ":" + text::format_fixed(c.strength, 6), key);
    }
    key = derive_seed(req.seed, key ^ static_cast<std::uint64_t>(req.steps));

    // Low-frequency colour field plus per-pixel hash grain.
    const double base[3] = {static_cast<double>(80 + (key & 0x7f)), static_cast<double>(80 + ((key >> 8) & 0x7f)),
                            static_cast<double>(80 + ((key >> 16) & 0x7f))};
    const double freq_x = 0.002 + static_cast<double>((key >> 24) & 0xff) * 2e-5;
    const double freq_y = 0.002 + static_cast<double>((key >> 32) & 0xff) * 2e-5;
    const double phase = static_cast<double>((key >> 40) & 0xffff) * 1e-3;

    RgbImage out = req.canvas;
    for (int y = 0; y < out.height(); ++y) {
        const double wy = std::sin(y * freq_y * 6.283 + phase);
        for (int x = 0; x < out.width(); ++x) {
            if (!req.inpaint_mask.get(x, y)) continue;
            const double wave = 40.0 * std::sin(x * freq_x * 6.283 + phase * 0.5) * wy;
            const std::uint64_t grain = derive_seed(key, static_cast<std::uint64_t>(y) * 4096 + x);
            std::uint8_t* px = out.at(x, y);
            for (int c = 0; c < 3; ++c) {
                const double g = static_cast<double>((grain >> (8 * c)) & 0x0f) - 7.5;
                px[c] = static_cast<std::uint8_t>(std::clamp(base[c] + wave + g, 0.0, 254.0));
            }
        }
    }
    return out;
}

}  // namespace adgen
