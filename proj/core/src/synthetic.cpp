#include "adgen/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "adgen/errors.hpp"
#include "adgen/gateway.hpp"
#include "adgen/hashing.hpp"

namespace adgen {

using nlohmann::json;

namespace {

std::string dims_text(const Dimensions& d) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.0f x %.0f x %.0f cm", d.length, d.width, d.height);
    return buf;
}

// Description the builtin profiler gives each keyword.
std::string label_for(const std::string& keyword) {
    static const std::map<std::string, std::string> labels = {
        {"sofa", "gray fabric sofa"},        {"lamp", "brass floor lamp"},
        {"ottoman", "tufted ottoman"},       {"recliner", "brown recliner chair"},
        {"shelf", "wooden bookshelf"},       {"bed", "upholstered platform bed"},
        {"nightstand", "oak nightstand"},    {"stool", "wooden bar stool"},
        {"dining", "oak dining table"},      {"vanity", "bathroom vanity cabinet"},
        {"towel", "chrome towel rack"},
    };
    const auto it = labels.find(keyword);
    return it == labels.end() ? keyword : it->second;
}

RgbImage draw_product(int size, const Dimensions& dims, std::mt19937_64& rng) {
    RgbImage img(size, size, 255);
    std::uniform_int_distribution<int> channel(30, 200);
    const std::uint8_t r = static_cast<std::uint8_t>(channel(rng));
    const std::uint8_t g = static_cast<std::uint8_t>(channel(rng));
    const std::uint8_t b = static_cast<std::uint8_t>(channel(rng));

    const double aspect = dims.length / dims.height;
    const double span = 0.78 * size;
    int w = static_cast<int>(std::lround(aspect >= 1.0 ? span : span * aspect));
    int h = static_cast<int>(std::lround(aspect >= 1.0 ? span / aspect : span));
    w = std::max(w, 8);
    h = std::max(h, 8);
    const int left = (size - w) / 2;
    const int bottom = static_cast<int>(std::lround(0.88 * size));
    const int top = bottom - h;
    for (int y = std::max(top, 0); y < bottom; ++y) {
        // Darker towards the base so the silhouette is not a flat block.
        const double shade = 1.0 - 0.35 * static_cast<double>(y - top) / h;
        for (int x = left; x < left + w; ++x) {
            auto* p = img.at(x, y);
            p[0] = static_cast<std::uint8_t>(r * shade);
            p[1] = static_cast<std::uint8_t>(g * shade);
            p[2] = static_cast<std::uint8_t>(b * shade);
        }
    }
    return img;
}

json localized(const std::string& value) { return json::array({{{"language_tag", "en_US"}, {"value", value}}}); }

}  // namespace

const std::vector<SyntheticArchetype>& synthetic_archetypes() {
    static const std::vector<SyntheticArchetype> table = {
        {"Sofa", "sofa", {200, 90, 85}},
        {"Floor Lamp", "lamp", {40, 40, 160}},
        {"Ottoman", "ottoman", {60, 60, 45}},
        {"Recliner", "recliner", {90, 95, 100}},
        {"Bookshelf", "shelf", {80, 30, 180}},
        {"Bed", "bed", {210, 160, 110}},
        {"Nightstand", "nightstand", {50, 40, 60}},
        {"Bar Stool", "stool", {40, 40, 75}},
        {"Dining Table", "dining", {180, 90, 76}},
        {"Bathroom Vanity", "vanity", {80, 50, 85}},
        {"Towel Rack", "towel", {60, 20, 90}},
    };
    return table;
}

SyntheticFixture make_synthetic_fixture(const SyntheticOptions& options) {
    if (options.image_size < 32) throw InvalidArgument("synthetic image_size must be at least 32");
    if (options.tilt_modes_deg.empty() || options.tilt_modes_deg.size() != options.tilt_weights.size()) {
        throw InvalidArgument("synthetic tilt modes and weights must be non-empty and of equal length");
    }
    std::map<std::string, int> counts = options.per_category;
    if (counts.empty()) {
        for (const auto& a : synthetic_archetypes()) counts[a.category] = 4;
    }

    SyntheticFixture fx;
    std::mt19937_64 rng(options.seed);
    std::discrete_distribution<std::size_t> mode(options.tilt_weights.begin(), options.tilt_weights.end());
    std::uniform_real_distribution<double> tilt_jitter(-options.tilt_jitter_deg, options.tilt_jitter_deg);
    std::uniform_real_distribution<double> jitter(0.9, 1.1);
    int serial = 0;
    for (const auto& archetype : synthetic_archetypes()) {
        const auto it = counts.find(archetype.category);
        if (it == counts.end()) continue;
        for (int i = 0; i < it->second; ++i, ++serial) {
            SyntheticProduct p;
            char id[32];
            std::snprintf(id, sizeof id, "SYN%05d", serial);
            p.item_id = id;
            std::snprintf(id, sizeof id, "img%05d", serial);
            p.image_id = id;
            p.category = archetype.category;
            p.dims = {std::round(archetype.dims.length * jitter(rng)), std::round(archetype.dims.width * jitter(rng)),
                      std::round(archetype.dims.height * jitter(rng))};
            p.title = "Studio " + archetype.keyword + " model " + std::to_string(i + 1) + " (" + dims_text(p.dims) + ")";
            p.tilt_deg = std::clamp(options.tilt_modes_deg[mode(rng)] + tilt_jitter(rng), 0.0, 89.0);
            p.label = label_for(archetype.keyword);

            RgbImage img = draw_product(options.image_size, p.dims, rng);
            fx.image_labels[sha256_hex(encode_png(img))] = p.label;
            fx.tilt_by_key[image_key(img)] = p.tilt_deg;
            fx.images.emplace(p.image_id, std::move(img));

            json doc = {
                {"item_id", p.item_id},
                {"item_name", localized(p.title)},
                {"product_type", json::array({{{"value", archetype.category}}})},
                {"node", json::array({{{"node_id", 1000 + serial}, {"node_name", "/Home/Furniture/" + archetype.category}}})},
                {"main_image_id", p.image_id},
                {"bullet_point", localized("Dimensions " + dims_text(p.dims))},
            };
            fx.documents.push_back(doc.dump());
            fx.products.push_back(std::move(p));
        }
    }
    return fx;
}

GatewayConfig fixture_gateway_config(const SyntheticFixture& fixture) {
    GatewayConfig g = mock_gateway_config();
    g.chat.mock["image_labels"] = fixture.image_labels;
    g.depth.mock["tilts"] = fixture.tilt_by_key;
    return g;
}

Catalog fixture_catalog(const SyntheticFixture& fixture, const std::filesystem::path& image_dir) {
    std::filesystem::create_directories(image_dir);
    for (const auto& [id, img] : fixture.images) save_png(image_dir / (id + ".png"), img);
    auto result = ingest_catalog(fixture.documents, default_locale_preference(), index_image_directory(image_dir));
    if (!result.diagnostics.empty()) {
        throw InvalidSpec("synthetic fixture failed to ingest: " + result.diagnostics.front().reason);
    }
    return std::move(result.catalog);
}

Catalog write_fixture(const SyntheticFixture& fixture, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "catalog.jsonl");
        if (!out) throw IoError("cannot write " + (dir / "catalog.jsonl").string());
        for (const auto& doc : fixture.documents) out << doc << '\n';
    }
    {
        std::ofstream out(dir / "gateway.json");
        if (!out) throw IoError("cannot write " + (dir / "gateway.json").string());
        out << gateway_config_to_json(fixture_gateway_config(fixture)).dump(2) << '\n';
    }
    return fixture_catalog(fixture, dir / "images");
}

}  // namespace adgen
