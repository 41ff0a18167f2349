#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "adgen/catalog.hpp"
#include "adgen/gateway_config.hpp"
#include "adgen/image.hpp"
#include "adgen/pairing.hpp"

namespace adgen {

// Synthetic ABO-shaped catalog for offline runs: flat-shaded product
// silhouettes on white, titles carrying the archetype keyword and the
// dimensions, and a per-image camera tilt for the mock depth backend.

struct SyntheticArchetype {
    std::string category;  // display name, e.g. "Sofa"
    std::string keyword;   // word the mock profiler recognises
    Dimensions dims;
};

/// Bundled archetypes across the four rooms.
const std::vector<SyntheticArchetype>& synthetic_archetypes();

struct SyntheticOptions {
    std::map<std::string, int> per_category;  // category -> count; empty means 4 of each archetype
    std::uint64_t seed = 7;
    // Camera tilt per product: a mode picked by weight, plus uniform jitter.
    std::vector<double> tilt_modes_deg = {8.0, 14.0, 35.0};
    std::vector<double> tilt_weights = {0.45, 0.40, 0.15};
    double tilt_jitter_deg = 3.0;
    int image_size = 256;
};

struct SyntheticProduct {
    std::string item_id;
    std::string category;
    std::string title;
    std::string image_id;
    double tilt_deg = 0.0;
    Dimensions dims;
    std::string label;  // short description the mock scene writer returns
};

struct SyntheticFixture {
    std::vector<SyntheticProduct> products;
    std::vector<std::string> documents;          // ABO raw JSON lines
    std::map<std::string, RgbImage> images;      // image id -> raster
    std::map<std::string, std::string> image_labels;  // sha256(PNG) -> label
    std::map<std::string, double> tilt_by_key;   // image_key() -> tilt
};

SyntheticFixture make_synthetic_fixture(const SyntheticOptions& options = {});

/// Mock gateway wired to the fixture's labels and tilts.
GatewayConfig fixture_gateway_config(const SyntheticFixture& fixture);

/// Writes catalog.jsonl, images/<id>.png and gateway.json under `dir` and
/// returns the catalog ingested from them.
Catalog write_fixture(const SyntheticFixture& fixture, const std::filesystem::path& dir);

/// Ingests the fixture from memory; images are written to `image_dir`.
Catalog fixture_catalog(const SyntheticFixture& fixture, const std::filesystem::path& image_dir);

}  // namespace adgen
