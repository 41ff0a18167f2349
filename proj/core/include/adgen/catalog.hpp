#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "adgen/image.hpp"
#include "adgen/room_type.hpp"

namespace adgen {

struct ProductProfile;

struct LocalizedText {
    std::string language_tag;
    std::string text;
    bool operator==(const LocalizedText&) const = default;
};

struct Weight {
    double value = 0.0;
    std::string unit;
    bool operator==(const Weight&) const = default;
};

/// One catalog entry in ABO raw-record shape, plus the locale-selected title.
struct ProductRecord {
    std::string item_id;
    std::vector<LocalizedText> titles;
    std::vector<LocalizedText> bullet_points;
    std::vector<LocalizedText> keywords;
    std::string product_type;
    std::vector<std::string> node_paths;
    std::string main_image_id;
    std::vector<std::string> other_image_ids;
    std::optional<Weight> item_weight;
    nlohmann::json raw;

    std::string title;  // chosen from `titles` by locale preference
};

struct Catalog {
    std::map<std::string, ProductRecord> records;
    std::map<std::string, std::vector<std::string>> category_index;  // normalized name -> sorted item ids
    std::map<std::string, std::filesystem::path> image_index;        // image id -> file

    const ProductRecord* find(std::string_view item_id) const;
    /// Categories a product is listed under, in index order.
    std::vector<std::string> categories_of(std::string_view item_id) const;
    /// Decodes the product's main image through the image index.
    RgbImage main_image(std::string_view item_id) const;
};

struct IngestDiagnostic {
    std::size_t line = 0;  // 1-based position in the stream
    std::string item_id;   // empty when unknown
    std::string reason;
};

struct IngestResult {
    Catalog catalog;
    std::vector<IngestDiagnostic> diagnostics;
    std::size_t skipped = 0;
};

/// en_US, then en_IN, then any en_*.
std::vector<std::string> default_locale_preference();

/// Trimmed, case-folded category key.
std::string normalize_category(std::string_view name);

/// Picks the first entry matching the preference list in order (a trailing
/// `*` matches a prefix), else the first entry. Empty list -> nullopt.
std::optional<std::string> select_locale(const std::vector<LocalizedText>& entries,
                                         const std::vector<std::string>& preference);

/// Builds an image index from a directory: file stem -> path.
std::map<std::string, std::filesystem::path> index_image_directory(const std::filesystem::path& dir);

/// Ingests raw JSON documents. Malformed, incomplete and duplicate records are
/// skipped with a diagnostic; nothing aborts the whole ingest. When
/// `image_index` is given, records whose main image does not resolve are
/// skipped too.
IngestResult ingest_catalog(const std::vector<std::string>& documents, const std::vector<std::string>& locale_preference,
                            const std::optional<std::map<std::string, std::filesystem::path>>& image_index = std::nullopt);

std::vector<std::string> read_json_lines(const std::filesystem::path& path);

// Persistence: one JSON-lines file of records plus `<path>.images.json`.
std::string serialize_catalog(const Catalog& catalog);
std::string serialize_image_index(const Catalog& catalog);
void save_catalog(const Catalog& catalog, const std::filesystem::path& path);
Catalog load_catalog(const std::filesystem::path& path);

nlohmann::json record_to_json(const ProductRecord& record);
ProductRecord record_from_json(const nlohmann::json& j);

struct CategorySample {
    std::string category;
    std::vector<std::string> sample_item_ids;
    bool operator==(const CategorySample&) const = default;
};

/// Categories containing at least one product profiled for `room`, each with
/// up to `k` sample ids in sorted order.
std::vector<CategorySample> list_room_categories(const Catalog& catalog, RoomType room,
                                                 const std::map<std::string, ProductProfile>& profiles,
                                                 std::size_t k = 6);

}  // namespace adgen
