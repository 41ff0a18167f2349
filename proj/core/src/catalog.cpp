#include "adgen/catalog.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "adgen/errors.hpp"
#include "adgen/pairing.hpp"
#include "adgen/text.hpp"

namespace adgen {

using nlohmann::json;

const ProductRecord* Catalog::find(std::string_view item_id) const {
    const auto it = records.find(std::string(item_id));
    return it == records.end() ? nullptr : &it->second;
}

std::vector<std::string> Catalog::categories_of(std::string_view item_id) const {
    std::vector<std::string> out;
    for (const auto& [name, ids] : category_index) {
        if (std::binary_search(ids.begin(), ids.end(), std::string(item_id))) out.push_back(name);
    }
    return out;
}

RgbImage Catalog::main_image(std::string_view item_id) const {
    const ProductRecord* rec = find(item_id);
    if (!rec) throw InvalidArgument("unknown item " + std::string(item_id));
    const auto it = image_index.find(rec->main_image_id);
    if (it == image_index.end()) throw IoError("image " + rec->main_image_id + " is not in the image index");
    return load_rgb(it->second);
}

std::vector<std::string> default_locale_preference() { return {"en_US", "en_IN", "en_*"}; }

std::string normalize_category(std::string_view name) { return text::lower(text::trim(name)); }

std::optional<std::string> select_locale(const std::vector<LocalizedText>& entries,
                                         const std::vector<std::string>& preference) {
    if (entries.empty()) return std::nullopt;
    for (const auto& want : preference) {
        const bool prefix = !want.empty() && want.back() == '*';
        const std::string_view stem = prefix ? std::string_view(want).substr(0, want.size() - 1) : want;
        for (const auto& e : entries) {
            const bool hit = prefix ? e.language_tag.starts_with(stem) : e.language_tag == want;
            if (hit) return e.text;
        }
    }
    return entries.front().text;
}

std::map<std::string, std::filesystem::path> index_image_directory(const std::filesystem::path& dir) {
    std::map<std::string, std::filesystem::path> index;
    if (!std::filesystem::is_directory(dir)) throw IoError("image directory " + dir.string() + " does not exist");
    for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        index.emplace(entry.path().stem().string(), entry.path());
    }
    return index;
}

namespace {

std::vector<LocalizedText> localized_list(const json& doc, const char* key) {
    std::vector<LocalizedText> out;
    const auto it = doc.find(key);
    if (it == doc.end()) return out;
    if (it->is_string()) {
        out.push_back({"", it->get<std::string>()});
        return out;
    }
    if (!it->is_array()) return out;
    for (const auto& e : *it) {
        if (e.is_string()) {
            out.push_back({"", e.get<std::string>()});
        } else if (e.is_object() && e.contains("value") && e["value"].is_string()) {
            out.push_back({e.value("language_tag", std::string{}), e["value"].get<std::string>()});
        }
    }
    return out;
}

std::string first_value(const json& doc, const char* key) {
    const auto it = doc.find(key);
    if (it == doc.end()) return {};
    if (it->is_string()) return it->get<std::string>();
    if (it->is_array() && !it->empty()) {
        const auto& e = it->front();
        if (e.is_string()) return e.get<std::string>();
        if (e.is_object() && e.contains("value") && e["value"].is_string()) return e["value"].get<std::string>();
    }
    return {};
}

void index_record(Catalog& catalog, const ProductRecord& rec) {
    std::set<std::string> names;
    for (const auto& path : rec.node_paths) {
        const auto slash = path.find_last_of('/');
        const std::string last = normalize_category(slash == std::string::npos ? path : path.substr(slash + 1));
        if (!last.empty()) names.insert(last);
    }
    const std::string type = normalize_category(rec.product_type);
    if (!type.empty()) names.insert(type);
    for (const auto& n : names) {
        auto& ids = catalog.category_index[n];
        ids.insert(std::upper_bound(ids.begin(), ids.end(), rec.item_id), rec.item_id);
    }
}

json localized_to_json(const std::vector<LocalizedText>& v) {
    json arr = json::array();
    for (const auto& e : v) arr.push_back({{"language_tag", e.language_tag}, {"value", e.text}});
    return arr;
}

std::vector<LocalizedText> localized_from_json(const json& arr) {
    std::vector<LocalizedText> out;
    for (const auto& e : arr) out.push_back({e.at("language_tag").get<std::string>(), e.at("value").get<std::string>()});
    return out;
}

}  // namespace

IngestResult ingest_catalog(const std::vector<std::string>& documents, const std::vector<std::string>& locale_preference,
                            const std::optional<std::map<std::string, std::filesystem::path>>& image_index) {
    if (locale_preference.empty()) throw InvalidArgument("locale_preference must not be empty");
    IngestResult result;
    if (image_index) result.catalog.image_index = *image_index;

    auto skip = [&](std::size_t line, std::string id, std::string reason) {
        result.diagnostics.push_back({line, std::move(id), std::move(reason)});
        ++result.skipped;
    };

    for (std::size_t i = 0; i < documents.size(); ++i) {
        const std::size_t line = i + 1;
        if (text::trim(documents[i]).empty()) continue;
        const json doc = json::parse(documents[i], nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) {
            skip(line, "", "malformed JSON document");
            continue;
        }
        ProductRecord rec;
        if (doc.contains("item_id") && doc["item_id"].is_string()) rec.item_id = text::trim(doc["item_id"].get<std::string>());
        if (rec.item_id.empty()) {
            skip(line, "", "missing item_id");
            continue;
        }
        rec.titles = localized_list(doc, "item_name");
        const auto title = select_locale(rec.titles, locale_preference);
        if (!title || text::trim(*title).empty()) {
            skip(line, rec.item_id, "no decodable title");
            continue;
        }
        rec.title = text::trim(*title);
        if (doc.contains("main_image_id") && doc["main_image_id"].is_string()) {
            rec.main_image_id = text::trim(doc["main_image_id"].get<std::string>());
        }
        if (rec.main_image_id.empty()) {
            skip(line, rec.item_id, "missing main_image_id");
            continue;
        }
        if (image_index && !image_index->contains(rec.main_image_id)) {
            skip(line, rec.item_id, "main image " + rec.main_image_id + " not found in image directory");
            continue;
        }
        if (result.catalog.records.contains(rec.item_id)) {
            skip(line, rec.item_id, "duplicate item_id (first occurrence kept)");
            continue;
        }
        rec.bullet_points = localized_list(doc, "bullet_point");
        rec.keywords = localized_list(doc, "item_keywords");
        rec.product_type = first_value(doc, "product_type");
        if (const auto it = doc.find("node"); it != doc.end() && it->is_array()) {
            for (const auto& n : *it) {
                if (n.is_object() && n.contains("node_name") && n["node_name"].is_string()) {
                    rec.node_paths.push_back(n["node_name"].get<std::string>());
                }
            }
        }
        if (const auto it = doc.find("other_image_id"); it != doc.end() && it->is_array()) {
            for (const auto& e : *it) {
                if (e.is_string()) rec.other_image_ids.push_back(e.get<std::string>());
            }
        }
        if (const auto it = doc.find("item_weight"); it != doc.end() && it->is_array() && !it->empty()) {
            const auto& w = it->front();
            if (w.is_object() && w.contains("value") && w["value"].is_number()) {
                rec.item_weight = Weight{w["value"].get<double>(), w.value("unit", std::string{})};
            }
        }
        rec.raw = doc;
        index_record(result.catalog, rec);
        result.catalog.records.emplace(rec.item_id, std::move(rec));
    }
    return result;
}

std::vector<std::string> read_json_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

json record_to_json(const ProductRecord& r) {
    json j;
    j["item_id"] = r.item_id;
    j["title"] = r.title;
    j["titles"] = localized_to_json(r.titles);
    j["bullet_points"] = localized_to_json(r.bullet_points);
    j["keywords"] = localized_to_json(r.keywords);
    j["product_type"] = r.product_type;
    j["node_paths"] = r.node_paths;
    j["main_image_id"] = r.main_image_id;
    j["other_image_ids"] = r.other_image_ids;
    j["item_weight"] = r.item_weight ? json{{"value", r.item_weight->value}, {"unit", r.item_weight->unit}} : json(nullptr);
    j["raw"] = r.raw;
    return j;
}

ProductRecord record_from_json(const json& j) {
    ProductRecord r;
    r.item_id = j.at("item_id").get<std::string>();
    r.title = j.at("title").get<std::string>();
    r.titles = localized_from_json(j.at("titles"));
    r.bullet_points = localized_from_json(j.at("bullet_points"));
    r.keywords = localized_from_json(j.at("keywords"));
    r.product_type = j.at("product_type").get<std::string>();
    r.node_paths = j.at("node_paths").get<std::vector<std::string>>();
    r.main_image_id = j.at("main_image_id").get<std::string>();
    r.other_image_ids = j.at("other_image_ids").get<std::vector<std::string>>();
    if (!j.at("item_weight").is_null()) {
        r.item_weight = Weight{j["item_weight"].at("value").get<double>(), j["item_weight"].at("unit").get<std::string>()};
    }
    r.raw = j.at("raw");
    return r;
}

std::string serialize_catalog(const Catalog& catalog) {
    std::string out;
    for (const auto& [id, rec] : catalog.records) {
        out += record_to_json(rec).dump();
        out.push_back('\n');
    }
    return out;
}

std::string serialize_image_index(const Catalog& catalog) {
    json j = json::object();
    for (const auto& [id, path] : catalog.image_index) j[id] = path.string();
    return j.dump(1) + "\n";
}

void save_catalog(const Catalog& catalog, const std::filesystem::path& path) {
    const std::string body = serialize_catalog(catalog);
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(body.data()), body.size()));
    const std::string idx = serialize_image_index(catalog);
    write_file_bytes(path.string() + ".images.json",
                     std::span(reinterpret_cast<const std::uint8_t*>(idx.data()), idx.size()));
}

Catalog load_catalog(const std::filesystem::path& path) {
    Catalog catalog;
    for (const auto& line : read_json_lines(path)) {
        if (text::trim(line).empty()) continue;
        ProductRecord rec = record_from_json(json::parse(line));
        index_record(catalog, rec);
        catalog.records.emplace(rec.item_id, std::move(rec));
    }
    const std::filesystem::path sidecar = path.string() + ".images.json";
    if (std::filesystem::exists(sidecar)) {
        std::ifstream in(sidecar);
        const json idx = json::parse(in);
        for (const auto& [id, p] : idx.items()) catalog.image_index.emplace(id, p.get<std::string>());
    }
    return catalog;
}

std::vector<CategorySample> list_room_categories(const Catalog& catalog, RoomType room,
                                                 const std::map<std::string, ProductProfile>& profiles, std::size_t k) {
    std::vector<CategorySample> out;
    for (const auto& [name, ids] : catalog.category_index) {
        CategorySample sample{name, {}};
        for (const auto& id : ids) {
            const auto it = profiles.find(id);
            if (it == profiles.end() || it->second.room_type != room) continue;
            if (sample.sample_item_ids.size() < k) sample.sample_item_ids.push_back(id);
            else break;
        }
        if (!sample.sample_item_ids.empty()) out.push_back(std::move(sample));
    }
    return out;
}

}  // namespace adgen
