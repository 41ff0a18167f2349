#include <gtest/gtest.h>

#include <random>
#include <set>

#include "adgen/catalog.hpp"
#include "adgen/errors.hpp"
#include "adgen/pairing.hpp"
#include "test_env.hpp"

using namespace adgen;
using adgen::testenv::TempDir;

namespace {

std::string doc(const std::string& id, const std::string& title, const std::string& type, const std::string& image) {
    nlohmann::json j = {{"item_id", id},
                        {"item_name", {{{"language_tag", "en_US"}, {"value", title}}}},
                        {"product_type", {{{"value", type}}}},
                        {"node", {{{"node_id", 1}, {"node_name", "/Home/Furniture/" + type}}}},
                        {"main_image_id", image}};
    return j.dump();
}

ProductProfile profile(const std::string& id, RoomType room) {
    ProductProfile p;
    p.item_id = id;
    p.short_description = "thing";
    p.room_type = room;
    return p;
}

}  // namespace

TEST(Catalog, IngestsTheAboSampleRecord) {
    const auto docs = read_json_lines(testenv::data_dir() / "abo_sample.json");
    const auto result = ingest_catalog(docs, default_locale_preference());
    ASSERT_EQ(result.catalog.records.size(), 1u);
    const auto& rec = result.catalog.records.at("B0857LSVB7");
    EXPECT_EQ(rec.product_type, "CELLULAR_PHONE_CASE");
    EXPECT_EQ(rec.main_image_id, "81-DuD5XzmL");
    EXPECT_EQ(rec.other_image_ids.size(), 2u);
    EXPECT_EQ(rec.node_paths.size(), 2u);
    EXPECT_EQ(rec.bullet_points.size(), 5u);
    ASSERT_TRUE(rec.item_weight);
    EXPECT_DOUBLE_EQ(rec.item_weight->value, 50.0);
    EXPECT_EQ(rec.item_weight->unit, "grams");
    EXPECT_NE(rec.title.find("Designer Lion"), std::string::npos);
    // last node segment and product type
    EXPECT_TRUE(result.catalog.category_index.count("back covers"));
    EXPECT_TRUE(result.catalog.category_index.count("back & bumper cases"));
    EXPECT_TRUE(result.catalog.category_index.count("cellular_phone_case"));
    EXPECT_EQ(rec.raw.at("country"), "IN");
}

TEST(Catalog, EmptyStreamGivesEmptyCatalog) {
    const auto result = ingest_catalog({}, default_locale_preference());
    EXPECT_TRUE(result.catalog.records.empty());
    EXPECT_TRUE(result.catalog.category_index.empty());
    EXPECT_TRUE(result.diagnostics.empty());
}

// catalog_200.jsonl was generated once by a script which also counted
// 197 distinct item ids and 3 repeated lines.
TEST(Catalog, DuplicateIdsKeepFirst) {
    const auto docs = read_json_lines(testenv::data_dir() / "catalog_200.jsonl");
    ASSERT_EQ(docs.size(), 200u);
    const auto result = ingest_catalog(docs, default_locale_preference());
    EXPECT_EQ(result.catalog.records.size(), 197u);
    EXPECT_EQ(result.skipped, 3u);
    ASSERT_EQ(result.diagnostics.size(), 3u);
    for (const auto& d : result.diagnostics) EXPECT_NE(d.reason.find("duplicate"), std::string::npos);

    // keep-first: each kept record is the document of its first line
    std::map<std::string, std::string> first_title;
    for (const auto& line : docs) {
        const auto j = nlohmann::json::parse(line);
        first_title.emplace(j["item_id"].get<std::string>(), j.dump());
    }
    for (const auto& [id, rec] : result.catalog.records) {
        EXPECT_EQ(rec.raw.dump(), first_title.at(id));
    }
}

TEST(Catalog, MalformedAndIncompleteRecordsAreSkipped) {
    const std::vector<std::string> docs = {
        "{not json",
        doc("A1", "Oak sofa", "SOFA", "i1"),
        R"({"item_id": "A2", "main_image_id": "i2"})",
        R"({"item_id": "A3", "item_name": [{"language_tag": "en_US", "value": "Lamp"}]})",
        R"([1, 2, 3])",
        doc("A4", "Floor lamp", "LAMP", "i4"),
    };
    const auto result = ingest_catalog(docs, default_locale_preference());
    EXPECT_EQ(result.catalog.records.size(), 2u);
    EXPECT_EQ(result.skipped, 4u);
    EXPECT_EQ(result.diagnostics[0].line, 1u);
    for (const auto& [id, rec] : result.catalog.records) {
        EXPECT_FALSE(rec.item_id.empty());
        EXPECT_FALSE(rec.title.empty());
        EXPECT_FALSE(rec.main_image_id.empty());
    }
}

TEST(Catalog, ImageIndexFiltersUnresolvedImages) {
    TempDir dir;
    save_png(dir.path() / "i1.png", testenv::solid_image(64, 64, 200, 10, 10));
    const auto index = index_image_directory(dir.path());
    const auto result =
        ingest_catalog({doc("A1", "Oak sofa", "SOFA", "i1"), doc("A2", "Lamp", "LAMP", "missing")},
                       default_locale_preference(), index);
    EXPECT_EQ(result.catalog.records.size(), 1u);
    EXPECT_EQ(result.catalog.main_image("A1").width(), 64);
}

TEST(Catalog, LocalePreferenceOrder) {
    const std::vector<LocalizedText> entries = {{"de_DE", "Sofa"}, {"en_GB", "Settee"}, {"en_IN", "Couch"}};
    EXPECT_EQ(select_locale(entries, default_locale_preference()), "Couch");
    EXPECT_EQ(select_locale({{"de_DE", "Sofa"}, {"en_GB", "Settee"}}, default_locale_preference()), "Settee");
    EXPECT_EQ(select_locale({{"de_DE", "Sofa"}}, default_locale_preference()), "Sofa");
    EXPECT_EQ(select_locale({}, default_locale_preference()), std::nullopt);
    EXPECT_EQ(select_locale({{"en_IN", "a"}, {"en_US", "b"}}, default_locale_preference()), "b");
}

TEST(Catalog, CategoryNamesAreNormalized) {
    EXPECT_EQ(normalize_category("  Floor LAMP "), "floor lamp");
    const auto result = ingest_catalog({doc("A1", "Oak sofa", "Sofa ", "i1")}, default_locale_preference());
    EXPECT_EQ(result.catalog.category_index.size(), 1u);
    EXPECT_EQ(result.catalog.category_index.at("sofa"), std::vector<std::string>{"A1"});
}

TEST(Catalog, IngestIsIdempotent) {
    const auto docs = read_json_lines(testenv::data_dir() / "catalog_200.jsonl");
    const auto a = ingest_catalog(docs, default_locale_preference());
    const auto b = ingest_catalog(docs, default_locale_preference());
    EXPECT_EQ(serialize_catalog(a.catalog), serialize_catalog(b.catalog));
}

TEST(Catalog, SaveLoadRoundTrip) {
    TempDir dir;
    const auto docs = read_json_lines(testenv::data_dir() / "catalog_200.jsonl");
    const auto a = ingest_catalog(docs, default_locale_preference());
    save_catalog(a.catalog, dir.path() / "catalog.jsonl");
    const auto b = load_catalog(dir.path() / "catalog.jsonl");
    EXPECT_EQ(serialize_catalog(a.catalog), serialize_catalog(b));
    EXPECT_EQ(a.catalog.category_index, b.category_index);
}

TEST(Catalog, CategoryIndexReferencesExistingRecords) {
    const auto result = ingest_catalog(read_json_lines(testenv::data_dir() / "catalog_200.jsonl"),
                                       default_locale_preference());
    for (const auto& [name, ids] : result.catalog.category_index) {
        EXPECT_EQ(name, normalize_category(name));
        for (const auto& id : ids) EXPECT_TRUE(result.catalog.records.count(id)) << id;
    }
}

TEST(RoomCategories, OnlyProfiledCategoriesOfTheRoom) {
    const auto catalog = ingest_catalog({doc("S1", "sofa", "SOFA", "a"), doc("S2", "sofa", "SOFA", "b"),
                                         doc("L1", "lamp", "LAMP", "c"), doc("B1", "bed", "BED", "d")},
                                        default_locale_preference())
                             .catalog;
    std::map<std::string, ProductProfile> profiles = {{"S1", profile("S1", RoomType::living_room)},
                                                      {"S2", profile("S2", RoomType::living_room)},
                                                      {"L1", profile("L1", RoomType::living_room)},
                                                      {"B1", profile("B1", RoomType::bedroom)}};
    const auto living = list_room_categories(catalog, RoomType::living_room, profiles);
    ASSERT_EQ(living.size(), 2u);
    EXPECT_EQ(living[0].category, "lamp");
    EXPECT_EQ(living[1].category, "sofa");
    EXPECT_EQ(living[1].sample_item_ids, (std::vector<std::string>{"S1", "S2"}));
    EXPECT_TRUE(list_room_categories(catalog, RoomType::bathroom, profiles).empty());
}

TEST(RoomCategories, SampleCapAndOrder) {
    std::vector<std::string> docs;
    std::map<std::string, ProductProfile> profiles;
    for (int i = 9; i >= 0; --i) {
        const std::string id = "S" + std::to_string(i);
        docs.push_back(doc(id, "sofa", "SOFA", "img" + id));
        profiles[id] = profile(id, RoomType::living_room);
    }
    const auto catalog = ingest_catalog(docs, default_locale_preference()).catalog;
    const auto out = list_room_categories(catalog, RoomType::living_room, profiles);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].sample_item_ids, (std::vector<std::string>{"S0", "S1", "S2", "S3", "S4", "S5"}));
    EXPECT_EQ(list_room_categories(catalog, RoomType::living_room, profiles, 2)[0].sample_item_ids.size(), 2u);
}

TEST(RoomCategories, MatchesBruteForceScan) {
    const char* types[] = {"SOFA", "LAMP", "BED", "STOOL", "VANITY"};
    std::vector<std::string> docs;
    std::map<std::string, ProductProfile> profiles;
    std::mt19937 rng(11);
    for (int i = 0; i < 60; ++i) {
        const std::string id = "P" + std::to_string(100 + i);
        docs.push_back(doc(id, "item", types[i % 5], "img" + id));
        if (rng() % 5 != 0) profiles[id] = profile(id, kAllRoomTypes[rng() % 4]);
    }
    const auto catalog = ingest_catalog(docs, default_locale_preference()).catalog;
    for (RoomType room : kAllRoomTypes) {
        // independent scan: record -> its categories, keep categories having a member in the room
        std::map<std::string, std::vector<std::string>> expected;
        for (const auto& [id, rec] : catalog.records) {
            const auto it = profiles.find(id);
            if (it == profiles.end() || it->second.room_type != room) continue;
            expected[normalize_category(rec.product_type)].push_back(id);
        }
        const auto got = list_room_categories(catalog, room, profiles, 100);
        ASSERT_EQ(got.size(), expected.size());
        for (const auto& sample : got) {
            auto ids = expected.at(sample.category);
            std::sort(ids.begin(), ids.end());
            EXPECT_EQ(sample.sample_item_ids, ids);
            for (const auto& id : sample.sample_item_ids) EXPECT_EQ(profiles.at(id).room_type, room);
            EXPECT_TRUE(catalog.category_index.count(sample.category));
        }
    }
}

TEST(RoomCategories, UnknownRoomListsValidValues) {
    try {
        parse_room_type("garage");
        FAIL();
    } catch (const InvalidArgument& e) {
        const std::string msg = e.what();
        for (const char* room : {"living_room", "bedroom", "kitchen", "bathroom"}) {
            EXPECT_NE(msg.find(room), std::string::npos);
        }
    }
}
