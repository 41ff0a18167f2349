// adgen: command-line front end for catalog ingestion, pairing, batch
// generation, review and evaluation.

#include <fnmatch.h>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "adgen/api_server.hpp"
#include "adgen/catalog.hpp"
#include "adgen/errors.hpp"
#include "adgen/evaluation.hpp"
#include "adgen/gateway_config.hpp"
#include "adgen/pairing.hpp"
#include "adgen/pipeline.hpp"
#include "adgen/store.hpp"
#include "adgen/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
    std::string state = "adgen-state";
    std::string catalog;
    std::string backend;
    std::string config;
};

json read_json_arg(const std::string& text) {
    if (!text.empty() && text.front() != '{' && text.front() != '[' && fs::exists(text)) {
        std::ifstream in(text);
        return json::parse(in);
    }
    return json::parse(text);
}

adgen::GatewayConfig gateway_config(const Common& c) {
    adgen::GatewayConfig g = c.backend.empty() ? adgen::mock_gateway_config() : adgen::load_gateway_config(c.backend);
    adgen::apply_env_overrides(g);
    return g;
}

adgen::OrchestratorConfig orchestrator_config(const Common& c) {
    if (c.config.empty()) return {};
    std::ifstream in(c.config);
    if (!in) throw adgen::IoError("cannot open " + c.config);
    return adgen::orchestrator_config_from_json(json::parse(in));
}

adgen::Catalog load_catalog_arg(const Common& c) {
    if (c.catalog.empty()) throw adgen::InvalidArgument("--catalog is required");
    return adgen::load_catalog(c.catalog);
}

std::unique_ptr<adgen::Orchestrator> make_orchestrator(const Common& c) {
    auto store = std::make_shared<adgen::Store>(c.state);
    return std::make_unique<adgen::Orchestrator>(load_catalog_arg(c), adgen::build_gateway(gateway_config(c)), store,
                                                 orchestrator_config(c));
}

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

json batch_view(adgen::Orchestrator& orch, const std::string& id) {
    json j = adgen::batch_info_to_json(orch.batch(id));
    json recs = json::array();
    for (const auto& r : orch.batch_records(id)) {
        recs.push_back({{"id", r.id}, {"ok", r.status.ok}, {"stage", r.status.stage}, {"reason", r.status.reason}});
    }
    j["records"] = recs;
    return j;
}

std::vector<adgen::EvalDimension> parse_dims(const std::string& text) {
    if (text == "all") return {adgen::kAllDimensions.begin(), adgen::kAllDimensions.end()};
    std::vector<adgen::EvalDimension> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto part = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!part.empty()) out.push_back(adgen::parse_dimension(part));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

adgen::ApiServer* g_server = nullptr;
void on_signal(int) {
    if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adgen: multi-product lifestyle ad generation"};
    app.require_subcommand(1);
    Common common;
    app.add_option("--state", common.state, "State directory (artifacts, records, batches)");
    app.add_option("--catalog", common.catalog, "Ingested catalog file");
    app.add_option("--backend", common.backend, "Gateway config JSON (default: all mock)");
    app.add_option("--config", common.config, "Orchestrator config JSON");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Ingest raw JSON-lines records");
    std::string records_path, images_dir, out_path;
    std::vector<std::string> locales;
    ingest->add_option("--records", records_path)->required();
    ingest->add_option("--images", images_dir)->required();
    ingest->add_option("--out", out_path)->required();
    ingest->add_option("--locale", locales, "Locale preference, in order");

    // make-fixture
    auto* fixture = app.add_subcommand("make-fixture", "Write a synthetic catalog with mock backend config");
    std::string fixture_dir;
    int per_category = 4;
    std::uint64_t fixture_seed = 7;
    fixture->add_option("--out", fixture_dir)->required();
    fixture->add_option("--per-category", per_category);
    fixture->add_option("--seed", fixture_seed);

    // profile
    auto* profile = app.add_subcommand("profile", "Profile products with the chat backend");
    std::string profile_category;
    profile->add_option("--category", profile_category);

    // pairs
    auto* pairs = app.add_subcommand("pairs", "List viewpoint-compatible pairs");
    std::string room = "living_room", cat_a, cat_b;
    double threshold = adgen::kDefaultViewpointThresholdDeg;
    std::size_t pair_count = 10;
    std::uint64_t pair_seed = 0;
    pairs->add_option("--room", room);
    pairs->add_option("--cat-a", cat_a)->required();
    pairs->add_option("--cat-b", cat_b)->required();
    pairs->add_option("--threshold", threshold);
    pairs->add_option("--count", pair_count);
    pairs->add_option("--seed", pair_seed);

    // batch
    auto* batch = app.add_subcommand("batch", "Batch generation");
    batch->require_subcommand(1);
    auto* batch_create = batch->add_subcommand("create", "Create a batch from a BatchSpec");
    std::string spec_arg;
    batch_create->add_option("--spec", spec_arg, "BatchSpec JSON text or file")->required();
    auto* batch_run = batch->add_subcommand("run", "Run a queued batch");
    std::string batch_id;
    batch_run->add_option("--id", batch_id)->required();
    auto* batch_status = batch->add_subcommand("status", "Show a batch");
    batch_status->add_option("--id", batch_id)->required();

    // regen
    auto* regen = app.add_subcommand("regen", "Regenerate a record with overrides");
    std::string regen_id, overrides_arg = "{}";
    regen->add_option("--id", regen_id)->required();
    regen->add_option("--overrides", overrides_arg, "Overrides JSON text or file");

    // gallery
    auto* gallery = app.add_subcommand("gallery", "Final gallery of a room");
    gallery->add_option("--room", room);

    // eval
    auto* eval = app.add_subcommand("eval", "Judge evaluation");
    eval->require_subcommand(1);
    auto* eval_run = eval->add_subcommand("run", "Score stored records");
    std::string records_glob = "*", dims_arg = "all", judge_model = "gpt-4o", scores_path = "scores.jsonl";
    bool som = false;
    eval_run->add_option("--records", records_glob, "Glob over generation or batch ids");
    eval_run->add_option("--dims", dims_arg, "all or a comma list");
    eval_run->add_option("--judge", judge_model);
    eval_run->add_flag("--som", som);
    eval_run->add_option("--out", scores_path);
    auto* eval_report = eval->add_subcommand("report", "Aggregate a score log");
    std::string report_dim = "authenticity", report_format = "markdown";
    eval_report->add_option("--scores", scores_path);
    eval_report->add_option("--dimension", report_dim);
    eval_report->add_option("--format", report_format)->check(CLI::IsMember({"markdown", "csv"}));

    // serve
    auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
    std::string host = "127.0.0.1";
    int port = 8080;
    serve->add_option("--host", host);
    serve->add_option("--port", port);

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest->parsed()) {
            auto prefs = locales.empty() ? adgen::default_locale_preference() : locales;
            auto result = adgen::ingest_catalog(adgen::read_json_lines(records_path), prefs,
                                                adgen::index_image_directory(images_dir));
            adgen::save_catalog(result.catalog, out_path);
            for (const auto& d : result.diagnostics) {
                std::cerr << "line " << d.line << " " << d.item_id << ": " << d.reason << '\n';
            }
            std::cout << result.catalog.records.size() << " records, " << result.catalog.category_index.size()
                      << " categories, " << result.skipped << " skipped\n";
        } else if (fixture->parsed()) {
            adgen::SyntheticOptions opts;
            opts.seed = fixture_seed;
            for (const auto& a : adgen::synthetic_archetypes()) opts.per_category[a.category] = per_category;
            const auto fx = adgen::make_synthetic_fixture(opts);
            const auto catalog = adgen::write_fixture(fx, fixture_dir);
            adgen::save_catalog(catalog, fs::path(fixture_dir) / "catalog.adgen.jsonl");
            std::cout << "wrote " << fx.products.size() << " products to " << fixture_dir << '\n'
                      << "catalog: " << (fs::path(fixture_dir) / "catalog.adgen.jsonl").string() << '\n'
                      << "backend: " << (fs::path(fixture_dir) / "gateway.json").string() << '\n';
        } else if (profile->parsed()) {
            auto orch = make_orchestrator(common);
            auto profiles = orch->profiles_for(profile_category.empty() ? std::nullopt
                                                                       : std::optional<std::string>(profile_category));
            json out = json::object();
            for (const auto& [id, p] : profiles) out[id] = adgen::profile_to_json(p);
            print(out);
        } else if (pairs->parsed()) {
            auto orch = make_orchestrator(common);
            auto profiles = orch->profiles_for(std::nullopt);
            adgen::CachedTiltSource tilts(orch->catalog(), adgen::build_gateway(gateway_config(common)),
                                          orch->config().tilt);
            const auto tilts_path = orch->store().tilts_path();
            if (fs::exists(tilts_path)) tilts.load(tilts_path);
            auto result = adgen::pair_candidates(orch->catalog(), profiles, adgen::parse_room_type(room), cat_a, cat_b,
                                                 threshold, pair_count, pair_seed, tilts);
            tilts.save(tilts_path);
            json out = {{"pairs", json::array()}, {"rejects", json::array()}};
            for (const auto& p : result.pairs) out["pairs"].push_back(adgen::pair_to_json(p));
            for (const auto& r : result.rejects) {
                out["rejects"].push_back({{"item_a", r.item_a}, {"item_b", r.item_b}, {"reason", r.reason}});
            }
            print(out);
        } else if (batch_create->parsed()) {
            auto orch = make_orchestrator(common);
            print(adgen::batch_info_to_json(orch->create_batch(adgen::batch_spec_from_json(read_json_arg(spec_arg)))));
        } else if (batch_run->parsed()) {
            auto orch = make_orchestrator(common);
            orch->run_batch(batch_id);
            print(batch_view(*orch, batch_id));
        } else if (batch_status->parsed()) {
            auto orch = make_orchestrator(common);
            print(batch_view(*orch, batch_id));
        } else if (regen->parsed()) {
            auto orch = make_orchestrator(common);
            print(adgen::generation_to_json(orch->regenerate(regen_id, adgen::overrides_from_json(read_json_arg(overrides_arg)))));
        } else if (gallery->parsed()) {
            auto orch = make_orchestrator(common);
            json out = json::array();
            for (const auto& g : orch->final_gallery(adgen::parse_room_type(room))) {
                out.push_back({{"category_a", g.category_a}, {"category_b", g.category_b},
                               {"generation_ids", g.generation_ids}});
            }
            print(out);
        } else if (eval_run->parsed()) {
            auto orch = make_orchestrator(common);
            auto gateway = adgen::build_gateway(gateway_config(common));
            const auto dims = parse_dims(dims_arg);
            std::vector<adgen::EvalScore> scores;
            std::size_t failures = 0;
            for (const auto& j : orch->store().records()) {
                const auto rec = adgen::generation_from_json(j);
                if (!rec.status.ok) continue;
                if (fnmatch(records_glob.c_str(), rec.id.c_str(), 0) != 0 &&
                    fnmatch(records_glob.c_str(), rec.batch_id.c_str(), 0) != 0) {
                    continue;
                }
                for (const auto dim : dims) {
                    try {
                        auto req = adgen::judge_request_for(rec, orch->catalog(), orch->store(), dim, judge_model, som);
                        scores.push_back(adgen::judge(*gateway.chat, req));
                    } catch (const adgen::Error& e) {
                        ++failures;
                        std::cerr << rec.id << " " << adgen::to_string(dim) << ": " << e.kind() << ": " << e.what()
                                  << '\n';
                    }
                }
            }
            adgen::append_scores(scores_path, scores);
            std::cout << scores.size() << " scores appended to " << scores_path << ", " << failures << " failed\n";
        } else if (eval_report->parsed()) {
            const auto table = adgen::aggregate(adgen::read_scores(scores_path), adgen::parse_dimension(report_dim));
            std::cout << (report_format == "csv" ? adgen::render_csv(table) : adgen::render_markdown(table));
        } else if (serve->parsed()) {
            auto orch = make_orchestrator(common);
            adgen::ApiServer server(*orch);
            if (!server.bind(host, port)) {
                std::cerr << "cannot bind " << host << ":" << port << '\n';
                return 1;
            }
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cout << "listening on http://" << host << ":" << port << std::endl;
            server.listen_after_bind();
            orch->wait_idle();
        }
    } catch (const adgen::Error& e) {
        std::cerr << e.kind() << ": " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
