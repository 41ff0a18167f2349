#include "adgen/api_server.hpp"

#include <httplib.h>

#include "adgen/errors.hpp"

namespace adgen {

using nlohmann::json;

int http_status_for(const std::string& kind) {
    static const std::map<std::string, int> kStatus = {
        {"InvalidArgument", 400},      {"InvalidSpec", 400},       {"LayoutParseError", 400},
        {"UnknownBatch", 404},         {"UnknownGeneration", 404}, {"UnknownCollection", 404},
        {"UnknownCategory", 422},      {"BatchConflict", 409},     {"BackendUnavailable", 503},
        {"BackendProtocolViolation", 502},
    };
    const auto it = kStatus.find(kind);
    return it == kStatus.end() ? 500 : it->second;
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& kind, const std::string& message) {
    send_json(res, status, {{"error", {{"kind", kind}, {"message", message}}}});
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("request body is not JSON: ") + e.what());
    }
}

template <class F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const Error& e) {
            send_error(res, http_status_for(e.kind()), e.kind(), e.what());
        } catch (const json::exception& e) {
            send_error(res, 400, "InvalidArgument", e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, "InternalError", e.what());
        }
    };
}

json batch_view(Orchestrator& orch, const BatchInfo& info) {
    json j = batch_info_to_json(info);
    json records = json::array();
    for (const auto& id : info.generation_ids) {
        const auto r = orch.store().record(id);
        if (!r) continue;
        records.push_back({{"id", id}, {"status", r->at("status")}});
    }
    j["records"] = records;
    return j;
}

RoomType room_param(const httplib::Request& req) { return parse_room_type(req.path_params.at("room")); }

}  // namespace

ApiServer::ApiServer(Orchestrator& orchestrator)
    : orch_(orchestrator), server_(std::make_unique<httplib::Server>()) {
    install_routes();
}

ApiServer::~ApiServer() { stop(); }

httplib::Server& ApiServer::raw() { return *server_; }

int ApiServer::bind_any(const std::string& host) { return server_->bind_to_any_port(host); }

bool ApiServer::bind(const std::string& host, int port) { return server_->bind_to_port(host, port); }

bool ApiServer::listen_after_bind() { return server_->listen_after_bind(); }

void ApiServer::stop() {
    if (server_) server_->stop();
}

bool ApiServer::running() const { return server_->is_running(); }

void ApiServer::install_routes() {
    httplib::Server& s = *server_;
    Orchestrator& orch = orch_;

    s.Get("/health", guarded([](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, {{"status", "ok"}});
    }));

    s.Post("/batches", guarded([&orch](const httplib::Request& req, httplib::Response& res) {
        const BatchSpec spec = batch_spec_from_json(parse_body(req));
        const bool existed = orch.store().batch(batch_id_for(spec)).has_value();
        const BatchInfo info = orch.create_batch(spec);
        send_json(res, existed ? 200 : 201, batch_view(orch, info));
    }));

    s.Post("/batches/:id/run", guarded([&orch](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.path_params.at("id");
        const BatchInfo before = orch.batch(id);
        const bool wait = req.has_param("wait") && req.get_param_value("wait") != "false" &&
                          req.get_param_value("wait") != "0";
        if (wait || before.state == BatchState::completed) {
            orch.run_batch(id);
            send_json(res, 200, batch_view(orch, orch.batch(id)));
            return;
        }
        if (!orch.start_batch(id)) throw BatchConflict("batch " + id + " is already running");
        json body = batch_view(orch, orch.batch(id));
        body["state"] = to_string(BatchState::running);
        send_json(res, 202, body);
    }));

    s.Get("/batches/:id", guarded([&orch](const httplib::Request& req, httplib::Response& res) {
        send_json(res, 200, batch_view(orch, orch.batch(req.path_params.at("id"))));
    }));

    s.Get("/generations/:id", guarded([&orch](const httplib::Request& req, httplib::Response& res) {
        const auto j = orch.store().record(req.path_params.at("id"));
        if (!j) throw UnknownGeneration("no generation " + req.path_params.at("id"));
        send_json(res, 200, *j);
    }));

    auto artifact_route = [&orch](const char* which) {
        return guarded([&orch, which](const httplib::Request& req, httplib::Response& res) {
            const GenerationRecord rec = orch.generation(req.path_params.at("id"));
            const std::string hash = std::string(which) == "image" ? rec.artifacts.ad : rec.artifacts.canvas;
            if (hash.empty()) {
                throw UnknownGeneration("generation " + rec.id + " has no " + which + " (status " +
                                        (rec.status.ok ? "ok" : "failed at " + rec.status.stage) + ")");
            }
            const auto bytes = orch.store().read_artifact(hash);
            res.status = 200;
            res.set_header("ETag", "\"" + hash + "\"");
            res.set_content(std::string(bytes.begin(), bytes.end()), "image/png");
        });
    };
    s.Get("/generations/:id/image", artifact_route("image"));
    s.Get("/generations/:id/canvas", artifact_route("canvas"));

    s.Post("/generations/:id/regenerate", guarded([&orch](const httplib::Request& req, httplib::Response& res) {
        const RegenerateOverrides ov = overrides_from_json(parse_body(req));
        const GenerationRecord rec = orch.regenerate(req.path_params.at("id"), ov);
        send_json(res, 201, generation_to_json(rec));
    }));

    s.Get("/rooms/:room/categories", guarded([&orch](const httplib::Request& req, httplib::Response& res) {
        const RoomType room = room_param(req);
        std::size_t k = 6;
        if (req.has_param("k")) k = static_cast<std::size_t>(std::stoul(req.get_param_value("k")));
        json cats = json::array();
        for (const auto& c : orch.room_categories(room, k)) {
            cats.push_back({{"category", c.category}, {"sample_item_ids", c.sample_item_ids}});
        }
        send_json(res, 200, {{"room_type", to_string(room)}, {"categories", cats}});
    }));

    s.Get("/rooms/:room/final-gallery", guarded([&orch](const httplib::Request& req, httplib::Response& res) {
        const RoomType room = room_param(req);
        json groups = json::array();
        for (const auto& g : orch.final_gallery(room)) {
            groups.push_back({{"category_a", g.category_a},
                              {"category_b", g.category_b},
                              {"generation_ids", g.generation_ids}});
        }
        send_json(res, 200, {{"room_type", to_string(room)}, {"groups", groups}});
    }));

    s.Post("/collections/:name/entries", guarded([&orch](const httplib::Request& req, httplib::Response& res) {
        const std::string name = req.path_params.at("name");
        const json body = parse_body(req);
        Collection c;
        if (body.contains("batch_id")) {
            c = orch.add_batch_to_collection(name, body.at("batch_id").get<std::string>());
        } else if (body.contains("ids") && body["ids"].is_array()) {
            c = orch.add_to_collection(name, body["ids"].get<std::vector<std::string>>());
        } else {
            throw InvalidArgument("body needs \"ids\" (array) or \"batch_id\"");
        }
        send_json(res, 200, collection_to_json(c));
    }));

    s.Get("/collections/:name", guarded([&orch](const httplib::Request& req, httplib::Response& res) {
        send_json(res, 200, collection_to_json(orch.collection(req.path_params.at("name"))));
    }));

    s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty()) {
            send_error(res, res.status, res.status == 404 ? "NotFound" : "HttpError",
                       "no route or request rejected (status " + std::to_string(res.status) + ")");
        }
    });
}

}  // namespace adgen
