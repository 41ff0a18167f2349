#include "adgen/gateway_config.hpp"

#include <cstdlib>
#include <fstream>

#include "adgen/errors.hpp"
#include "adgen/mock_backends.hpp"

namespace adgen {

using nlohmann::json;

namespace {

CapabilityConfig capability_from_json(const json& j) {
    CapabilityConfig c;
    if (j.is_null()) return c;
    const std::string kind = j.value("kind", std::string("mock"));
    if (kind == "http") {
        c.backend.kind = BackendKind::http;
    } else if (kind == "mock") {
        c.backend.kind = BackendKind::mock;
    } else {
        throw InvalidArgument("backend kind must be 'http' or 'mock', got '" + kind + "'");
    }
    if (j.contains("endpoint")) c.backend.endpoint = j["endpoint"].get<std::string>();
    if (j.contains("auth_env")) c.backend.auth_env = j["auth_env"].get<std::string>();
    c.backend.timeout_s = j.value("timeout_s", c.backend.timeout_s);
    if (j.contains("retry")) {
        c.backend.retry.max_attempts = j["retry"].value("max_attempts", c.backend.retry.max_attempts);
        c.backend.retry.backoff_base_s = j["retry"].value("backoff_base_s", c.backend.retry.backoff_base_s);
    }
    if (j.contains("mock")) c.mock = j["mock"];
    c.backend.validate();
    return c;
}

json capability_to_json(const CapabilityConfig& c) {
    json j;
    j["kind"] = c.backend.kind == BackendKind::http ? "http" : "mock";
    if (c.backend.endpoint) j["endpoint"] = *c.backend.endpoint;
    if (c.backend.auth_env) j["auth_env"] = *c.backend.auth_env;
    j["timeout_s"] = c.backend.timeout_s;
    j["retry"] = {{"max_attempts", c.backend.retry.max_attempts}, {"backoff_base_s", c.backend.retry.backoff_base_s}};
    j["mock"] = c.mock;
    return j;
}

void env_endpoint(CapabilityConfig& c, const char* var) {
    if (const char* v = std::getenv(var); v && *v) {
        c.backend.kind = BackendKind::http;
        c.backend.endpoint = v;
    }
}

}  // namespace

GatewayConfig gateway_config_from_json(const json& j) {
    GatewayConfig g;
    g.chat = capability_from_json(j.value("chat", json()));
    g.depth = capability_from_json(j.value("depth", json()));
    g.segment = capability_from_json(j.value("segment", json()));
    g.inpaint = capability_from_json(j.value("inpaint", json()));
    if (j.contains("chat") && j["chat"].contains("model")) g.chat_model = j["chat"]["model"].get<std::string>();
    return g;
}

json gateway_config_to_json(const GatewayConfig& g) {
    json j = {{"chat", capability_to_json(g.chat)},
              {"depth", capability_to_json(g.depth)},
              {"segment", capability_to_json(g.segment)},
              {"inpaint", capability_to_json(g.inpaint)}};
    j["chat"]["model"] = g.chat_model;
    return j;
}

GatewayConfig load_gateway_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open backend config " + path.string());
    const json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw InvalidArgument("backend config " + path.string() + " is not valid JSON");
    return gateway_config_from_json(j);
}

void apply_env_overrides(GatewayConfig& config) {
    env_endpoint(config.chat, "ADGEN_CHAT_ENDPOINT");
    env_endpoint(config.depth, "ADGEN_DEPTH_ENDPOINT");
    env_endpoint(config.segment, "ADGEN_SEGMENT_ENDPOINT");
    env_endpoint(config.inpaint, "ADGEN_INPAINT_ENDPOINT");
    if (const char* v = std::getenv("ADGEN_CHAT_MODEL"); v && *v) config.chat_model = v;
}

GatewayConfig mock_gateway_config() {
    GatewayConfig g;
    g.chat.mock = {{"builtin", true}};
    return g;
}

MockDepthConfig mock_depth_config_from_json(const json& j) {
    MockDepthConfig c;
    c.default_tilt_deg = j.value("default_tilt_deg", c.default_tilt_deg);
    c.camera_height_m = j.value("camera_height_m", c.camera_height_m);
    c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
    c.max_depth_m = j.value("max_depth_m", c.max_depth_m);
    c.hfov_deg = j.value("hfov_deg", c.hfov_deg);
    c.seed = j.value("seed", c.seed);
    if (j.contains("tilts")) c.tilt_by_image = j["tilts"].get<std::map<std::string, double>>();
    return c;
}

ModelGateway build_gateway(const GatewayConfig& config) {
    ModelGateway g;
    g.chat_model = config.chat_model;
    if (config.chat.backend.kind == BackendKind::http) {
        g.chat = std::make_shared<HttpVisionChat>(config.chat.backend);
    } else {
        auto chat = std::make_shared<MockVisionChat>(config.chat.mock.value("seed", std::uint64_t{0}));
        for (auto& rule : mock_rules_from_json(config.chat.mock)) chat->add_rule(std::move(rule));
        if (config.chat.mock.value("builtin", true)) {
            install_builtin_responders(
                *chat, config.chat.mock.value("image_labels", std::map<std::string, std::string>{}));
        }
        g.chat = std::move(chat);
    }
    if (config.depth.backend.kind == BackendKind::http) {
        g.depth = std::make_shared<HttpDepth>(config.depth.backend);
    } else {
        g.depth = std::make_shared<MockDepth>(mock_depth_config_from_json(config.depth.mock));
    }
    if (config.segment.backend.kind == BackendKind::http) {
        g.segmenter = std::make_shared<HttpSegmenter>(config.segment.backend);
    } else {
        g.segmenter = std::make_shared<MockSegmenter>(config.segment.mock.value("threshold", kDefaultWhiteThreshold));
    }
    if (config.inpaint.backend.kind == BackendKind::http) {
        g.inpainter = std::make_shared<HttpInpainter>(config.inpaint.backend);
    } else {
        g.inpainter = std::make_shared<MockInpainter>();
    }
    return g;
}

}  // namespace adgen
