#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "adgen/gateway.hpp"
#include "adgen/http_backends.hpp"
#include "adgen/mock_backends.hpp"

namespace adgen {

struct CapabilityConfig {
    BackendConfig backend;
    nlohmann::json mock = nlohmann::json::object();  // mock-specific settings
};

/// Selects http vs mock per capability. File shape:
///   {"chat": {"kind": "http", "endpoint": "...", "auth_env": "OPENAI_API_KEY",
///             "timeout_s": 60, "retry": {"max_attempts": 3, "backoff_base_s": 0.5},
///             "model": "gpt-4o", "mock": {...}},
///    "depth": {...}, "segment": {...}, "inpaint": {...}}
struct GatewayConfig {
    CapabilityConfig chat;
    CapabilityConfig depth;
    CapabilityConfig segment;
    CapabilityConfig inpaint;
    std::string chat_model = "gpt-4o";
};

GatewayConfig gateway_config_from_json(const nlohmann::json& j);
nlohmann::json gateway_config_to_json(const GatewayConfig& config);
GatewayConfig load_gateway_config(const std::filesystem::path& path);

/// ADGEN_{CHAT,DEPTH,SEGMENT,INPAINT}_ENDPOINT switch the capability to http
/// with that endpoint; ADGEN_CHAT_MODEL overrides the chat model.
void apply_env_overrides(GatewayConfig& config);

/// All-mock configuration with builtin chat responders enabled.
GatewayConfig mock_gateway_config();

ModelGateway build_gateway(const GatewayConfig& config);

MockDepthConfig mock_depth_config_from_json(const nlohmann::json& j);

}  // namespace adgen
