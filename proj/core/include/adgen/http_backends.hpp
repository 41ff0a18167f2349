#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <string>

#include <json.hpp>

#include "adgen/gateway.hpp"

namespace adgen {

struct RetryPolicy {
    int max_attempts = 3;
    double backoff_base_s = 0.5;  // delay before retry k is base * 2^(k-1)
};

enum class BackendKind { http, mock };

struct BackendConfig {
    BackendKind kind = BackendKind::mock;
    std::optional<std::string> endpoint;  // e.g. http://127.0.0.1:8188/inpaint
    std::optional<std::string> auth_env;  // env var holding a bearer token
    double timeout_s = 60.0;
    RetryPolicy retry;

    void validate() const;  // http requires an endpoint
};

/// JSON POST with bounded retries and exponential backoff. Connection errors,
/// 429 and 5xx are retried; other statuses fail fast. Exhaustion raises
/// BackendUnavailable.
class HttpJsonTransport {
public:
    explicit HttpJsonTransport(BackendConfig config);
    nlohmann::json post(const nlohmann::json& body) const;
    const BackendConfig& config() const { return config_; }

    /// Replaceable for tests that count or skip sleeps.
    std::function<void(std::chrono::duration<double>)> sleeper;

private:
    BackendConfig config_;
    std::string origin_;
    std::string path_;
};

/// OpenAI-compatible chat completions body with image_url data URIs.
nlohmann::json chat_request_body(const ChatVisionRequest& req);

class HttpVisionChat final : public VisionChatBackend {
public:
    explicit HttpVisionChat(BackendConfig config) : transport_(std::move(config)) {}
    std::string complete(const ChatVisionRequest& req) override;
    HttpJsonTransport& transport() { return transport_; }

private:
    HttpJsonTransport transport_;
};

/// POST {"image": b64png} -> {"width", "height", "depth": [...], "valid": [...]?}
class HttpDepth final : public DepthBackend {
public:
    explicit HttpDepth(BackendConfig config) : transport_(std::move(config)) {}
    DepthMap estimate(const RgbImage& image) override;

private:
    HttpJsonTransport transport_;
};

/// POST {"image": b64png, "query": text} -> {"width", "height", "mask": b64png}
class HttpSegmenter final : public SegmentationBackend {
public:
    explicit HttpSegmenter(BackendConfig config) : transport_(std::move(config)) {}
    SegmentationMask segment(const RgbImage& image, std::string_view query) override;

private:
    HttpJsonTransport transport_;
};

/// POST {"canvas", "mask", "prompt", "negative_prompt", "controls", "seed",
/// "steps"} -> {"image": b64png}. Mask PNG is 255 where repaint is allowed.
class HttpInpainter final : public InpaintBackend {
public:
    explicit HttpInpainter(BackendConfig config) : transport_(std::move(config)) {}
    RgbImage inpaint(const InpaintRequest& req) override;

private:
    HttpJsonTransport transport_;
};

nlohmann::json inpaint_request_body(const InpaintRequest& req);

}  // namespace adgen
