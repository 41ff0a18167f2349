#include "adgen/http_backends.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "adgen/errors.hpp"
#include "adgen/hashing.hpp"

namespace adgen {

using nlohmann::json;

void BackendConfig::validate() const {
    if (kind == BackendKind::http && (!endpoint || endpoint->empty())) {
        throw InvalidArgument("http backend requires an endpoint");
    }
    if (timeout_s <= 0) throw InvalidArgument("backend timeout must be positive");
    if (retry.max_attempts < 1) throw InvalidArgument("retry.max_attempts must be at least 1");
}

HttpJsonTransport::HttpJsonTransport(BackendConfig config) : config_(std::move(config)) {
    config_.validate();
    if (config_.kind != BackendKind::http) throw InvalidArgument("HttpJsonTransport needs an http backend config");
    const std::string& url = *config_.endpoint;
    const auto scheme = url.find("://");
    if (scheme == std::string::npos) throw InvalidArgument("endpoint must include a scheme: " + url);
    const auto slash = url.find('/', scheme + 3);
    origin_ = slash == std::string::npos ? url : url.substr(0, slash);
    path_ = slash == std::string::npos ? "/" : url.substr(slash);
    sleeper = [](std::chrono::duration<double> d) { std::this_thread::sleep_for(d); };
}

json HttpJsonTransport::post(const json& body) const {
    httplib::Client client(origin_);
    const auto secs = static_cast<time_t>(config_.timeout_s);
    const auto usecs = static_cast<time_t>((config_.timeout_s - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (config_.auth_env) {
        if (const char* token = std::getenv(config_.auth_env->c_str())) {
            headers.emplace("Authorization", std::string("Bearer ") + token);
        }
    }
    const std::string payload = body.dump();
    std::string last_error = "no attempt made";
    for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
        if (attempt > 1) {
            sleeper(std::chrono::duration<double>(config_.retry.backoff_base_s * static_cast<double>(1 << (attempt - 2))));
        }
        auto res = client.Post(path_, headers, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            throw BackendUnavailable(*config_.endpoint + " answered HTTP " + std::to_string(res->status));
        }
        auto parsed = json::parse(res->body, nullptr, false);
        if (parsed.is_discarded()) throw BackendProtocolViolation(*config_.endpoint + " returned a non-JSON body");
        return parsed;
    }
    throw BackendUnavailable(*config_.endpoint + " unavailable after " + std::to_string(config_.retry.max_attempts) +
                             " attempts (" + last_error + ")");
}

json chat_request_body(const ChatVisionRequest& req) {
    json messages = json::array();
    if (req.system_prompt) messages.push_back({{"role", "system"}, {"content", *req.system_prompt}});
    json content = json::array();
    content.push_back({{"type", "text"}, {"text", req.user_text}});
    for (const auto& img : req.images) {
        content.push_back({{"type", "image_url"},
                           {"image_url", {{"url", "data:image/png;base64," + base64_encode(img)}, {"detail", "high"}}}});
    }
    messages.push_back({{"role", "user"}, {"content", content}});
    return {{"model", req.model_id}, {"temperature", req.temperature}, {"messages", messages}};
}

std::string HttpVisionChat::complete(const ChatVisionRequest& req) {
    const json reply = transport_.post(chat_request_body(req));
    try {
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
        throw BackendProtocolViolation("chat reply lacks choices[0].message.content");
    }
}

DepthMap HttpDepth::estimate(const RgbImage& image) {
    const json reply = transport_.post({{"image", base64_encode(encode_png(image))}});
    DepthMap d;
    try {
        d.width = reply.at("width").get<int>();
        d.height = reply.at("height").get<int>();
        d.values = reply.at("depth").get<std::vector<float>>();
        if (reply.contains("valid")) {
            d.valid = reply["valid"].get<std::vector<std::uint8_t>>();
        } else {
            d.valid.assign(d.values.size(), 1);
        }
    } catch (const json::exception& e) {
        throw BackendProtocolViolation(std::string("malformed depth reply: ") + e.what());
    }
    return d;
}

SegmentationMask HttpSegmenter::segment(const RgbImage& image, std::string_view query) {
    const json reply =
        transport_.post({{"image", base64_encode(encode_png(image))}, {"query", std::string(query)}});
    GrayImage gray;
    try {
        gray = decode_gray(base64_decode(reply.at("mask").get<std::string>()));
    } catch (const json::exception& e) {
        throw BackendProtocolViolation(std::string("malformed segmentation reply: ") + e.what());
    } catch (const ImageDecodeError& e) {
        throw BackendProtocolViolation(std::string("segmentation mask does not decode: ") + e.what());
    }
    SegmentationMask mask(gray.width(), gray.height());
    for (int y = 0; y < gray.height(); ++y) {
        for (int x = 0; x < gray.width(); ++x) mask.set(x, y, *gray.at(x, y) > 127);
    }
    return mask;
}

json inpaint_request_body(const InpaintRequest& req) {
    json controls = json::array();
    for (const auto& c : req.controls) controls.push_back({{"type", to_string(c.type)}, {"strength", c.strength}});
    return {{"canvas", base64_encode(encode_png(req.canvas))},
            {"mask", base64_encode(encode_png(req.inpaint_mask))},
            {"prompt", req.prompt},
            {"negative_prompt", req.negative_prompt},
            {"controls", controls},
            {"seed", req.seed},
            {"steps", req.steps}};
}

RgbImage HttpInpainter::inpaint(const InpaintRequest& req) {
    const json reply = transport_.post(inpaint_request_body(req));
    try {
        return decode_rgb(base64_decode(reply.at("image").get<std::string>()));
    } catch (const json::exception& e) {
        throw BackendProtocolViolation(std::string("malformed inpaint reply: ") + e.what());
    } catch (const ImageDecodeError& e) {
        throw BackendProtocolViolation(std::string("inpaint image does not decode: ") + e.what());
    }
}

}  // namespace adgen
