#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <thread>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <spdlog/spdlog.h>

#include "halluscan/digest.hpp"
#include "halluscan/error.hpp"
#include "halluscan/gateway.hpp"

namespace halluscan {

namespace {

constexpr const char* kSystemPrompt =
    "You are a meticulous video quality analyst. You inspect frames produced by a text-to-video model "
    "and answer with exactly one JSON object in the requested format. Never add prose outside the JSON.";

struct Endpoint {
    std::string scheme_host_port;
    std::string path;
};

Endpoint split_url(const std::string& base_url) {
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) throw GatewayConfigError("base_url needs a scheme: " + base_url);
    const auto path_start = base_url.find('/', scheme_end + 3);
    Endpoint ep;
    ep.scheme_host_port = base_url.substr(0, path_start);
    std::string prefix = path_start == std::string::npos ? "" : base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    ep.path = prefix + "/chat/completions";
    return ep;
}

std::string encode_image(const ImageRef& ref, int max_edge) {
    cv::Mat img = cv::imread(ref.path.string(), cv::IMREAD_COLOR);
    if (img.empty()) throw InputError("cannot decode image " + ref.path.string());
    const int edge = std::max(img.cols, img.rows);
    if (max_edge > 0 && edge > max_edge) {
        const double scale = static_cast<double>(max_edge) / edge;
        cv::Mat small;
        cv::resize(img, small, cv::Size(), scale, scale, cv::INTER_AREA);
        img = small;
    }
    std::vector<uchar> png;
    cv::imencode(".png", img, png);
    return "data:image/png;base64," + base64_encode(std::string_view(reinterpret_cast<const char*>(png.data()), png.size()));
}

}  // namespace

LiveBackend::LiveBackend(LiveOptions options) : options_(std::move(options)) {
    if (options_.api_key.empty()) {
        if (const char* env = std::getenv(kApiKeyEnv); env != nullptr) options_.api_key = env;
    }
    if (options_.api_key.empty()) {
        throw GatewayConfigError(std::string("live backend needs an API key in ") + kApiKeyEnv);
    }
    split_url(options_.base_url);
}

json LiveBackend::build_body(const GatewayRequest& request, const std::string& prompt_text) const {
    json content = json::array();
    content.push_back({{"type", "text"}, {"text", prompt_text}});
    for (const auto& img : request.images) {
        content.push_back({{"type", "image_url"}, {"image_url", {{"url", encode_image(img, options_.max_image_edge)}}}});
    }
    return {
        {"model", options_.model},
        {"temperature", 0},
        {"response_format", {{"type", "json_object"}}},
        {"messages", json::array({{{"role", "system"}, {"content", kSystemPrompt}},
                                  {{"role", "user"}, {"content", content}}})},
    };
}

std::string LiveBackend::send(const GatewayRequest& request, const std::string& prompt_text, int) {
    const auto ep = split_url(options_.base_url);
    const std::string body = build_body(request, prompt_text).dump();

    httplib::Client client(ep.scheme_host_port);
    const auto timeout = std::chrono::duration<double>(options_.timeout_s);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    client.set_bearer_token_auth(options_.api_key);

    std::string last_error;
    double delay = options_.backoff_base_s;
    for (int attempt = 0; attempt <= options_.transport_retries; ++attempt) {
        if (attempt > 0) {
            spdlog::warn("transport retry {} after {}; sleeping {:.3f}s", attempt, last_error, delay);
            std::this_thread::sleep_for(std::chrono::duration<double>(delay));
            delay *= options_.backoff_factor;
        }
        auto res = client.Post(ep.path, body, "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw GatewayTransportError("HTTP " + std::to_string(res->status) + " from " + options_.base_url + ": " +
                                        res->body.substr(0, 200));
        }
        json reply = json::parse(res->body, nullptr, false);
        if (reply.is_discarded()) throw GatewayTransportError("endpoint returned non-JSON body");
        try {
            return reply.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception& e) {
            throw GatewayTransportError(std::string("unexpected completion shape: ") + e.what());
        }
    }
    throw GatewayTransportError("transport failed after " + std::to_string(options_.transport_retries + 1) +
                                " tries: " + last_error);
}

}  // namespace halluscan
