#pragma once

#include <chrono>
#include <cstdlib>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "tutor_eval/backend.hpp"
#include "tutor_eval/errors.hpp"

namespace tutor_eval {

namespace detail {

struct SplitUrl {
    std::string base;  // scheme://host[:port]
    std::string path;  // /v1/chat/completions
};

inline SplitUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw InvalidParameter("endpoint URL must include a scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

} // namespace detail

// Chat-completion client over HTTPS JSON. Retries timeouts, 429 and 5xx
// with exponential backoff; everything else fails immediately.
class LiveBackend : public ChatBackend {
public:
    explicit LiveBackend(BackendDescriptor descriptor)
        : descriptor_(std::move(descriptor)) {
        if (descriptor_.endpoint.empty())
            throw InvalidParameter("live backend requires an endpoint URL");
        const char* key = std::getenv(descriptor_.api_key_env.c_str());
        if (key == nullptr || *key == '\0')
            throw InvalidParameter("API key environment variable " + descriptor_.api_key_env +
                                   " is not set");
        api_key_ = key;
    }

    ChatResponse complete(const std::string& prompt) override {
        nlohmann::json body = {
            {"model", descriptor_.model_id},
            {"temperature", descriptor_.temperature},
            {"messages", nlohmann::json::array({nlohmann::json{
                             {"role", "user"}, {"content", prompt}}})},
        };
        auto url = detail::split_url(descriptor_.endpoint);

        std::string last_error;
        int delay_ms = descriptor_.retry_initial_delay_ms;
        for (int attempt = 1; attempt <= descriptor_.max_attempts; ++attempt) {
            if (attempt > 1) {
                std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
                delay_ms *= 2;
            }
            httplib::Client client(url.base);
            client.set_connection_timeout(30);
            client.set_read_timeout(120);
            httplib::Headers headers = {{"Authorization", "Bearer " + api_key_}};
            auto res = client.Post(url.path, headers, body.dump(), "application/json");
            if (!res) {
                last_error = "transport error: " + httplib::to_string(res.error());
                continue;  // timeout / connect failure: retryable
            }
            if (res->status == 429 || res->status >= 500) {
                last_error = "HTTP " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200)
                throw TransportError("HTTP " + std::to_string(res->status) + ": " + res->body);
            return parse_response(res->body);
        }
        throw TransportError("request failed after " +
                             std::to_string(descriptor_.max_attempts) + " attempts: " +
                             last_error);
    }

    const std::string& model_id() const override { return descriptor_.model_id; }

private:
    ChatResponse parse_response(const std::string& body) const {
        nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
        if (j.is_discarded())
            throw TransportError("backend returned invalid JSON");
        ChatResponse r;
        try {
            r.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw TransportError(std::string("unexpected response shape: ") + e.what());
        }
        if (j.contains("usage")) {
            r.prompt_tokens = j["usage"].value("prompt_tokens", std::size_t{0});
            r.completion_tokens = j["usage"].value("completion_tokens", std::size_t{0});
            r.usage_reported = true;
        }
        return r;
    }

    BackendDescriptor descriptor_;
    std::string api_key_;
};

} // namespace tutor_eval
