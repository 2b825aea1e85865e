#include "mssum/http_backend.hpp"

#include <chrono>
#include <cstdlib>
#include <random>
#include <thread>

#include <json.hpp>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace mssum {

namespace {

std::string api_key(const HttpBackendConfig& config) {
    const char* key = std::getenv(config.api_key_env.c_str());
    return key ? std::string(key) : std::string();
}

bool retryable_status(int status) { return status == 429 || (status >= 500 && status < 600); }

void backoff_sleep(const RetryPolicy& policy, std::size_t attempt) {
    double delay = policy.backoff_base_s * static_cast<double>(1u << attempt);
    if (policy.jitter) {
        static thread_local std::mt19937_64 rng{std::random_device{}()};
        std::uniform_real_distribution<double> dist(0.0, delay * 0.25);
        delay += dist(rng);
    }
    std::this_thread::sleep_for(std::chrono::duration<double>(delay));
}

}  // namespace

std::string http_post_json(const HttpBackendConfig& config, const std::string& path,
                           const std::string& body) {
    httplib::Client client(config.base_url);
    client.set_connection_timeout(std::chrono::duration<double>(config.timeout_s));
    client.set_read_timeout(std::chrono::duration<double>(config.timeout_s));
    client.set_write_timeout(std::chrono::duration<double>(config.timeout_s));

    httplib::Headers headers;
    std::string key = api_key(config);
    if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);

    std::string last_error;
    for (std::size_t attempt = 0; attempt < config.retry.max_attempts; ++attempt) {
        if (attempt > 0) backoff_sleep(config.retry, attempt - 1);
        auto res = client.Post(path, headers, body, "application/json");
        if (!res) {
            last_error = "transport failure: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 200 && res->status < 300) return res->body;
        if (!retryable_status(res->status)) {
            throw ProviderError(res->status, "provider returned status " +
                                                 std::to_string(res->status) + ": " + res->body);
        }
        last_error = "status " + std::to_string(res->status);
    }
    throw TransportError("request to " + path + " failed after " +
                         std::to_string(config.retry.max_attempts) + " attempts (" + last_error +
                         ")");
}

HttpChatBackend::HttpChatBackend(HttpBackendConfig config, ModelProfile profile)
    : config_(std::move(config)), profile_(std::move(profile)) {
    profile_.validate();
}

HttpChatBackend::~HttpChatBackend() = default;

ChatResponse HttpChatBackend::complete(const ChatRequest& request) {
    nlohmann::json body;
    body["model"] = profile_.model_name;
    body["temperature"] = request.temperature;
    if (request.max_output_tokens) body["max_tokens"] = *request.max_output_tokens;
    body["messages"] = nlohmann::json::array();
    if (request.system_instruction) {
        body["messages"].push_back(
            {{"role", "system"}, {"content", *request.system_instruction}});
    }
    body["messages"].push_back({{"role", "user"}, {"content", request.user_content}});

    auto start = std::chrono::steady_clock::now();
    std::string raw = http_post_json(config_, config_.chat_path, body.dump());
    auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start);

    auto j = nlohmann::json::parse(raw, nullptr, false);
    if (j.is_discarded() || !j.contains("choices") || !j["choices"].is_array() ||
        j["choices"].empty()) {
        throw ProviderError(200, "chat response missing choices");
    }
    ChatResponse resp;
    resp.text = j["choices"][0].value("message", nlohmann::json::object())
                    .value("content", std::string());
    resp.latency_s = elapsed.count();
    if (j.contains("usage") && j["usage"].is_object()) {
        resp.tokens_in = j["usage"].value("prompt_tokens", 0);
        resp.tokens_out = j["usage"].value("completion_tokens", 0);
        resp.usage_reported = true;
    }
    return resp;
}

HttpEmbedBackend::HttpEmbedBackend(HttpBackendConfig config, ModelProfile profile,
                                   std::size_t dimension)
    : config_(std::move(config)), profile_(std::move(profile)), dimension_(dimension) {
    profile_.validate();
}

HttpEmbedBackend::~HttpEmbedBackend() = default;

std::vector<std::vector<double>> HttpEmbedBackend::embed_texts(
    const std::vector<std::string>& texts) {
    nlohmann::json body;
    body["model"] = profile_.model_name;
    body["input"] = texts;

    auto start = std::chrono::steady_clock::now();
    std::string raw = http_post_json(config_, config_.embeddings_path, body.dump());
    auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start);
    last_latency_s_ = elapsed.count();

    auto j = nlohmann::json::parse(raw, nullptr, false);
    if (j.is_discarded() || !j.contains("data") || !j["data"].is_array()) {
        throw ProviderError(200, "embeddings response missing data");
    }
    std::vector<std::vector<double>> out(texts.size());
    for (const auto& item : j["data"]) {
        std::size_t index = item.value("index", out.size());
        if (index >= out.size() || !item.contains("embedding")) {
            throw ProviderError(200, "embeddings response has malformed data entry");
        }
        out[index] = item["embedding"].get<std::vector<double>>();
        if (out[index].size() != dimension_) {
            throw ProviderError(200, "embedding dimension " + std::to_string(out[index].size()) +
                                         " does not match configured " +
                                         std::to_string(dimension_));
        }
    }
    for (const auto& v : out) {
        if (v.empty()) throw ProviderError(200, "embeddings response missing an input's vector");
    }
    return out;
}

}  // namespace mssum
