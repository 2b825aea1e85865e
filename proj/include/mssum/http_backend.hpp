#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mssum/provider.hpp"

namespace mssum {

struct RetryPolicy {
    std::size_t max_attempts = 3;
    double backoff_base_s = 1.0;
    bool jitter = true;
};

// Connection settings for an OpenAI-compatible endpoint. The API key is read
// from the named environment variable at call time and never stored in
// artifacts or logs.
struct HttpBackendConfig {
    std::string base_url = "https://api.openai.com";
    std::string chat_path = "/v1/chat/completions";
    std::string embeddings_path = "/v1/embeddings";
    std::string api_key_env = "OPENAI_API_KEY";
    double timeout_s = 120.0;
    RetryPolicy retry;
};

class HttpChatBackend : public ChatBackend {
public:
    HttpChatBackend(HttpBackendConfig config, ModelProfile profile);
    ~HttpChatBackend() override;

    ChatResponse complete(const ChatRequest& request) override;
    const ModelProfile& profile() const override { return profile_; }

private:
    HttpBackendConfig config_;
    ModelProfile profile_;
};

class HttpEmbedBackend : public EmbedBackend {
public:
    HttpEmbedBackend(HttpBackendConfig config, ModelProfile profile, std::size_t dimension);
    ~HttpEmbedBackend() override;

    std::vector<std::vector<double>> embed_texts(const std::vector<std::string>& texts) override;
    std::size_t dimension() const override { return dimension_; }
    const ModelProfile& profile() const override { return profile_; }
    double last_latency_s() const override { return last_latency_s_; }

private:
    HttpBackendConfig config_;
    ModelProfile profile_;
    std::size_t dimension_ = 0;
    double last_latency_s_ = 0.0;
};

// POSTs `body` as application/json and returns the response body. Retries
// transport failures, timeouts, 429 and 5xx with exponential backoff; other
// 4xx statuses raise ProviderError immediately.
std::string http_post_json(const HttpBackendConfig& config, const std::string& path,
                           const std::string& body);

}  // namespace mssum
