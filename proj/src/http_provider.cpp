#include "medfuse/http_provider.hpp"

#include <chrono>
#include <cstdlib>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>

#include "medfuse/errors.hpp"

namespace medfuse {

namespace {

std::string env_or_throw(const std::string& var) {
    if (var.empty()) return "";
    const char* value = std::getenv(var.c_str());
    if (!value || !*value) {
        throw Error(ErrorCode::config, "credential environment variable not set: " + var);
    }
    return value;
}

}  // namespace

HttpChatProvider::HttpChatProvider(HttpProviderConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty()) {
        throw Error(ErrorCode::config, "openai_compat provider needs a base_url");
    }
    api_key_ = env_or_throw(config_.api_key_env);
}

ChatResponse HttpChatProvider::complete(const ChatRequest& request) {
    nlohmann::json body;
    body["model"] = config_.model.empty() ? request.model_id : config_.model;
    auto messages = nlohmann::json::array();
    if (request.system) messages.push_back({{"role", "system"}, {"content", *request.system}});
    messages.push_back({{"role", "user"}, {"content", request.user}});
    body["messages"] = messages;
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_output_tokens;
    if (request.seed_hint) body["seed"] = *request.seed_hint;
    if (!config_.reasoning_effort.empty()) body["reasoning_effort"] = config_.reasoning_effort;

    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout_s);
    client.set_read_timeout(config_.timeout_s);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    auto start = std::chrono::steady_clock::now();
    auto res = client.Post("/chat/completions", headers, body.dump(), "application/json");
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - start)
                       .count();

    if (!res) {
        throw Error(ErrorCode::provider, "transport failure talking to " + config_.base_url);
    }
    if (res->status == 429 || res->status >= 500) {
        throw Error(ErrorCode::provider,
                    "provider returned status " + std::to_string(res->status));
    }
    if (res->status != 200) {
        throw Error(ErrorCode::config, "provider rejected request with status " +
                                           std::to_string(res->status) + ": " + res->body);
    }

    ChatResponse out;
    out.provider_latency_ms = elapsed;
    try {
        auto j = nlohmann::json::parse(res->body);
        const auto& choice = j.at("choices").at(0);
        std::string finish = choice.value("finish_reason", "stop");
        if (choice.at("message").contains("content") && !choice.at("message").at("content").is_null()) {
            out.text = choice.at("message").at("content").get<std::string>();
        }
        if (finish == "length") {
            out.finish_state = FinishState::truncated;
        } else if (finish == "content_filter" || (out.text.empty() && finish != "stop")) {
            out.finish_state = FinishState::refused;
        } else {
            out.finish_state = FinishState::complete;
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::provider, std::string("malformed provider response: ") + e.what());
    }
    return out;
}

HttpEmbedder::HttpEmbedder(HttpProviderConfig config, size_t dimension)
    : config_(std::move(config)), dimension_(dimension) {
    if (config_.base_url.empty()) {
        throw Error(ErrorCode::config, "openai_compat embedder needs a base_url");
    }
    api_key_ = env_or_throw(config_.api_key_env);
}

std::vector<EmbeddingVector> HttpEmbedder::do_embed_batch(const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (size_t offset = 0; offset < texts.size(); offset += kEmbedBatchCap) {
        size_t end = std::min(texts.size(), offset + kEmbedBatchCap);
        nlohmann::json body;
        body["model"] = config_.model;
        body["input"] = std::vector<std::string>(texts.begin() + offset, texts.begin() + end);

        httplib::Client client(config_.base_url);
        client.set_connection_timeout(config_.timeout_s);
        client.set_read_timeout(config_.timeout_s);
        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
        auto res = client.Post("/embeddings", headers, body.dump(), "application/json");
        if (!res || res->status != 200) {
            throw Error(ErrorCode::provider,
                        "embedding request failed" +
                            (res ? " with status " + std::to_string(res->status) : std::string()));
        }
        try {
            auto j = nlohmann::json::parse(res->body);
            for (const auto& row : j.at("data")) {
                EmbeddingVector v;
                v.values = row.at("embedding").get<std::vector<double>>();
                for (double x : v.values) {
                    if (!std::isfinite(x)) {
                        throw Error(ErrorCode::provider, "non-finite value in provider embedding");
                    }
                }
                if (dimension_ == 0) dimension_ = v.values.size();
                if (v.values.size() != dimension_) {
                    throw Error(ErrorCode::provider, "inconsistent embedding dimension from provider");
                }
                out.push_back(std::move(v));
            }
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::provider, std::string("malformed embedding response: ") + e.what());
        }
    }
    if (out.size() != texts.size()) {
        throw Error(ErrorCode::provider, "embedding count mismatch from provider");
    }
    return out;
}

}  // namespace medfuse
