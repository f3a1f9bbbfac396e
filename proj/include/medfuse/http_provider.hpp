#pragma once

#include <string>

#include "medfuse/embedding.hpp"
#include "medfuse/gateway.hpp"

namespace medfuse {

// OpenAI-compatible chat/embeddings endpoints. The credential is read from
// the named environment variable at construction time.
struct HttpProviderConfig {
    std::string base_url;         // e.g. "https://api.openai.com/v1"
    std::string api_key_env;      // empty for keyless local servers
    std::string model;            // payload model name
    std::string reasoning_effort; // opaque passthrough, e.g. "low"
    int timeout_s = 120;
};

class HttpChatProvider : public Provider {
public:
    explicit HttpChatProvider(HttpProviderConfig config);

    std::string name() const override { return "openai_compat"; }
    ChatResponse complete(const ChatRequest& request) override;

private:
    HttpProviderConfig config_;
    std::string api_key_;
};

class HttpEmbedder : public Embedder {
public:
    explicit HttpEmbedder(HttpProviderConfig config, size_t dimension = 0);

    std::string name() const override { return "openai_compat"; }
    size_t dimension() const override { return dimension_; }

protected:
    std::vector<EmbeddingVector> do_embed_batch(const std::vector<std::string>& texts) override;

private:
    HttpProviderConfig config_;
    std::string api_key_;
    size_t dimension_;
};

}  // namespace medfuse
