#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "medfuse/pipeline.hpp"

namespace medfuse {

// Provider/embedder endpoint mapping. type "mock" needs nothing else;
// type "openai_compat" talks to a chat-completions/embeddings style HTTP
// API with the credential read from api_key_env.
struct ProviderSpec {
    std::string type = "mock";
    std::string base_url;
    std::string api_key_env;
    std::string model;            // payload model name; defaults to the registry key
    std::string reasoning_effort; // opaque per-provider option, unused by the mock
};

struct EngineConfig {
    RunConfig run;
    std::map<std::string, ProviderSpec> providers;  // keyed by model_id
    std::map<std::string, ProviderSpec> embedders;  // keyed by embedder_id
    std::optional<std::filesystem::path> kb_dir;
    std::string reranker = "embedding";  // "embedding" | "identity"
    std::optional<std::filesystem::path> audit_log;
    std::optional<std::filesystem::path> prompts_dir;  // overrides embedded templates
    int retry_base_delay_ms = 1000;

    static EngineConfig from_json(const nlohmann::json& j);  // throws Error(config)
    static EngineConfig from_file(const std::filesystem::path& path);
    nlohmann::json to_json() const;
};

}  // namespace medfuse
