#include "medfuse/config.hpp"

#include "medfuse/errors.hpp"
#include "medfuse/io.hpp"

namespace medfuse {

namespace {

ProviderSpec spec_from_json(const nlohmann::json& j, const std::string& key) {
    if (!j.is_object()) throw Error(ErrorCode::config, "provider entry '" + key + "' must be an object");
    ProviderSpec spec;
    spec.type = j.value("type", "mock");
    if (spec.type != "mock" && spec.type != "openai_compat") {
        throw Error(ErrorCode::config, "provider '" + key + "' has unknown type '" + spec.type + "'");
    }
    spec.base_url = j.value("base_url", "");
    spec.api_key_env = j.value("api_key_env", "");
    spec.model = j.value("model", key);
    spec.reasoning_effort = j.value("reasoning_effort", "");
    return spec;
}

nlohmann::json spec_to_json(const ProviderSpec& spec) {
    nlohmann::json j;
    j["type"] = spec.type;
    if (!spec.base_url.empty()) j["base_url"] = spec.base_url;
    if (!spec.api_key_env.empty()) j["api_key_env"] = spec.api_key_env;
    j["model"] = spec.model;
    if (!spec.reasoning_effort.empty()) j["reasoning_effort"] = spec.reasoning_effort;
    return j;
}

template <typename T>
T number_or(const nlohmann::json& j, const char* field, T fallback) {
    auto it = j.find(field);
    if (it == j.end() || it->is_null()) return fallback;
    if (!it->is_number()) throw Error(ErrorCode::config, std::string("field '") + field + "' must be a number");
    return it->get<T>();
}

}  // namespace

EngineConfig EngineConfig::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorCode::config, "configuration must be a JSON object");

    EngineConfig cfg;
    RunConfig& run = cfg.run;
    run.model_id = j.value("model_id", "mock");
    run.embedder_id = j.value("embedder_id", "mock");
    run.judge_model_id = j.value("judge_model_id", run.model_id);
    run.tau = number_or(j, "tau", 0.5);
    run.k_initial = number_or(j, "k_initial", 10);
    run.k_final = number_or(j, "k_final", 3);
    run.temperature = number_or(j, "temperature", 0.7);
    run.concurrency_limit = number_or(j, "concurrency_limit", 4);
    run.max_output_tokens = number_or(j, "max_output_tokens", 1024);
    run.max_concepts = number_or(j, "max_concepts", 32);
    run.fusion_dedupe = j.value("fusion_dedupe", false);
    run.stage_timeout_s = number_or(j, "stage_timeout_s", 120);
    if (auto it = j.find("ablation"); it != j.end() && !it->is_null()) {
        run.ablation = parse_ablation(it->get<std::string>());
    }
    if (auto it = j.find("language"); it != j.end() && !it->is_null()) {
        try {
            run.language = parse_language(it->get<std::string>());
        } catch (const Error& e) {
            throw Error(ErrorCode::config, e.what());
        }
    }
    if (auto it = j.find("cache_dir"); it != j.end() && !it->is_null()) {
        run.cache_dir = it->get<std::string>();
    }
    if (run.cache_dir.empty()) throw Error(ErrorCode::config, "cache_dir must be set");

    if (auto it = j.find("providers"); it != j.end() && !it->is_null()) {
        for (auto& [key, value] : it->items()) cfg.providers[key] = spec_from_json(value, key);
    } else {
        cfg.providers["mock"] = ProviderSpec{};
    }
    if (auto it = j.find("embedders"); it != j.end() && !it->is_null()) {
        for (auto& [key, value] : it->items()) cfg.embedders[key] = spec_from_json(value, key);
    } else {
        cfg.embedders["mock"] = ProviderSpec{};
    }

    if (auto it = j.find("kb_dir"); it != j.end() && !it->is_null()) {
        cfg.kb_dir = std::filesystem::path(it->get<std::string>());
    }
    cfg.reranker = j.value("reranker", "embedding");
    if (cfg.reranker != "embedding" && cfg.reranker != "identity") {
        throw Error(ErrorCode::config, "reranker must be 'embedding' or 'identity'");
    }
    if (auto it = j.find("audit_log"); it != j.end() && !it->is_null()) {
        cfg.audit_log = std::filesystem::path(it->get<std::string>());
    }
    if (auto it = j.find("prompts_dir"); it != j.end() && !it->is_null()) {
        cfg.prompts_dir = std::filesystem::path(it->get<std::string>());
    }
    cfg.retry_base_delay_ms = number_or(j, "retry_base_delay_ms", 1000);

    try {
        run.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::config, e.what());
    }
    return cfg;
}

EngineConfig EngineConfig::from_file(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw Error(ErrorCode::config, "configuration file not found: " + path.string());
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::config, "configuration is not valid JSON: " + std::string(e.what()));
    }
    return from_json(j);
}

nlohmann::json EngineConfig::to_json() const {
    nlohmann::json j;
    j["model_id"] = run.model_id;
    j["embedder_id"] = run.embedder_id;
    j["judge_model_id"] = run.judge_model_id;
    j["tau"] = run.tau;
    j["k_initial"] = run.k_initial;
    j["k_final"] = run.k_final;
    j["temperature"] = run.temperature;
    j["ablation"] = to_string(run.ablation);
    if (run.language) j["language"] = std::string(to_tag(*run.language));
    j["cache_dir"] = run.cache_dir.string();
    j["concurrency_limit"] = run.concurrency_limit;
    j["max_output_tokens"] = run.max_output_tokens;
    j["max_concepts"] = run.max_concepts;
    j["fusion_dedupe"] = run.fusion_dedupe;
    j["stage_timeout_s"] = run.stage_timeout_s;
    nlohmann::json providers = nlohmann::json::object();
    for (const auto& [key, spec] : this->providers) providers[key] = spec_to_json(spec);
    j["providers"] = providers;
    nlohmann::json embedders = nlohmann::json::object();
    for (const auto& [key, spec] : this->embedders) embedders[key] = spec_to_json(spec);
    j["embedders"] = embedders;
    if (kb_dir) j["kb_dir"] = kb_dir->string();
    j["reranker"] = reranker;
    if (audit_log) j["audit_log"] = audit_log->string();
    if (prompts_dir) j["prompts_dir"] = prompts_dir->string();
    j["retry_base_delay_ms"] = retry_base_delay_ms;
    return j;
}

}  // namespace medfuse
