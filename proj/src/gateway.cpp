#include "medfuse/gateway.hpp"

#include <chrono>
#include <fstream>
#include <random>
#include <thread>

#include <json.hpp>

#include "medfuse/digest.hpp"
#include "medfuse/errors.hpp"

namespace medfuse {

namespace {

std::string prompt_digest(const ChatRequest& request) {
    std::string full = (request.system ? *request.system + "\x1e" : std::string()) + request.user;
    return sha256_hex(full);
}

int jittered_delay(int base_ms, double jitter_frac) {
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    std::uniform_real_distribution<double> dist(1.0 - jitter_frac, 1.0 + jitter_frac);
    return static_cast<int>(base_ms * dist(rng));
}

}  // namespace

LlmGateway::LlmGateway(std::shared_ptr<ResponseCache> cache, RetryPolicy retry)
    : cache_(std::move(cache)), retry_(std::move(retry)) {
    if (!retry_.sleeper) {
        retry_.sleeper = [](int delay_ms) {
            std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
        };
    }
}

void LlmGateway::register_provider(const std::string& model_id, std::shared_ptr<Provider> provider) {
    std::lock_guard<std::mutex> lock(providers_mutex_);
    providers_[model_id] = std::move(provider);
}

bool LlmGateway::has_provider(const std::string& model_id) const {
    std::lock_guard<std::mutex> lock(providers_mutex_);
    return providers_.count(model_id) > 0;
}

CompletionResult LlmGateway::complete(const ChatRequest& request) {
    if (request.user.empty()) throw Error(ErrorCode::invalid_argument, "chat request user prompt is empty");
    if (request.temperature < 0.0 || request.temperature > 1.0) {
        throw Error(ErrorCode::invalid_argument, "temperature must be in [0,1]");
    }
    if (request.max_output_tokens <= 0) {
        throw Error(ErrorCode::invalid_argument, "max_output_tokens must be positive");
    }

    std::shared_ptr<Provider> provider;
    {
        std::lock_guard<std::mutex> lock(providers_mutex_);
        auto it = providers_.find(request.model_id);
        if (it == providers_.end()) {
            throw Error(ErrorCode::config, "no provider configured for model id '" + request.model_id + "'");
        }
        provider = it->second;
    }

    CacheKey key{provider->name(), request.model_id, prompt_digest(request), request.temperature,
                 request.seed_hint};
    if (cache_) {
        if (auto hit = cache_->lookup(key)) {
            stats_.cache_hits.fetch_add(1);
            audit(request, *hit, true);
            return {*hit, true};
        }
    }

    ChatResponse response = complete_with_retry(*provider, request);
    stats_.provider_invocations.fetch_add(1);
    if (cache_) cache_->store(key, response);
    audit(request, response, false);
    return {response, false};
}

ChatResponse LlmGateway::complete_with_retry(Provider& provider, const ChatRequest& request) {
    int attempt = 0;
    for (;;) {
        ++attempt;
        stats_.provider_attempts.fetch_add(1);
        try {
            return provider.complete(request);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::provider || attempt >= retry_.max_attempts) {
                if (e.code() == ErrorCode::provider) {
                    throw Error(ErrorCode::provider,
                                "provider unreachable after " + std::to_string(attempt) +
                                    " attempts: " + e.what());
                }
                throw;
            }
            retry_.sleeper(jittered_delay(retry_.base_delay_ms << (attempt - 1), retry_.jitter_frac));
        }
    }
}

std::string LlmGateway::translate(const std::string& text, Lang source, Lang target,
                                  const TemplateSet& templates, const std::string& model_id,
                                  double temperature, bool* from_cache) {
    if (source == target) {
        throw Error(ErrorCode::invalid_argument,
                    "translate requires source != target; same-language callers must skip translation");
    }
    std::string prompt = render(templates.get(TemplateName::translation),
                                {{"source", std::string(language_name(source))},
                                 {"target", std::string(language_name(target))},
                                 {"text", text}});
    ChatRequest request;
    request.model_id = model_id;
    request.user = prompt;
    request.temperature = temperature;
    auto result = complete(request);
    if (from_cache) *from_cache = result.from_cache;
    return result.response.text;
}

void LlmGateway::set_audit_log(const std::filesystem::path& path) {
    std::lock_guard<std::mutex> lock(audit_mutex_);
    audit_path_ = path;
    if (!path.empty() && !path.parent_path().empty()) {
        std::filesystem::create_directories(path.parent_path());
    }
}

void LlmGateway::audit(const ChatRequest& request, const ChatResponse& response, bool from_cache) {
    std::lock_guard<std::mutex> lock(audit_mutex_);
    if (audit_path_.empty()) return;
    nlohmann::json j;
    j["ts_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                     std::chrono::system_clock::now().time_since_epoch())
                     .count();
    j["model_id"] = request.model_id;
    j["from_cache"] = from_cache;
    if (request.system) j["system"] = *request.system;
    j["user"] = request.user;
    j["response"] = response.text;
    j["finish_state"] = to_string(response.finish_state);
    j["latency_ms"] = response.provider_latency_ms;
    std::ofstream out(audit_path_, std::ios::app | std::ios::binary);
    out << j.dump() << "\n";
}

}  // namespace medfuse
