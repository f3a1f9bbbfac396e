#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "medfuse/cache.hpp"
#include "medfuse/chat.hpp"
#include "medfuse/language.hpp"
#include "medfuse/templates.hpp"

namespace medfuse {

class Provider {
public:
    virtual ~Provider() = default;
    virtual std::string name() const = 0;
    // Throws Error(provider) on transport failure (retryable). A model
    // refusal is not an error: it comes back as finish_state=refused.
    virtual ChatResponse complete(const ChatRequest& request) = 0;
};

// Deterministic offline provider. Responses are a pure function of the
// prompt: the stage is inferred from each template's fixed header text and
// the content is derived from the prompt hash, so every stage parser can be
// exercised end to end and equal prompts yield equal responses across
// processes.
class MockProvider : public Provider {
public:
    std::string name() const override { return "mock"; }
    ChatResponse complete(const ChatRequest& request) override;
};

struct RetryPolicy {
    int max_attempts = 3;
    int base_delay_ms = 1000;   // 1s/2s/4s doubling
    double jitter_frac = 0.2;   // +/-20%
    // Test hook; defaults to a real sleep.
    std::function<void(int delay_ms)> sleeper;
};

struct GatewayStats {
    std::atomic<int64_t> provider_invocations{0};  // completions not served from cache
    std::atomic<int64_t> provider_attempts{0};     // including retried failures
    std::atomic<int64_t> cache_hits{0};
};

struct CompletionResult {
    ChatResponse response;
    bool from_cache = false;
};

// Uniform chat-completion access: provider registry keyed by model id,
// retry with exponential backoff, response cache, optional audit log.
class LlmGateway {
public:
    explicit LlmGateway(std::shared_ptr<ResponseCache> cache = nullptr,
                        RetryPolicy retry = {});

    void register_provider(const std::string& model_id, std::shared_ptr<Provider> provider);
    bool has_provider(const std::string& model_id) const;

    // Validates the request, serves from cache when possible, otherwise calls
    // the provider with retries and records the response under the request
    // key. Unknown model_id throws Error(config).
    CompletionResult complete(const ChatRequest& request);

    // One complete() call with the translation template. Callers must skip
    // translation entirely when source == target; passing equal languages
    // here is an Error(invalid_argument). from_cache, when given, reports
    // whether the call was served from the cache.
    std::string translate(const std::string& text, Lang source, Lang target,
                          const TemplateSet& templates, const std::string& model_id,
                          double temperature = 0.7, bool* from_cache = nullptr);

    void set_audit_log(const std::filesystem::path& path);
    const GatewayStats& stats() const { return stats_; }

private:
    ChatResponse complete_with_retry(Provider& provider, const ChatRequest& request);
    void audit(const ChatRequest& request, const ChatResponse& response, bool from_cache);

    std::shared_ptr<ResponseCache> cache_;
    RetryPolicy retry_;
    std::map<std::string, std::shared_ptr<Provider>> providers_;
    mutable std::mutex providers_mutex_;
    std::filesystem::path audit_path_;
    std::mutex audit_mutex_;
    GatewayStats stats_;
};

// Signature used by the orchestration layers so concept extraction, judging
// and the pipeline stages can be unit-tested with scripted completions.
using CompleteFn = std::function<ChatResponse(const ChatRequest&)>;

}  // namespace medfuse
