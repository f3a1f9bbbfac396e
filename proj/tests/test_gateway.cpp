#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "medfuse/cache.hpp"
#include "medfuse/errors.hpp"
#include "medfuse/gateway.hpp"
#include "support/test_helpers.hpp"

using namespace medfuse;
using namespace medfuse::testing;

namespace {

RetryPolicy fast_retry() {
    RetryPolicy policy;
    policy.base_delay_ms = 1;
    policy.sleeper = [](int) {};
    return policy;
}

ChatRequest mock_request(const std::string& user) {
    ChatRequest r;
    r.model_id = "mock";
    r.user = user;
    return r;
}

}  // namespace

TEST_CASE("mock provider is a pure function of the prompt") {
    MockProvider provider;
    auto a = provider.complete(mock_request("some prompt"));
    auto b = provider.complete(mock_request("some prompt"));
    CHECK(a.text == b.text);
    CHECK(a.provider_latency_ms == 0);
    CHECK(provider.complete(mock_request("another prompt")).text != a.text);
}

TEST_CASE("mock provider emits parseable output per stage") {
    MockProvider provider;
    auto templates = TemplateSet::embedded();

    SUBCASE("reasoning stage yields reasoning/answer JSON with a real option label") {
        auto prompt = render(templates.get(TemplateName::reasoning),
                             {{"language", "Italian"},
                              {"question", "Quale nervo innerva la mucosa labiale?"},
                              {"options", "A: mentoniano\nB: linguale\nC: facciale"}});
        auto j = nlohmann::json::parse(provider.complete(mock_request(prompt)).text);
        CHECK(j.at("reasoning").get<std::string>().find("mucosa") != std::string::npos);
        std::string answer = j.at("answer").get<std::string>();
        CHECK(answer.size() == 1);
        CHECK(answer[0] >= 'A');
        CHECK(answer[0] <= 'C');
    }
    SUBCASE("extraction stage yields a bracketed list over trace words") {
        auto prompt = render(templates.get(TemplateName::concept_extraction),
                             {{"language", "Italian"},
                              {"reasoning_trace", "Congelamento grave seguito da gangrena secca."}});
        auto text = provider.complete(mock_request(prompt)).text;
        CHECK(text.front() == '[');
        CHECK(text.find("Congelamento") != std::string::npos);
    }
    SUBCASE("judge stage yields the five-field schema") {
        ChatRequest r = mock_request(render(templates.get(TemplateName::judge_eval),
                                            {{"question", "q"}, {"gold", "g"}, {"pred", "p"}}));
        r.system = templates.get(TemplateName::judge_system).body;
        auto j = nlohmann::json::parse(provider.complete(r).text);
        CHECK(j.size() == 5);
        for (const char* field : {"overall_score", "correctness", "completeness", "safety", "hallucination"}) {
            int v = j.at(field).get<int>();
            CHECK(v >= 1);
            CHECK(v <= 5);
        }
    }
    SUBCASE("translation stage returns the embedded text") {
        auto prompt = render(templates.get(TemplateName::translation),
                             {{"source", "Italian"}, {"target", "English"}, {"text", "testo clinico"}});
        CHECK(provider.complete(mock_request(prompt)).text == "testo clinico");
    }
}

TEST_CASE("identical requests hit the cache; the provider is invoked once") {
    TempDir dir("gw");
    auto cache = std::make_shared<ResponseCache>(dir.path() / "cache");
    LlmGateway gateway(cache, fast_retry());
    auto flaky = std::make_shared<FlakyProvider>(0);
    gateway.register_provider("mock", flaky);

    auto first = gateway.complete(mock_request("hello"));
    auto second = gateway.complete(mock_request("hello"));
    CHECK_FALSE(first.from_cache);
    CHECK(second.from_cache);
    CHECK(second.response.text == first.response.text);
    CHECK(flaky->invocations.load() == 1);
    CHECK(gateway.stats().provider_invocations.load() == 1);
    CHECK(gateway.stats().cache_hits.load() == 1);

    // At most one cache entry per request key.
    size_t entries = 0;
    for (auto& entry : std::filesystem::directory_iterator(dir.path() / "cache")) {
        (void)entry;
        ++entries;
    }
    CHECK(entries == 1);
}

TEST_CASE("cache keys distinguish temperature, seed and model") {
    TempDir dir("gwkeys");
    auto cache = std::make_shared<ResponseCache>(dir.path() / "cache");
    LlmGateway gateway(cache, fast_retry());
    gateway.register_provider("mock", std::make_shared<MockProvider>());
    gateway.register_provider("mock-b", std::make_shared<MockProvider>());

    auto r = mock_request("same prompt");
    CHECK_FALSE(gateway.complete(r).from_cache);
    auto r_temp = r;
    r_temp.temperature = 0.3;
    CHECK_FALSE(gateway.complete(r_temp).from_cache);
    auto r_seed = r;
    r_seed.seed_hint = 11;
    CHECK_FALSE(gateway.complete(r_seed).from_cache);
    auto r_model = r;
    r_model.model_id = "mock-b";
    CHECK_FALSE(gateway.complete(r_model).from_cache);
    CHECK(gateway.complete(r).from_cache);
}

TEST_CASE("unknown model id is a configuration error") {
    LlmGateway gateway(nullptr, fast_retry());
    try {
        auto r = mock_request("x");
        r.model_id = "nope";
        gateway.complete(r);
        FAIL("expected config error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::config);
        CHECK(std::string(e.what()).find("nope") != std::string::npos);
    }
}

TEST_CASE("request validation") {
    LlmGateway gateway(nullptr, fast_retry());
    gateway.register_provider("mock", std::make_shared<MockProvider>());
    auto r = mock_request("");
    CHECK_THROWS_AS(gateway.complete(r), Error);
    r.user = "ok";
    r.temperature = 1.5;
    CHECK_THROWS_AS(gateway.complete(r), Error);
    r.temperature = 0.7;
    r.max_output_tokens = 0;
    CHECK_THROWS_AS(gateway.complete(r), Error);
}

TEST_CASE("transient provider failures are retried with backoff; permanent failure surfaces") {
    TempDir dir("gwretry");
    auto cache = std::make_shared<ResponseCache>(dir.path() / "cache");

    SUBCASE("two failures then success within three attempts") {
        std::vector<int> delays;
        RetryPolicy policy = fast_retry();
        policy.base_delay_ms = 1000;
        policy.sleeper = [&](int ms) { delays.push_back(ms); };
        LlmGateway gateway(cache, policy);
        auto flaky = std::make_shared<FlakyProvider>(2);
        gateway.register_provider("mock", flaky);

        auto result = gateway.complete(mock_request("retry me"));
        CHECK_FALSE(result.from_cache);
        CHECK(flaky->invocations.load() == 3);
        REQUIRE(delays.size() == 2);
        // 1s then 2s, +/-20% jitter
        CHECK(delays[0] >= 800);
        CHECK(delays[0] <= 1200);
        CHECK(delays[1] >= 1600);
        CHECK(delays[1] <= 2400);
        // exactly one cache entry despite retries
        size_t entries = 0;
        for (auto& entry : std::filesystem::directory_iterator(dir.path() / "cache")) {
            (void)entry;
            ++entries;
        }
        CHECK(entries == 1);
    }

    SUBCASE("exhausted attempts raise provider-unreachable") {
        LlmGateway gateway(nullptr, fast_retry());
        auto flaky = std::make_shared<FlakyProvider>(99);
        gateway.register_provider("mock", flaky);
        try {
            gateway.complete(mock_request("down"));
            FAIL("expected provider error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::provider);
            CHECK(std::string(e.what()).find("3 attempts") != std::string::npos);
        }
        CHECK(flaky->invocations.load() == 3);
    }
}

TEST_CASE("refusal is a finish state, not a transport error") {
    struct RefusingProvider : Provider {
        std::string name() const override { return "refuser"; }
        ChatResponse complete(const ChatRequest&) override {
            return ChatResponse{"", FinishState::refused, 0};
        }
    };
    LlmGateway gateway(nullptr, fast_retry());
    gateway.register_provider("mock", std::make_shared<RefusingProvider>());
    auto result = gateway.complete(mock_request("anything"));
    CHECK(result.response.finish_state == FinishState::refused);
    CHECK(result.response.text.empty());
}

TEST_CASE("translate uses one call and refuses same-language pairs") {
    TempDir dir("gwtr");
    auto cache = std::make_shared<ResponseCache>(dir.path() / "cache");
    LlmGateway gateway(cache, fast_retry());
    gateway.register_provider("mock", std::make_shared<MockProvider>());
    auto templates = TemplateSet::embedded();

    bool from_cache = true;
    auto text = gateway.translate("domanda clinica", Lang::it, Lang::en, templates, "mock", 0.7,
                                  &from_cache);
    CHECK(text == "domanda clinica");  // identity mock
    CHECK_FALSE(from_cache);
    CHECK(gateway.stats().provider_invocations.load() == 1);

    CHECK_THROWS_AS(gateway.translate("x", Lang::en, Lang::en, templates, "mock"), Error);
}

TEST_CASE("audit log mirrors requests line by line") {
    TempDir dir("gwaudit");
    auto cache = std::make_shared<ResponseCache>(dir.path() / "cache");
    LlmGateway gateway(cache, fast_retry());
    gateway.register_provider("mock", std::make_shared<MockProvider>());
    gateway.set_audit_log(dir.file("audit.jsonl"));

    gateway.complete(mock_request("first"));
    gateway.complete(mock_request("first"));  // cache hit is audited too

    auto body = read_text(dir.file("audit.jsonl"));
    size_t lines = 0;
    for (char c : body) lines += c == '\n';
    CHECK(lines == 2);
    auto first_line = body.substr(0, body.find('\n'));
    auto j = nlohmann::json::parse(first_line);
    CHECK(j.at("model_id") == "mock");
    CHECK(j.at("from_cache") == false);
    CHECK(j.at("user") == "first");
}
