#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "medfuse/errors.hpp"
#include "medfuse/pipeline.hpp"
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

// Hand-wired pipeline over a recording mock provider and a synthetic
// two-partition knowledge base.
struct Harness {
    TempDir dir{"pipe"};
    std::shared_ptr<ResponseCache> cache;
    std::shared_ptr<RecordingProvider> provider;
    std::unique_ptr<LlmGateway> gateway;
    std::shared_ptr<MockEmbedder> embedder;
    TemplateSet templates = TemplateSet::embedded();
    std::unique_ptr<KnowledgeStore> kb;

    explicit Harness(std::shared_ptr<Provider> custom_provider = nullptr, bool with_kb = true) {
        cache = std::make_shared<ResponseCache>(dir.path() / "cache");
        gateway = std::make_unique<LlmGateway>(cache, fast_retry());
        provider = std::make_shared<RecordingProvider>();
        gateway->register_provider("mock", custom_provider ? custom_provider
                                                           : std::static_pointer_cast<Provider>(provider));
        embedder = std::make_shared<MockEmbedder>();
        if (with_kb) {
            kb = std::make_unique<KnowledgeStore>(dir.path() / "kb", embedder,
                                                  std::make_shared<IdentityReranker>());
            kb->ingest(synthetic_documents(Lang::en, 6, "english-guide"));
            kb->ingest(synthetic_documents(Lang::it, 6, "guida-italiana"));
        }
    }

    RunConfig config(AblationMode mode = AblationMode::full) const {
        RunConfig rc;
        rc.model_id = "mock";
        rc.embedder_id = "mock";
        rc.cache_dir = dir.path() / "cache";
        rc.ablation = mode;
        rc.concurrency_limit = 4;
        return rc;
    }

    Pipeline pipeline(AblationMode mode = AblationMode::full) {
        return Pipeline(*gateway, templates, embedder, kb.get(), config(mode));
    }
};

Question italian_question(const std::string& id = "it-1") {
    return make_mcqa(id, Lang::it,
                     "Paziente con congelamento grave del piede e gangrena secca. Quale gestione?",
                     {"osservazione", "antibiotici", "sbrigliamento", "amputazione"}, 'C');
}

std::vector<std::string> stage_names(const PipelineResult& result) {
    std::vector<std::string> out;
    for (const auto& log : result.trace) out.push_back(log.stage);
    return out;
}

}  // namespace

TEST_CASE("full mode runs every stage in order for a non-English question") {
    Harness h;
    auto pipeline = h.pipeline();
    auto result = pipeline.answer_question(italian_question());

    REQUIRE(result.ok());
    CHECK(stage_names(result) ==
          std::vector<std::string>{"translate", "reason_en", "extract_en", "reason_local",
                                   "extract_local", "fuse", "retrieve", "generate"});

    const auto& record = *result.record;
    CHECK(record.question_id == "it-1");
    CHECK(record.final_answer.size() == 1);
    CHECK(record.final_answer[0] >= 'A');
    CHECK(record.final_answer[0] <= 'D');
    CHECK_FALSE(record.final_reasoning.empty());
    CHECK(record.ablation == AblationMode::full);
    CHECK(record.provider_calls > 0);
    CHECK(record.provider_calls == h.provider->invocations.load());

    // dual retrieval: en hits first, then local, at most six
    REQUIRE(record.retrieved_doc_ids.size() == 6);
    for (size_t i = 0; i < 3; ++i) CHECK(record.retrieved_doc_ids[i].rfind("en:", 0) == 0);
    for (size_t i = 3; i < 6; ++i) CHECK(record.retrieved_doc_ids[i].rfind("it:", 0) == 0);

    // the fused chain mixes both provenances under the mock embedder
    bool has_english = false, has_local = false;
    for (const auto& entry : record.fused_chain.entries) {
        has_english = has_english || entry.item.source == ConceptSource::english;
        has_local = has_local || entry.item.source == ConceptSource::local;
    }
    CHECK(has_english);
    CHECK(has_local);
}

TEST_CASE("English questions skip translation but still run both chains") {
    Harness h;
    auto pipeline = h.pipeline();
    auto q = make_mcqa("en-1", Lang::en, "Patient with severe frostbite and dry gangrene. Management?",
                       {"observe", "antibiotics", "debridement", "amputation"}, 'C');
    auto result = pipeline.answer_question(q);

    REQUIRE(result.ok());
    CHECK(stage_names(result) ==
          std::vector<std::string>{"reason_en", "extract_en", "reason_local", "extract_local",
                                   "fuse", "retrieve", "generate"});

    // both reasoning calls really reached the provider (distinct seed hints)
    int reasoning_prompts = 0;
    for (const auto& prompt : h.provider->snapshot()) {
        if (prompt.find("assist healthcare professionals") != std::string::npos) ++reasoning_prompts;
    }
    CHECK(reasoning_prompts == 2);
    // en-partition retrieval only
    CHECK(h.kb->retrieve_count(Lang::en) == 1);
    CHECK(h.kb->retrieve_count(Lang::it) == 0);
}

TEST_CASE("independence: reasoning prompts are built before any model response exists") {
    Harness h;
    auto pipeline = h.pipeline();
    pipeline.answer_question(italian_question());
    for (const auto& prompt : h.provider->snapshot()) {
        if (prompt.find("assist healthcare professionals") != std::string::npos) {
            // mock responses all start with "Step 1:"; a reasoning prompt that
            // contained the other chain's response would carry it
            CHECK(prompt.find("Step 1:") == std::string::npos);
        }
    }
}

TEST_CASE("ablation soundness: forbidden call classes are absent") {
    SUBCASE("no_english: no English reasoning, no translation, no en retrieval") {
        Harness h;
        auto pipeline = h.pipeline(AblationMode::no_english);
        auto result = pipeline.answer_question(italian_question());
        REQUIRE(result.ok());
        CHECK(stage_names(result) ==
              std::vector<std::string>{"reason_local", "extract_local", "fuse", "retrieve", "generate"});
        for (const auto& prompt : h.provider->snapshot()) {
            CHECK(prompt.find("using the English language") == std::string::npos);
            CHECK(prompt.find("Output only the translation.") == std::string::npos);
        }
        CHECK(h.kb->retrieve_count(Lang::en) == 0);
        CHECK(h.kb->retrieve_count(Lang::it) == 1);
        for (const auto& entry : result.record->fused_chain.entries) {
            CHECK(entry.item.source == ConceptSource::local);
        }
    }
    SUBCASE("no_local: no local reasoning, no local retrieval") {
        Harness h;
        auto pipeline = h.pipeline(AblationMode::no_local);
        auto result = pipeline.answer_question(italian_question());
        REQUIRE(result.ok());
        CHECK(stage_names(result) ==
              std::vector<std::string>{"translate", "reason_en", "extract_en", "fuse", "retrieve",
                                       "generate"});
        int italian_reasoning = 0;
        for (const auto& prompt : h.provider->snapshot()) {
            if (prompt.find("assist healthcare professionals") != std::string::npos &&
                prompt.find("using the Italian language") != std::string::npos) {
                ++italian_reasoning;
            }
        }
        CHECK(italian_reasoning == 0);
        CHECK(h.kb->retrieve_count(Lang::it) == 0);
        CHECK(h.kb->retrieve_count(Lang::en) == 1);
    }
    SUBCASE("no_rag: zero retrieval calls and the sentinel context binding") {
        Harness h;
        auto pipeline = h.pipeline(AblationMode::no_rag);
        auto result = pipeline.answer_question(italian_question());
        REQUIRE(result.ok());
        auto stages = stage_names(result);
        for (const auto& stage : stages) CHECK(stage != "retrieve");
        CHECK(h.kb->retrieve_count(Lang::en) == 0);
        CHECK(h.kb->retrieve_count(Lang::it) == 0);
        CHECK(result.record->retrieved_doc_ids.empty());

        bool saw_sentinel = false;
        for (const auto& prompt : h.provider->snapshot()) {
            if (prompt.find("final clinical answer") != std::string::npos) {
                saw_sentinel = prompt.find(kNoContextSentinel) != std::string::npos;
            }
        }
        CHECK(saw_sentinel);
    }
}

TEST_CASE("no_rag works without any knowledge store; other modes require one") {
    Harness h(nullptr, /*with_kb=*/false);
    auto no_rag = Pipeline(*h.gateway, h.templates, h.embedder, nullptr, h.config(AblationMode::no_rag));
    CHECK(no_rag.answer_question(italian_question()).ok());

    auto full = Pipeline(*h.gateway, h.templates, h.embedder, nullptr, h.config(AblationMode::full));
    auto result = full.answer_question(italian_question());
    REQUIRE_FALSE(result.ok());
    CHECK(result.error->find("knowledge store unavailable") != std::string::npos);
}

TEST_CASE("stage purity: warm cache reruns make zero provider calls and identical records") {
    Harness h;
    auto pipeline = h.pipeline();
    auto q = italian_question();

    auto first = pipeline.answer_question(q);
    REQUIRE(first.ok());
    int cold_invocations = h.provider->invocations.load();
    CHECK(first.record->provider_calls == cold_invocations);

    auto second = pipeline.answer_question(q);
    REQUIRE(second.ok());
    CHECK(h.provider->invocations.load() == cold_invocations);  // zero new provider calls
    CHECK(second.record->provider_calls == 0);

    // identical content; provider_calls is the only state-dependent field
    auto a = first.record->to_json();
    auto b = second.record->to_json();
    a.erase("provider_calls");
    b.erase("provider_calls");
    CHECK(a.dump() == b.dump());
}

TEST_CASE("run_benchmark preserves input order under concurrency and isolates failures") {
    // A provider that permanently rejects one marked question.
    struct MarkedFailureProvider : Provider {
        std::string name() const override { return "mock"; }
        ChatResponse complete(const ChatRequest& request) override {
            if (request.user.find("POISON") != std::string::npos) {
                throw Error(ErrorCode::config, "scripted permanent failure");
            }
            return inner.complete(request);
        }
        MockProvider inner;
    };

    Harness h(std::make_shared<MarkedFailureProvider>());
    auto pipeline = h.pipeline();
    auto items = synthetic_mcqa_set(10, Lang::it);
    items[6].text += " POISON";

    auto results = pipeline.run_benchmark(items);
    REQUIRE(results.size() == 10);
    for (size_t i = 0; i < results.size(); ++i) {
        CHECK(results[i].question_id == items[i].id);  // order preserved
        if (i == 6) {
            CHECK_FALSE(results[i].ok());
            CHECK(results[i].error->find("scripted permanent failure") != std::string::npos);
        } else {
            CHECK(results[i].ok());
        }
    }
}

TEST_CASE("run_benchmark validates the configured language filter up front") {
    Harness h;
    auto rc = h.config();
    rc.language = Lang::sw;
    Pipeline pipeline(*h.gateway, h.templates, h.embedder, h.kb.get(), rc);
    try {
        pipeline.run_benchmark(synthetic_mcqa_set(3, Lang::it));
        FAIL("expected config error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::config);
    }
    CHECK_THROWS_AS(pipeline.run_benchmark({}), Error);
}

TEST_CASE("distill keeps exactly the correctly answered items, rationale verbatim") {
    // Provider always answers "A"; golds make 3 of 4 items correct.
    Harness h(std::make_shared<FixedAnswerProvider>("A"));
    auto pipeline = h.pipeline(AblationMode::no_rag);

    std::vector<Question> items;
    for (int i = 0; i < 4; ++i) {
        items.push_back(make_mcqa("d" + std::to_string(i), Lang::it,
                                  "Domanda numero " + std::to_string(i) + " su gestione clinica?",
                                  {"alfa", "beta", "gamma"}, i == 2 ? 'B' : 'A'));
    }

    std::ostringstream out;
    auto stats = pipeline.distill_dataset(items, out);
    CHECK(stats.emitted == 3);
    CHECK(stats.skipped_incorrect == 1);
    CHECK(stats.skipped_error == 0);

    std::vector<nlohmann::json> records;
    std::istringstream lines(out.str());
    std::string line;
    while (std::getline(lines, line)) records.push_back(nlohmann::json::parse(line));
    REQUIRE(records.size() == 3);
    for (const auto& record : records) {
        // exactly the three fields, nothing else
        CHECK(record.size() == 3);
        CHECK(record.contains("question"));
        CHECK(record.contains("rationale"));
        CHECK(record.contains("answer"));
        CHECK(record.at("answer") == "A");
    }

    // rationale is the final reasoning verbatim: re-answer (warm cache) and compare
    auto replay = pipeline.answer_question(items[0]);
    REQUIRE(replay.ok());
    CHECK(records[0].at("rationale") == replay.record->final_reasoning);
    CHECK(records[0].at("question") == items[0].text);
}

TEST_CASE("distill with zero correct answers emits nothing and counts skips") {
    Harness h(std::make_shared<FixedAnswerProvider>("C"));
    auto pipeline = h.pipeline(AblationMode::no_rag);
    auto items = std::vector<Question>{
        make_mcqa("x1", Lang::en, "Question one about therapy choices?", {"a", "b", "c"}, 'A'),
        make_mcqa("x2", Lang::en, "Question two about imaging choices?", {"a", "b", "c"}, 'B'),
    };
    std::ostringstream out;
    auto stats = pipeline.distill_dataset(items, out);
    CHECK(stats.emitted == 0);
    CHECK(stats.skipped_incorrect == 2);
    CHECK(out.str().empty());
}

TEST_CASE("distill rejects non-mcqa items") {
    Harness h;
    auto pipeline = h.pipeline(AblationMode::no_rag);
    Question lfqa;
    lfqa.id = "l1";
    lfqa.task = Task::lfqa;
    lfqa.language = Lang::en;
    lfqa.text = "Describe the management of frostbite.";
    lfqa.gold = "reference";
    std::ostringstream out;
    CHECK_THROWS_AS(pipeline.distill_dataset({lfqa}, out), Error);
}

TEST_CASE("answer records serialize losslessly") {
    Harness h;
    auto pipeline = h.pipeline();
    auto result = pipeline.answer_question(italian_question());
    REQUIRE(result.ok());
    auto j = result.record->to_json();
    auto back = AnswerRecord::from_json(j);
    CHECK(back.to_json().dump() == j.dump());
}
