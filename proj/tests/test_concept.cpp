#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "medfuse/concept.hpp"
#include "medfuse/errors.hpp"
#include "support/test_helpers.hpp"

using namespace medfuse;

TEST_CASE("parse_concept_list: plain list") {
    CHECK(parse_concept_list(R"(["a", "b"])") == std::vector<std::string>{"a", "b"});
}

TEST_CASE("parse_concept_list: surrounding noise and consecutive duplicate collapse") {
    CHECK(parse_concept_list(R"(noise ["x","x","y"] noise)") == std::vector<std::string>{"x", "y"});
    // non-consecutive repeats survive; only adjacent exact duplicates merge
    CHECK(parse_concept_list(R"(["x","y","x"])") == std::vector<std::string>{"x", "y", "x"});
}

TEST_CASE("parse_concept_list: empty list is not a list") {
    CHECK_THROWS_AS(parse_concept_list("[]"), Error);
    try {
        parse_concept_list("no list at all");
        FAIL("expected no_list_found");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::no_list_found);
    }
}

TEST_CASE("parse_concept_list: escapes, trimming, stray quotes, trailing comma") {
    CHECK(parse_concept_list(R"(["he said \"go\"", "a\\b"])") ==
          std::vector<std::string>{"he said \"go\"", "a\\b"});
    CHECK(parse_concept_list("[\" padded \", \"'quoted'\"]") ==
          std::vector<std::string>{"padded", "quoted"});
    CHECK(parse_concept_list(R"(["a", "b",])") == std::vector<std::string>{"a", "b"});
    // empty items dropped
    CHECK(parse_concept_list(R"(["", "a", "  "])") == std::vector<std::string>{"a"});
}

TEST_CASE("parse_concept_list: first well-formed list wins; malformed candidates are skipped") {
    CHECK(parse_concept_list(R"([broken then ["good", "list"] trailing)") ==
          std::vector<std::string>{"good", "list"});
    CHECK(parse_concept_list(R"([1, 2] then ["ok"])") == std::vector<std::string>{"ok"});
}

TEST_CASE("parse_concept_list is idempotent through re-serialization") {
    std::mt19937_64 rng(3);
    auto random_item = [&] {
        static const char* pool[] = {"dry gangrene", "frostbite", "x\"y", "a\\b", "fièvre", "概念"};
        return std::string(pool[rng() % 6]);
    };
    for (int round = 0; round < 500; ++round) {
        std::vector<std::string> items;
        size_t n = 1 + rng() % 6;
        for (size_t i = 0; i < n; ++i) items.push_back(random_item());
        auto parsed = parse_concept_list(format_concept_list(items));
        auto reparsed = parse_concept_list(format_concept_list(parsed));
        CHECK(reparsed == parsed);
    }
}

namespace {

CompleteFn scripted(std::vector<std::string> responses) {
    auto calls = std::make_shared<size_t>(0);
    auto list = std::make_shared<std::vector<std::string>>(std::move(responses));
    return [calls, list](const ChatRequest&) {
        ChatResponse resp;
        resp.text = (*list)[std::min(*calls, list->size() - 1)];
        ++*calls;
        return resp;
    };
}

ReasoningChain trace_of(Lang lang, const std::string& text) {
    return ReasoningChain{lang, text, std::nullopt};
}

}  // namespace

TEST_CASE("extract_concepts: one call, order preserved, language carried through") {
    auto templates = TemplateSet::embedded();
    int calls = 0;
    CompleteFn complete = [&](const ChatRequest& request) {
        ++calls;
        CHECK(request.user.find("transform a reasoning trace") != std::string::npos);
        CHECK(request.user.find("Italian") != std::string::npos);
        CHECK(request.user.find("il paziente presenta congelamento") != std::string::npos);
        ChatResponse resp;
        resp.text = R"(["Congelamento grave", "Gangrena secca", "Cellulite"])";
        return resp;
    };
    auto chain = extract_concepts(trace_of(Lang::it, "il paziente presenta congelamento"),
                                  ConceptSource::local, templates, complete);
    CHECK(calls == 1);
    CHECK(chain.language == Lang::it);
    REQUIRE(chain.concepts.size() == 3);
    CHECK(chain.concepts[0].text == "Congelamento grave");
    CHECK(chain.concepts[1].text == "Gangrena secca");
    CHECK(chain.concepts[2].text == "Cellulite");
    for (size_t i = 0; i < chain.concepts.size(); ++i) {
        CHECK(chain.concepts[i].position_in_source == static_cast<int>(i));
        CHECK(chain.concepts[i].source == ConceptSource::local);
        CHECK(chain.concepts[i].language == Lang::it);
    }
}

TEST_CASE("extract_concepts: reprompt once on prose, then unparseable-output") {
    auto templates = TemplateSet::embedded();

    SUBCASE("second attempt succeeds after the nudge") {
        size_t seen_nudge = 0;
        std::vector<std::string> prompts;
        CompleteFn complete = [&](const ChatRequest& request) {
            prompts.push_back(request.user);
            ChatResponse resp;
            if (request.user.find("Output only the list.") != std::string::npos) {
                ++seen_nudge;
                resp.text = R"(["a"])";
            } else {
                resp.text = "I cannot produce a list, sorry.";
            }
            return resp;
        };
        auto chain = extract_concepts(trace_of(Lang::en, "trace"), ConceptSource::english,
                                      templates, complete);
        CHECK(chain.concepts.size() == 1);
        CHECK(seen_nudge == 1);
        CHECK(prompts.size() == 2);
    }

    SUBCASE("two failures raise unparseable_output") {
        auto complete = scripted({"prose", "more prose"});
        try {
            extract_concepts(trace_of(Lang::en, "trace"), ConceptSource::english, templates,
                             complete);
            FAIL("expected unparseable_output");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::unparseable_output);
        }
    }
}

TEST_CASE("extract_concepts: empty parsed chain is an error, overlong chains truncate") {
    auto templates = TemplateSet::embedded();

    SUBCASE("list of blanks -> empty_chain") {
        auto complete = scripted({R"([""])"});
        try {
            extract_concepts(trace_of(Lang::en, "t"), ConceptSource::english, templates, complete);
            FAIL("expected empty_chain");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::empty_chain);
        }
    }

    SUBCASE("truncation at the cap, no error") {
        std::vector<std::string> many;
        for (int i = 0; i < 50; ++i) many.push_back("c" + std::to_string(i));
        auto complete = scripted({format_concept_list(many)});
        ExtractorOptions opts;
        opts.max_concepts = 32;
        auto chain = extract_concepts(trace_of(Lang::en, "t"), ConceptSource::english, templates,
                                      complete, opts);
        CHECK(chain.concepts.size() == 32);
        CHECK(chain.concepts.back().text == "c31");
    }
}

TEST_CASE("extract_concepts parses the mock provider end to end") {
    auto templates = TemplateSet::embedded();
    MockProvider provider;
    CompleteFn complete = [&](const ChatRequest& request) { return provider.complete(request); };
    auto chain = extract_concepts(
        trace_of(Lang::en, "Severe frostbite progressed into dry gangrene of the forefoot."),
        ConceptSource::english, templates, complete);
    REQUIRE(!chain.concepts.empty());
    CHECK(chain.concepts[0].text == "Severe");  // order follows the trace
}
