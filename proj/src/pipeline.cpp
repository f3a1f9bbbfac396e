#include "medfuse/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <future>
#include <thread>

#include "medfuse/digest.hpp"
#include "medfuse/errors.hpp"

namespace medfuse {

AblationMode parse_ablation(std::string_view name) {
    if (name == "full") return AblationMode::full;
    if (name == "no_rag") return AblationMode::no_rag;
    if (name == "no_english") return AblationMode::no_english;
    if (name == "no_local") return AblationMode::no_local;
    throw Error(ErrorCode::config, "unknown ablation mode: '" + std::string(name) + "'");
}

const char* to_string(AblationMode mode) {
    switch (mode) {
        case AblationMode::full: return "full";
        case AblationMode::no_rag: return "no_rag";
        case AblationMode::no_english: return "no_english";
        case AblationMode::no_local: return "no_local";
    }
    return "full";
}

void RunConfig::validate() const {
    if (model_id.empty()) throw Error(ErrorCode::config, "model_id must be set");
    if (embedder_id.empty()) throw Error(ErrorCode::config, "embedder_id must be set");
    if (tau < -1.0 || tau > 1.0) throw Error(ErrorCode::config, "tau must be in [-1, 1]");
    if (k_final < 1 || k_final > k_initial) throw Error(ErrorCode::config, "need 1 <= k_final <= k_initial");
    if (temperature < 0.0 || temperature > 1.0) throw Error(ErrorCode::config, "temperature must be in [0, 1]");
    if (concurrency_limit < 1) throw Error(ErrorCode::config, "concurrency_limit must be positive");
    if (max_output_tokens < 1) throw Error(ErrorCode::config, "max_output_tokens must be positive");
    if (max_concepts < 1) throw Error(ErrorCode::config, "max_concepts must be positive");
    if (stage_timeout_s < 1) throw Error(ErrorCode::config, "stage_timeout_s must be positive");
}

namespace {

std::string trim_copy(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

// Lenient parse of the {"reasoning","answer"} stage output: direct JSON
// first, then the outermost brace span (models like fencing things).
struct StageJson {
    std::string reasoning;
    std::optional<std::string> answer;
};

std::optional<StageJson> try_parse_stage_json(const std::string& text) {
    auto attempt = [](const std::string& candidate) -> std::optional<StageJson> {
        nlohmann::json j = nlohmann::json::parse(candidate, nullptr, false);
        if (j.is_discarded() || !j.is_object()) return std::nullopt;
        auto r = j.find("reasoning");
        if (r == j.end() || !r->is_string()) return std::nullopt;
        StageJson out;
        out.reasoning = r->get<std::string>();
        if (auto a = j.find("answer"); a != j.end() && a->is_string()) out.answer = a->get<std::string>();
        return out;
    };
    if (auto direct = attempt(trim_copy(text))) return direct;
    auto open = text.find('{');
    auto close = text.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close <= open) return std::nullopt;
    return attempt(text.substr(open, close - open + 1));
}

struct StageTimer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    int64_t elapsed_ms() const {
        return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                                     start)
            .count();
    }
};

StageLog make_log(const std::string& stage, const std::string& input, const std::string& output,
                  const StageTimer& timer) {
    return StageLog{stage, short_digest(input), short_digest(output), timer.elapsed_ms()};
}

std::string render_context(const std::vector<RetrievalHit>& hits) {
    std::string out;
    for (size_t i = 0; i < hits.size(); ++i) {
        if (i) out += "\n\n";
        out += "[" + std::to_string(i + 1) + "] (" + std::string(to_tag(hits[i].document.language)) +
               ":" + hits[i].document.id + ") " + hits[i].document.title + "\n" +
               hits[i].document.text;
    }
    return out;
}

std::string options_binding(const Question& question) {
    std::string block = question.options_block();
    return block.empty() ? "N/A" : block;
}

}  // namespace

nlohmann::json AnswerRecord::to_json() const {
    nlohmann::json j;
    j["question_id"] = question_id;
    j["final_reasoning"] = final_reasoning;
    j["final_answer"] = final_answer;
    j["fused_chain"] = fused_chain.to_json();
    j["retrieved_doc_ids"] = retrieved_doc_ids;
    j["ablation"] = to_string(ablation);
    j["provider_calls"] = provider_calls;
    return j;
}

AnswerRecord AnswerRecord::from_json(const nlohmann::json& j) {
    AnswerRecord record;
    record.question_id = j.at("question_id").get<std::string>();
    record.final_reasoning = j.at("final_reasoning").get<std::string>();
    record.final_answer = j.at("final_answer").get<std::string>();
    record.fused_chain = FusedChain::from_json(j.at("fused_chain"));
    record.retrieved_doc_ids = j.at("retrieved_doc_ids").get<std::vector<std::string>>();
    record.ablation = parse_ablation(j.at("ablation").get<std::string>());
    record.provider_calls = j.at("provider_calls").get<int>();
    return record;
}

Pipeline::Pipeline(LlmGateway& gateway, const TemplateSet& templates,
                   std::shared_ptr<Embedder> embedder, KnowledgeStore* kb, RunConfig config)
    : gateway_(gateway),
      templates_(templates),
      embedder_(std::move(embedder)),
      kb_(kb),
      config_(std::move(config)) {
    config_.validate();
    if (!embedder_) throw Error(ErrorCode::config, "pipeline needs an embedder");
}

ChatResponse Pipeline::complete_counted(const ChatRequest& request, int& calls) const {
    auto result = gateway_.complete(request);
    if (!result.from_cache) ++calls;
    return result.response;
}

std::pair<std::string, std::string> Pipeline::generate_json_response(
    const std::string& prompt, const std::string& stage, int& calls,
    std::optional<int64_t> seed_hint) const {
    ChatRequest request;
    request.model_id = config_.model_id;
    request.user = prompt;
    request.temperature = config_.temperature;
    request.max_output_tokens = config_.max_output_tokens;
    request.seed_hint = seed_hint;

    auto response = complete_counted(request, calls);
    auto parsed = try_parse_stage_json(response.text);
    if (!parsed) {
        ChatRequest retry = request;
        retry.user += "\n\nReturn VALID JSON ONLY.";
        parsed = try_parse_stage_json(complete_counted(retry, calls).text);
    }
    if (!parsed) {
        throw Error(ErrorCode::parse, stage + " output was not the expected JSON object");
    }
    return {parsed->reasoning, parsed->answer.value_or("")};
}

Pipeline::BranchOutput Pipeline::run_reasoning_branch(const Question& question,
                                                      const std::string& question_text,
                                                      Lang reasoning_lang, ConceptSource source,
                                                      int& calls,
                                                      std::vector<StageLog>& trace) const {
    const bool english = source == ConceptSource::english;
    const std::string reason_stage = english ? "reason_en" : "reason_local";

    StageTimer reason_timer;
    std::string prompt = render(templates_.get(TemplateName::reasoning),
                                {{"language", std::string(language_name(reasoning_lang))},
                                 {"question", question_text},
                                 {"options", options_binding(question)}});
    // Distinct seed hints keep the two branches distinct requests even when
    // an English question makes their prompts identical.
    auto [reasoning_text, answer] =
        generate_json_response(prompt, reason_stage, calls, english ? 1 : 2);
    if (reasoning_text.empty()) {
        throw Error(ErrorCode::parse, reason_stage + " produced an empty reasoning trace");
    }
    trace.push_back(make_log(reason_stage, prompt, reasoning_text, reason_timer));

    BranchOutput out;
    out.chain.language = reasoning_lang;
    out.chain.text = reasoning_text;
    if (!answer.empty()) out.chain.answer = answer;

    const std::string extract_stage = english ? "extract_en" : "extract_local";
    StageTimer extract_timer;
    ExtractorOptions opts;
    opts.max_concepts = config_.max_concepts;
    opts.model_id = config_.model_id;
    opts.temperature = config_.temperature;
    opts.max_output_tokens = config_.max_output_tokens;
    out.concepts = extract_concepts(
        out.chain, source, templates_,
        [&](const ChatRequest& r) { return complete_counted(r, calls); }, opts);
    std::string concept_dump;
    for (const auto& concept_item : out.concepts.concepts) concept_dump += concept_item.text + "\n";
    trace.push_back(make_log(extract_stage, out.chain.text, concept_dump, extract_timer));
    return out;
}

PipelineResult Pipeline::answer_question(const Question& question) {
    PipelineResult result;
    result.question_id = question.id;
    std::string current_stage = "setup";
    try {
        if (config_.ablation != AblationMode::no_rag && kb_ == nullptr) {
            throw Error(ErrorCode::config,
                        "knowledge store unavailable; required unless ablation is no_rag");
        }

        const Lang local = question.language;
        const AblationMode mode = config_.ablation;
        const bool need_english = mode != AblationMode::no_english;
        const bool need_local = mode != AblationMode::no_local;
        int calls = 0;

        // (1) English question form; the local chain always sees the original.
        std::string english_text = question.text;
        if (need_english && local != Lang::en) {
            current_stage = "translate";
            StageTimer timer;
            bool from_cache = false;
            english_text = gateway_.translate(question.text, local, Lang::en, templates_,
                                              config_.model_id, config_.temperature, &from_cache);
            if (!from_cache) ++calls;
            if (trim_copy(english_text).empty()) {
                throw Error(ErrorCode::parse, "translation came back empty");
            }
            result.trace.push_back(make_log("translate", question.text, english_text, timer));
        }

        // (2)+(3) independent reasoning + extraction per surviving branch; the
        // branches share nothing but the question.
        std::optional<BranchOutput> english_branch;
        std::optional<BranchOutput> local_branch;
        int english_calls = 0;
        int local_calls = 0;
        std::vector<StageLog> english_trace;
        std::vector<StageLog> local_trace;

        current_stage = "reasoning";
        if (need_english && need_local) {
            auto english_future = std::async(std::launch::async, [&] {
                return run_reasoning_branch(question, english_text, Lang::en,
                                            ConceptSource::english, english_calls, english_trace);
            });
            local_branch = run_reasoning_branch(question, question.text, local,
                                                ConceptSource::local, local_calls, local_trace);
            english_branch = english_future.get();  // a failed branch aborts the item
        } else if (need_english) {
            english_branch = run_reasoning_branch(question, english_text, Lang::en,
                                                  ConceptSource::english, english_calls, english_trace);
        } else {
            local_branch = run_reasoning_branch(question, question.text, local,
                                                ConceptSource::local, local_calls, local_trace);
        }
        calls += english_calls + local_calls;
        for (auto& log : english_trace) result.trace.push_back(std::move(log));
        for (auto& log : local_trace) result.trace.push_back(std::move(log));

        // (4) fusion
        current_stage = "fuse";
        StageTimer fuse_timer;
        FusedChain fused;
        if (need_english && need_local) {
            FusionOptions fusion_opts;
            fusion_opts.dedupe_identical = config_.fusion_dedupe;
            fused = fuse(english_branch->concepts, local_branch->concepts, config_.tau, *embedder_,
                         fusion_opts);
        } else if (need_english) {
            fused = fused_from_single(english_branch->concepts, config_.tau);
        } else {
            fused = fused_from_single(local_branch->concepts, config_.tau);
        }
        {
            std::string fusion_input;
            if (english_branch) fusion_input += english_branch->chain.text;
            if (local_branch) fusion_input += local_branch->chain.text;
            result.trace.push_back(make_log("fuse", fusion_input, fused.render_arrow(), fuse_timer));
        }

        // (5) retrieval, gated by the ablation mode
        std::vector<RetrievalHit> hits;
        std::string context = kNoContextSentinel;
        if (mode != AblationMode::no_rag) {
            current_stage = "retrieve";
            StageTimer timer;
            if (mode == AblationMode::no_english) {
                hits = kb_->retrieve(question.text, local, config_.k_initial, config_.k_final);
            } else if (mode == AblationMode::no_local) {
                hits = kb_->retrieve(english_text, Lang::en, config_.k_initial, config_.k_final);
            } else if (local == Lang::en) {
                hits = kb_->retrieve(question.text, Lang::en, config_.k_initial, config_.k_final);
            } else {
                hits = kb_->dual_query_retrieve(question.text, english_text, local,
                                                config_.k_initial, config_.k_final);
            }
            context = render_context(hits);
            std::string id_list;
            for (const auto& hit : hits) {
                id_list += std::string(to_tag(hit.document.language)) + ":" + hit.document.id + ",";
            }
            result.trace.push_back(make_log("retrieve", question.text, id_list, timer));
        }

        // (6) final synthesis in the local language
        current_stage = "generate";
        StageTimer generate_timer;
        std::string prompt = render(templates_.get(TemplateName::answer_generation),
                                    {{"question", question.text},
                                     {"options", options_binding(question)},
                                     {"concept_chain", fused.render_arrow()},
                                     {"context", context},
                                     {"language", std::string(language_name(local))}});
        auto [final_reasoning, answer] = generate_json_response(prompt, "generate", calls);
        if (trim_copy(answer).empty()) {
            throw Error(ErrorCode::parse, "final generation lacked an answer field");
        }

        AnswerRecord record;
        record.question_id = question.id;
        record.final_reasoning = final_reasoning;
        switch (question.task) {
            case Task::mcqa:
                record.final_answer = std::string(1, extract_choice(answer, question.labels()));
                break;
            case Task::nli:
            case Task::lfqa:
                record.final_answer = trim_copy(answer);
                break;
        }
        record.fused_chain = std::move(fused);
        for (const auto& hit : hits) {
            record.retrieved_doc_ids.push_back(std::string(to_tag(hit.document.language)) + ":" +
                                               hit.document.id);
        }
        record.ablation = mode;
        record.provider_calls = calls;
        result.trace.push_back(make_log("generate", prompt, record.final_reasoning, generate_timer));
        result.record = std::move(record);
    } catch (const std::exception& e) {
        result.error = current_stage + ": " + e.what();
    }
    return result;
}

std::vector<PipelineResult> Pipeline::run_benchmark(const std::vector<Question>& items) {
    if (items.empty()) throw Error(ErrorCode::invalid_argument, "run_benchmark needs at least one item");
    if (config_.language) {
        for (const auto& item : items) {
            if (item.language != *config_.language) {
                throw Error(ErrorCode::config,
                            "item '" + item.id + "' has language " + std::string(to_tag(item.language)) +
                                " but the run is configured for " + std::string(to_tag(*config_.language)));
            }
        }
    }

    std::vector<PipelineResult> results(items.size());
    std::atomic<size_t> next{0};
    size_t workers = std::min<size_t>(static_cast<size_t>(config_.concurrency_limit), items.size());
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                size_t i = next.fetch_add(1);
                if (i >= items.size()) return;
                results[i] = answer_question(items[i]);
            }
        });
    }
    for (auto& t : pool) t.join();
    return results;
}

DistillStats Pipeline::distill_dataset(const std::vector<Question>& items, std::ostream& out) {
    for (const auto& item : items) {
        if (item.task != Task::mcqa) {
            throw Error(ErrorCode::invalid_argument,
                        "distillation requires mcqa items with gold labels; item '" + item.id +
                            "' is " + std::string(to_string(item.task)));
        }
    }
    auto results = run_benchmark(items);

    DistillStats stats;
    for (size_t i = 0; i < items.size(); ++i) {
        if (!results[i].ok()) {
            ++stats.skipped_error;
            continue;
        }
        const auto& record = *results[i].record;
        bool correct = false;
        try {
            char choice = extract_choice(record.final_answer, items[i].labels());
            correct = choice == std::toupper(static_cast<unsigned char>(items[i].gold[0]));
        } catch (const Error&) {
            correct = false;
        }
        if (!correct) {
            ++stats.skipped_incorrect;
            continue;
        }
        nlohmann::json j;
        j["question"] = items[i].text;
        j["rationale"] = record.final_reasoning;
        j["answer"] = record.final_answer;
        out << j.dump() << "\n";
        ++stats.emitted;
    }
    return stats;
}

}  // namespace medfuse
