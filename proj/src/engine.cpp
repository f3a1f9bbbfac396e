#include "medfuse/engine.hpp"

#include <atomic>
#include <cctype>
#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include "medfuse/digest.hpp"
#include "medfuse/errors.hpp"
#include "medfuse/http_provider.hpp"
#include "medfuse/io.hpp"

namespace medfuse {

namespace {

constexpr const char* kVersion = "0.1.0";

std::shared_ptr<Provider> make_provider(const std::string& id, const ProviderSpec& spec,
                                        int timeout_s) {
    if (spec.type == "mock") return std::make_shared<MockProvider>();
    HttpProviderConfig hc;
    hc.base_url = spec.base_url;
    hc.api_key_env = spec.api_key_env;
    hc.model = spec.model.empty() ? id : spec.model;
    hc.reasoning_effort = spec.reasoning_effort;
    hc.timeout_s = timeout_s;
    return std::make_shared<HttpChatProvider>(hc);
}

std::shared_ptr<Embedder> make_embedder(const std::string& id, const ProviderSpec& spec,
                                        int timeout_s) {
    if (spec.type == "mock") return std::make_shared<MockEmbedder>();
    HttpProviderConfig hc;
    hc.base_url = spec.base_url;
    hc.api_key_env = spec.api_key_env;
    hc.model = spec.model.empty() ? id : spec.model;
    hc.timeout_s = timeout_s;
    return std::make_shared<HttpEmbedder>(hc);
}

// Bounded-concurrency map over [0, n); exceptions propagate after join.
void parallel_for(size_t n, int limit, const std::function<void(size_t)>& fn) {
    size_t workers = std::min<size_t>(static_cast<size_t>(std::max(1, limit)), n);
    if (workers <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    std::mutex error_mutex;
    std::exception_ptr first_error;
    for (size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

int64_t now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

}  // namespace

const char* engine_version() { return kVersion; }

Engine::Engine(EngineConfig config) : config_(std::move(config)) {
    templates_ = config_.prompts_dir ? TemplateSet::from_directory(config_.prompts_dir->string())
                                     : TemplateSet::embedded();
    cache_ = std::make_shared<ResponseCache>(config_.run.cache_dir);

    RetryPolicy retry;
    retry.base_delay_ms = config_.retry_base_delay_ms;
    gateway_ = std::make_unique<LlmGateway>(cache_, retry);
    for (const auto& [id, spec] : config_.providers) {
        gateway_->register_provider(id, make_provider(id, spec, config_.run.stage_timeout_s));
    }
    if (!gateway_->has_provider(config_.run.model_id)) {
        throw Error(ErrorCode::config,
                    "model_id '" + config_.run.model_id + "' has no provider entry");
    }
    if (config_.audit_log) gateway_->set_audit_log(*config_.audit_log);

    auto espec = config_.embedders.find(config_.run.embedder_id);
    if (espec == config_.embedders.end()) {
        throw Error(ErrorCode::config,
                    "embedder_id '" + config_.run.embedder_id + "' has no embedder entry");
    }
    embedder_ = make_embedder(espec->first, espec->second, config_.run.stage_timeout_s);

    if (config_.kb_dir) {
        std::shared_ptr<Reranker> reranker;
        if (config_.reranker == "identity") {
            reranker = std::make_shared<IdentityReranker>();
        } else {
            reranker = std::make_shared<EmbeddingReranker>(embedder_);
        }
        kb_ = std::make_unique<KnowledgeStore>(*config_.kb_dir, embedder_, reranker);
    }
    pipeline_ = std::make_unique<Pipeline>(*gateway_, templates_, embedder_, kb_.get(), config_.run);
}

std::unique_ptr<Engine> Engine::from_config_file(const std::filesystem::path& path) {
    return std::make_unique<Engine>(EngineConfig::from_file(path));
}

std::unique_ptr<Engine> Engine::from_config_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::config, "configuration is not valid JSON: " + std::string(e.what()));
    }
    return std::make_unique<Engine>(EngineConfig::from_json(j));
}

RunOutcome Engine::run_dataset(const std::filesystem::path& questions_path,
                               const std::filesystem::path& out_path,
                               const std::optional<std::string>& lang_override,
                               const std::optional<std::string>& ablation_override) {
    auto items = load_questions_jsonl(questions_path.string());
    if (items.empty()) throw Error(ErrorCode::config, "question file has no items: " + questions_path.string());

    RunConfig rc = config_.run;
    if (lang_override) {
        try {
            rc.language = parse_language(*lang_override);
        } catch (const Error& e) {
            throw Error(ErrorCode::config, e.what());
        }
    }
    if (ablation_override) rc.ablation = parse_ablation(*ablation_override);
    if (rc.ablation != AblationMode::no_rag && !kb_) {
        throw Error(ErrorCode::config, "run needs kb_dir unless ablation is no_rag");
    }

    int64_t calls_before = gateway_->stats().provider_invocations.load();
    int64_t started = now_ms();
    Pipeline pipeline(*gateway_, templates_, embedder_, kb_.get(), rc);
    auto results = pipeline.run_benchmark(items);

    std::string body;
    RunOutcome outcome;
    outcome.items = static_cast<int>(results.size());
    for (const auto& result : results) {
        if (result.ok()) {
            body += result.record->to_json().dump();
        } else {
            nlohmann::json j;
            j["question_id"] = result.question_id;
            j["error"] = *result.error;
            body += j.dump();
            ++outcome.failures;
        }
        body += "\n";
    }
    atomic_write_file(out_path, body);
    outcome.provider_calls = gateway_->stats().provider_invocations.load() - calls_before;
    outcome.results_path = out_path;

    EngineConfig effective = config_;
    effective.run = rc;
    nlohmann::json manifest;
    manifest["version"] = kVersion;
    manifest["config_sha256"] = sha256_hex(effective.to_json().dump());
    manifest["templates"] = templates_.digests();
    manifest["questions"] = questions_path.string();
    manifest["items"] = outcome.items;
    manifest["failures"] = outcome.failures;
    manifest["provider_calls"] = outcome.provider_calls;
    manifest["started_ms"] = started;
    manifest["finished_ms"] = now_ms();
    auto manifest_path = out_path;
    manifest_path += ".manifest.json";
    atomic_write_file(manifest_path, manifest.dump(2) + "\n");
    outcome.manifest_path = manifest_path;
    return outcome;
}

PipelineResult Engine::answer(const Question& question) {
    return pipeline_->answer_question(question);
}

IngestReport Engine::kb_ingest(const std::filesystem::path& docs_jsonl) {
    if (!kb_) throw Error(ErrorCode::config, "kb_dir is not configured");
    std::vector<Document> docs;
    for_each_jsonl(docs_jsonl, [&](const nlohmann::json& j, size_t) {
        Document doc;
        doc.id = j.at("id").get<std::string>();
        doc.language = parse_language(j.at("lang").get<std::string>());
        doc.title = j.value("title", "");
        doc.text = j.at("text").get<std::string>();
        docs.push_back(std::move(doc));
    });
    return kb_->ingest(docs);
}

std::map<Lang, int> Engine::kb_stats() const {
    if (!kb_) throw Error(ErrorCode::config, "kb_dir is not configured");
    return kb_->stats();
}

EvalOutcome Engine::evaluate(Task task, const std::filesystem::path& pred_path,
                             const std::filesystem::path& gold_path,
                             const std::optional<std::filesystem::path>& out_path) {
    auto golds = load_questions_jsonl(gold_path.string());
    std::map<std::string, const Question*> by_id;
    for (const auto& q : golds) by_id[q.id] = &q;

    struct PredRow {
        std::string question_id;
        std::optional<AnswerRecord> record;
        std::optional<std::string> error;
    };
    std::vector<PredRow> preds;
    for_each_jsonl(pred_path, [&](const nlohmann::json& j, size_t) {
        PredRow row;
        row.question_id = j.at("question_id").get<std::string>();
        if (j.contains("error")) {
            row.error = j.at("error").get<std::string>();
        } else {
            row.record = AnswerRecord::from_json(j);
        }
        preds.push_back(std::move(row));
    });
    if (preds.empty()) throw Error(ErrorCode::config, "results file has no records: " + pred_path.string());

    if (task == Task::lfqa && !gateway_->has_provider(config_.run.judge_model_id)) {
        throw Error(ErrorCode::config,
                    "judge model '" + config_.run.judge_model_id + "' has no provider entry");
    }

    std::vector<ItemScore> items(preds.size());
    EvalOutcome outcome;
    JudgeOptions judge_opts;
    judge_opts.model_id = config_.run.judge_model_id;
    judge_opts.temperature = config_.run.temperature;
    CompleteFn complete = [&](const ChatRequest& r) { return gateway_->complete(r).response; };

    parallel_for(preds.size(), config_.run.concurrency_limit, [&](size_t i) {
        const auto& pred = preds[i];
        ItemScore item;
        item.question_id = pred.question_id;
        item.task = task;
        auto git = by_id.find(pred.question_id);
        if (git == by_id.end()) {
            item.error = "no gold item for question_id " + pred.question_id;
            item.language = Lang::en;
            if (task != Task::lfqa) item.accuracy = 0.0;
            items[i] = std::move(item);
            return;
        }
        const Question& gold = *git->second;
        item.language = gold.language;
        if (gold.task != task) {
            item.error = "gold item task is " + std::string(to_string(gold.task));
            if (task != Task::lfqa) item.accuracy = 0.0;
            items[i] = std::move(item);
            return;
        }
        if (pred.error) {
            item.error = *pred.error;
            if (task != Task::lfqa) item.accuracy = 0.0;  // errors count as incorrect
            items[i] = std::move(item);
            return;
        }
        const AnswerRecord& record = *pred.record;
        switch (task) {
            case Task::mcqa: {
                try {
                    char choice = extract_choice(record.final_answer, gold.labels());
                    item.accuracy =
                        choice == std::toupper(static_cast<unsigned char>(gold.gold[0])) ? 1.0 : 0.0;
                } catch (const Error& e) {
                    item.error = e.what();
                    item.accuracy = 0.0;
                }
                break;
            }
            case Task::nli: {
                std::vector<std::pair<std::optional<std::string>, std::string>> pair{
                    {record.final_answer, gold.gold}};
                item.accuracy = exact_match_accuracy(pair);
                break;
            }
            case Task::lfqa: {
                const std::string& prediction =
                    record.final_answer.empty() ? record.final_reasoning : record.final_answer;
                try {
                    item.judge = judge_lfqa(gold.text, gold.gold, prediction, templates_, complete,
                                            judge_opts);
                } catch (const Error& e) {
                    item.error = e.what();
                }
                break;
            }
        }
        items[i] = std::move(item);
    });

    for (const auto& item : items) {
        if (item.error) ++outcome.errors;
        ++outcome.scored;
    }
    outcome.report = aggregate(items, task);
    if (outcome.errors > 0) {
        outcome.report.notes.push_back(std::to_string(outcome.errors) + " item(s) carried errors");
    }

    if (out_path) {
        std::string body;
        for (const auto& line : outcome.report.to_jsonl()) body += line + "\n";
        atomic_write_file(*out_path, body);
        auto table_path = *out_path;
        table_path += ".txt";
        atomic_write_file(table_path, outcome.report.render_table());
    }
    return outcome;
}

DistillStats Engine::distill(const std::filesystem::path& train_path,
                             const std::filesystem::path& out_path) {
    auto items = load_questions_jsonl(train_path.string());
    if (items.empty()) throw Error(ErrorCode::config, "training file has no items: " + train_path.string());
    if (config_.run.ablation != AblationMode::no_rag && !kb_) {
        throw Error(ErrorCode::config, "distillation needs kb_dir unless ablation is no_rag");
    }
    std::ostringstream out;
    auto stats = pipeline_->distill_dataset(items, out);
    atomic_write_file(out_path, out.str());
    return stats;
}

size_t Engine::cache_clear() { return cache_->clear(); }

}  // namespace medfuse
