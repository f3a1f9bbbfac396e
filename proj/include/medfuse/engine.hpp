#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "medfuse/config.hpp"
#include "medfuse/evaluation.hpp"
#include "medfuse/gateway.hpp"
#include "medfuse/knowledge.hpp"
#include "medfuse/pipeline.hpp"

namespace medfuse {

const char* engine_version();

struct RunOutcome {
    int items = 0;
    int failures = 0;
    int64_t provider_calls = 0;
    std::filesystem::path results_path;
    std::filesystem::path manifest_path;
};

struct EvalOutcome {
    EvalReport report;
    int scored = 0;
    int errors = 0;
};

// Owns the wired-up subsystems for one configuration: template set, provider
// registry + cache behind the gateway, embedder, knowledge store, pipeline.
class Engine {
public:
    explicit Engine(EngineConfig config);
    static std::unique_ptr<Engine> from_config_file(const std::filesystem::path& path);
    static std::unique_ptr<Engine> from_config_json(const std::string& json_text);

    // Answers a question file and writes line-delimited AnswerRecord JSON
    // plus a <out>.manifest.json (config digest, template digests,
    // timestamps). Optional overrides replace the configured language filter
    // and ablation mode for this run.
    RunOutcome run_dataset(const std::filesystem::path& questions_path,
                           const std::filesystem::path& out_path,
                           const std::optional<std::string>& lang_override,
                           const std::optional<std::string>& ablation_override);

    PipelineResult answer(const Question& question);

    IngestReport kb_ingest(const std::filesystem::path& docs_jsonl);
    std::map<Lang, int> kb_stats() const;

    // Scores a results file against a gold question file; for lfqa this runs
    // the configured judge model. When out_path is set, writes the
    // machine-readable report lines there (and the rendered table next to it
    // as <out>.txt).
    EvalOutcome evaluate(Task task, const std::filesystem::path& pred_path,
                         const std::filesystem::path& gold_path,
                         const std::optional<std::filesystem::path>& out_path);

    DistillStats distill(const std::filesystem::path& train_path,
                         const std::filesystem::path& out_path);

    size_t cache_clear();

    LlmGateway& gateway() { return *gateway_; }
    KnowledgeStore* kb() { return kb_.get(); }
    const TemplateSet& templates() const { return templates_; }
    const EngineConfig& config() const { return config_; }
    Pipeline& pipeline() { return *pipeline_; }

private:
    EngineConfig config_;
    TemplateSet templates_;
    std::shared_ptr<ResponseCache> cache_;
    std::unique_ptr<LlmGateway> gateway_;
    std::shared_ptr<Embedder> embedder_;
    std::unique_ptr<KnowledgeStore> kb_;
    std::unique_ptr<Pipeline> pipeline_;
};

}  // namespace medfuse
