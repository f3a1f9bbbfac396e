#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "medfuse/concept.hpp"
#include "medfuse/evaluation.hpp"
#include "medfuse/fusion.hpp"
#include "medfuse/gateway.hpp"
#include "medfuse/knowledge.hpp"
#include "medfuse/templates.hpp"
#include "medfuse/types.hpp"

namespace medfuse {

enum class AblationMode : uint8_t { full, no_rag, no_english, no_local };

AblationMode parse_ablation(std::string_view name);
const char* to_string(AblationMode mode);

struct RunConfig {
    std::string model_id = "mock";
    std::string embedder_id = "mock";
    std::string judge_model_id = "mock";
    double tau = 0.5;
    int k_initial = 10;
    int k_final = 3;
    double temperature = 0.7;
    AblationMode ablation = AblationMode::full;
    // When set, run_benchmark only accepts items of this language.
    std::optional<Lang> language;
    std::filesystem::path cache_dir;
    int concurrency_limit = 4;
    int max_output_tokens = 1024;
    int max_concepts = 32;
    bool fusion_dedupe = false;
    int stage_timeout_s = 120;

    void validate() const;  // throws Error(config)
};

// Context binding used when retrieval is ablated away; keeps the final
// prompt structurally identical across ablations.
inline constexpr const char* kNoContextSentinel = "No reference context provided.";

struct StageLog {
    std::string stage;
    std::string input_digest;
    std::string output_digest;
    int64_t elapsed_ms = 0;
};

struct AnswerRecord {
    std::string question_id;
    std::string final_reasoning;
    std::string final_answer;
    FusedChain fused_chain;
    std::vector<std::string> retrieved_doc_ids;  // "lang:id", hit order
    AblationMode ablation = AblationMode::full;
    int provider_calls = 0;  // non-cache-hit model invocations for this record

    nlohmann::json to_json() const;
    static AnswerRecord from_json(const nlohmann::json& j);
};

struct PipelineResult {
    std::string question_id;
    std::optional<AnswerRecord> record;
    std::optional<std::string> error;  // "stage: cause" when a stage failed
    std::vector<StageLog> trace;

    bool ok() const { return record.has_value(); }
};

struct DistillStats {
    int emitted = 0;
    int skipped_incorrect = 0;
    int skipped_error = 0;
};

// End-to-end orchestration: translation, parallel reasoning, concept
// extraction, fusion, retrieval, final generation — gated by the ablation
// mode. The two reasoning branches share only the question text.
class Pipeline {
public:
    // kb may be null only when every run uses ablation no_rag.
    Pipeline(LlmGateway& gateway, const TemplateSet& templates,
             std::shared_ptr<Embedder> embedder, KnowledgeStore* kb, RunConfig config);

    // Runs one item through all permitted stages; stage failures surface as
    // "stage: cause" errors rather than partial records. A failed parallel
    // branch in full mode aborts the item.
    PipelineResult answer_question(const Question& question);

    // Processes items with at most concurrency_limit in flight; output order
    // equals input order and per-item failures do not stop the run.
    std::vector<PipelineResult> run_benchmark(const std::vector<Question>& items);

    // Runs each mcqa item and writes {"question","rationale","answer"}
    // records for exactly the items whose extracted choice matches gold.
    DistillStats distill_dataset(const std::vector<Question>& items, std::ostream& out);

    const RunConfig& config() const { return config_; }

private:
    struct BranchOutput {
        ReasoningChain chain;
        ConceptChain concepts;
    };

    ChatResponse complete_counted(const ChatRequest& request, int& calls) const;
    std::pair<std::string, std::string> generate_json_response(
        const std::string& prompt, const std::string& stage, int& calls,
        std::optional<int64_t> seed_hint = std::nullopt) const;
    BranchOutput run_reasoning_branch(const Question& question, const std::string& question_text,
                                      Lang reasoning_lang, ConceptSource source, int& calls,
                                      std::vector<StageLog>& trace) const;

    LlmGateway& gateway_;
    const TemplateSet& templates_;
    std::shared_ptr<Embedder> embedder_;
    KnowledgeStore* kb_;
    RunConfig config_;
};

}  // namespace medfuse
