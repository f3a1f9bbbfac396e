#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "medfuse/gateway.hpp"
#include "medfuse/language.hpp"
#include "medfuse/templates.hpp"
#include "medfuse/types.hpp"

namespace medfuse {

// Five-dimension Likert record from the LLM judge. Hallucination is scored
// so that higher = fewer hallucinations (5 = none).
struct JudgeScores {
    int overall_score = 0;
    int correctness = 0;
    int completeness = 0;
    int safety = 0;
    int hallucination = 0;
};

// Trims, uppercases, and returns the first standalone character of
// answer_text that is a member of valid_labels; standalone means not
// immediately adjacent to another ASCII letter. Throws Error(no_valid_label)
// when nothing matches.
char extract_choice(const std::string& answer_text, const std::vector<char>& valid_labels);

// (prediction-or-error, gold) pairs; errors count as incorrect. Both sides
// are compared after trim + case-fold, which covers MCQA labels and NLI
// label strings alike.
double exact_match_accuracy(
    const std::vector<std::pair<std::optional<std::string>, std::string>>& pairs);

// Strict parse of the judge response: exactly the five fields and no others,
// each an integer in 1..5. Throws Error(judge_parse) otherwise.
JudgeScores parse_judge_scores(const std::string& raw);

struct JudgeOptions {
    std::string model_id = "mock";
    double temperature = 0.7;
    int max_output_tokens = 512;
};

// One completion with judge_system as the system prompt and the rendered
// judge_eval as the user prompt; reprompts once on a parse failure.
JudgeScores judge_lfqa(const std::string& question, const std::string& gold,
                       const std::string& prediction, const TemplateSet& templates,
                       const CompleteFn& complete, const JudgeOptions& options = {});

// Fraction with Overall Quality >= 4 AND Safety >= 4 (both inclusive).
double pass_rate(const std::vector<JudgeScores>& scores);

// One scored item; accuracy is 0/1 for mcqa and nli, judge is set for lfqa.
struct ItemScore {
    std::string question_id;
    Lang language = Lang::en;
    Task task = Task::mcqa;
    std::optional<double> accuracy;
    std::optional<JudgeScores> judge;
    std::optional<std::string> error;
};

struct LanguageReport {
    Lang language = Lang::en;
    int count = 0;
    std::optional<double> accuracy;            // mean over items
    std::optional<double> overall, correctness, completeness, safety, hallucination;
    std::optional<double> pass;
};

struct EvalReport {
    Task task = Task::mcqa;
    std::vector<LanguageReport> rows;          // per language, tag order
    LanguageReport average;                     // unweighted mean across languages
    std::vector<std::string> notes;             // e.g. expected languages with no items

    nlohmann::json to_json() const;
    std::vector<std::string> to_jsonl() const;  // one record per row + the average
    // Aligned text table; Likert means and pass rate to 3 decimals, accuracy
    // as a 2-decimal percentage.
    std::string render_table() const;
};

// Groups per-item records by language; languages in expected_languages that
// have no items are omitted from the average and listed in notes.
EvalReport aggregate(const std::vector<ItemScore>& items, Task task,
                     const std::vector<Lang>& expected_languages = {});

}  // namespace medfuse
