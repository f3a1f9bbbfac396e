#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "medfuse/language.hpp"

namespace medfuse {

enum class Task : uint8_t { mcqa, nli, lfqa };

Task parse_task(std::string_view name);
std::string_view to_string(Task task);

// One benchmark item. Options are ordered (label, text) pairs with labels
// contiguous from 'A' (at most A..J); empty for lfqa and optionally for nli.
struct Question {
    std::string id;
    Task task = Task::mcqa;
    Lang language = Lang::en;
    std::string text;
    std::vector<std::pair<char, std::string>> options;
    std::string gold;

    // Parses and validates one record. Malformed records are rejected with a
    // reason; nothing is silently repaired.
    static Question from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    // "A: x\nB: y" rendering used by the prompt templates.
    std::string options_block() const;
    std::vector<char> labels() const;
};

// Loads a line-delimited question file; a malformed line throws
// Error(parse) carrying the 1-based line number.
std::vector<Question> load_questions_jsonl(const std::string& path);

// One free-form step-by-step trace in a single language; `answer` is the
// chain's own final choice when the model produced one.
struct ReasoningChain {
    Lang language = Lang::en;
    std::string text;
    std::optional<std::string> answer;
};

}  // namespace medfuse
