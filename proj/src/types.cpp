#include "medfuse/types.hpp"

#include "medfuse/errors.hpp"
#include "medfuse/io.hpp"

namespace medfuse {

Task parse_task(std::string_view name) {
    if (name == "mcqa") return Task::mcqa;
    if (name == "nli") return Task::nli;
    if (name == "lfqa") return Task::lfqa;
    throw Error(ErrorCode::parse, "unknown task: '" + std::string(name) + "'");
}

std::string_view to_string(Task task) {
    switch (task) {
        case Task::mcqa: return "mcqa";
        case Task::nli: return "nli";
        case Task::lfqa: return "lfqa";
    }
    return "mcqa";
}

namespace {

std::string require_string(const nlohmann::json& j, const char* field) {
    auto it = j.find(field);
    if (it == j.end()) throw Error(ErrorCode::parse, std::string("missing required field '") + field + "'");
    if (!it->is_string()) throw Error(ErrorCode::parse, std::string("field '") + field + "' must be a string");
    return it->get<std::string>();
}

}  // namespace

Question Question::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorCode::parse, "question record must be a JSON object");

    Question q;
    q.id = require_string(j, "id");
    if (q.id.empty()) throw Error(ErrorCode::parse, "field 'id' must be non-empty");
    q.task = parse_task(require_string(j, "task"));
    q.language = parse_language(require_string(j, "language"));
    q.text = require_string(j, "text");
    if (q.text.empty()) throw Error(ErrorCode::parse, "field 'text' must be non-empty");
    q.gold = require_string(j, "gold");

    if (auto it = j.find("options"); it != j.end() && !it->is_null()) {
        if (!it->is_object()) throw Error(ErrorCode::parse, "field 'options' must be an object");
        // nlohmann objects iterate in key order, which is exactly label order.
        for (auto& [label, text] : it->items()) {
            if (label.size() != 1 || label[0] < 'A' || label[0] > 'J') {
                throw Error(ErrorCode::parse, "option label '" + label + "' is not one of A..J");
            }
            if (!text.is_string() || text.get<std::string>().empty()) {
                throw Error(ErrorCode::parse, "option '" + label + "' must have non-empty text");
            }
            q.options.emplace_back(label[0], text.get<std::string>());
        }
        for (size_t i = 0; i < q.options.size(); ++i) {
            char expected = static_cast<char>('A' + i);
            if (q.options[i].first != expected) {
                throw Error(ErrorCode::parse, std::string("option labels must be contiguous from 'A'; expected '") +
                                                  expected + "', got '" + q.options[i].first + "'");
            }
        }
    }

    switch (q.task) {
        case Task::mcqa: {
            if (q.options.size() < 2) throw Error(ErrorCode::parse, "mcqa item needs at least 2 options");
            if (q.gold.size() != 1) throw Error(ErrorCode::parse, "mcqa gold must be a single option label");
            bool found = false;
            for (const auto& [label, _] : q.options) found = found || label == q.gold[0];
            if (!found) throw Error(ErrorCode::parse, "mcqa gold '" + q.gold + "' is not an option label");
            break;
        }
        case Task::nli:
            // Label vocabulary is data-defined; only require it to be present.
            if (q.gold.empty()) throw Error(ErrorCode::parse, "nli gold must be non-empty");
            break;
        case Task::lfqa:
            if (!q.options.empty()) throw Error(ErrorCode::parse, "lfqa item must have empty options");
            if (q.gold.empty()) throw Error(ErrorCode::parse, "lfqa gold reference must be non-empty");
            break;
    }
    return q;
}

nlohmann::json Question::to_json() const {
    nlohmann::json j;
    j["id"] = id;
    j["task"] = std::string(to_string(task));
    j["language"] = std::string(to_tag(language));
    j["text"] = text;
    nlohmann::json opts = nlohmann::json::object();
    for (const auto& [label, text_] : options) opts[std::string(1, label)] = text_;
    j["options"] = opts;
    j["gold"] = gold;
    return j;
}

std::string Question::options_block() const {
    std::string out;
    for (const auto& [label, text_] : options) {
        if (!out.empty()) out.push_back('\n');
        out.push_back(label);
        out += ": ";
        out += text_;
    }
    return out;
}

std::vector<char> Question::labels() const {
    std::vector<char> out;
    out.reserve(options.size());
    for (const auto& [label, _] : options) out.push_back(label);
    return out;
}

std::vector<Question> load_questions_jsonl(const std::string& path) {
    std::vector<Question> items;
    for_each_jsonl(path, [&](const nlohmann::json& j, size_t) { items.push_back(Question::from_json(j)); });
    return items;
}

}  // namespace medfuse
