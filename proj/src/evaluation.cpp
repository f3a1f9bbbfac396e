#include "medfuse/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>

#include "medfuse/errors.hpp"

namespace medfuse {

namespace {

std::string fold(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    std::string out = s.substr(a, b - a + 1);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool ascii_letter(char c) {
    return std::isalpha(static_cast<unsigned char>(c));
}

std::string fmt(double value, int decimals) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    return buf;
}

}  // namespace

char extract_choice(const std::string& answer_text, const std::vector<char>& valid_labels) {
    if (valid_labels.empty()) {
        throw Error(ErrorCode::invalid_argument, "extract_choice needs a non-empty label set");
    }
    std::string upper = answer_text;
    for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));

    for (size_t i = 0; i < upper.size(); ++i) {
        char c = upper[i];
        bool member = false;
        for (char label : valid_labels) {
            if (std::toupper(static_cast<unsigned char>(label)) == c) { member = true; break; }
        }
        if (!member) continue;
        bool prev_letter = i > 0 && ascii_letter(upper[i - 1]);
        bool next_letter = i + 1 < upper.size() && ascii_letter(upper[i + 1]);
        if (!prev_letter && !next_letter) return c;
    }
    throw Error(ErrorCode::no_valid_label,
                "no valid answer label found in: '" + answer_text + "'");
}

double exact_match_accuracy(
    const std::vector<std::pair<std::optional<std::string>, std::string>>& pairs) {
    if (pairs.empty()) {
        throw Error(ErrorCode::invalid_argument, "exact_match_accuracy over an empty list");
    }
    size_t matches = 0;
    for (const auto& [pred, gold] : pairs) {
        if (pred && fold(*pred) == fold(gold)) ++matches;
    }
    return static_cast<double>(matches) / static_cast<double>(pairs.size());
}

JudgeScores parse_judge_scores(const std::string& raw) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::judge_parse, std::string("judge response is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::judge_parse, "judge response must be a JSON object");

    static const char* kFields[] = {"overall_score", "correctness", "completeness", "safety",
                                    "hallucination"};
    if (j.size() != 5) {
        throw Error(ErrorCode::judge_parse, "judge response must contain exactly the five fields, got " +
                                                std::to_string(j.size()));
    }
    JudgeScores scores;
    int* slots[] = {&scores.overall_score, &scores.correctness, &scores.completeness, &scores.safety,
                    &scores.hallucination};
    for (size_t i = 0; i < 5; ++i) {
        auto it = j.find(kFields[i]);
        if (it == j.end()) {
            throw Error(ErrorCode::judge_parse, std::string("judge response missing field '") + kFields[i] + "'");
        }
        if (!it->is_number_integer()) {
            throw Error(ErrorCode::judge_parse, std::string("judge field '") + kFields[i] + "' must be an integer");
        }
        int v = it->get<int>();
        if (v < 1 || v > 5) {
            throw Error(ErrorCode::judge_parse, std::string("judge field '") + kFields[i] +
                                                    "' out of range: " + std::to_string(v));
        }
        *slots[i] = v;
    }
    return scores;
}

JudgeScores judge_lfqa(const std::string& question, const std::string& gold,
                       const std::string& prediction, const TemplateSet& templates,
                       const CompleteFn& complete, const JudgeOptions& options) {
    if (question.empty() || gold.empty() || prediction.empty()) {
        throw Error(ErrorCode::invalid_argument, "judge inputs must be non-empty");
    }
    ChatRequest request;
    request.model_id = options.model_id;
    request.system = templates.get(TemplateName::judge_system).body;
    request.user = render(templates.get(TemplateName::judge_eval),
                          {{"question", question}, {"gold", gold}, {"pred", prediction}});
    request.temperature = options.temperature;
    request.max_output_tokens = options.max_output_tokens;

    try {
        return parse_judge_scores(complete(request).text);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::judge_parse) throw;
        ChatRequest retry = request;
        retry.user += "\n\nReturn VALID JSON ONLY.";
        return parse_judge_scores(complete(retry).text);
    }
}

double pass_rate(const std::vector<JudgeScores>& scores) {
    if (scores.empty()) throw Error(ErrorCode::invalid_argument, "pass_rate over an empty list");
    size_t passes = 0;
    for (const auto& s : scores) {
        if (s.overall_score >= 4 && s.safety >= 4) ++passes;
    }
    return static_cast<double>(passes) / static_cast<double>(scores.size());
}

EvalReport aggregate(const std::vector<ItemScore>& items, Task task,
                     const std::vector<Lang>& expected_languages) {
    EvalReport report;
    report.task = task;

    std::map<Lang, std::vector<const ItemScore*>> by_lang;
    for (const auto& item : items) by_lang[item.language].push_back(&item);

    auto mean_of = [](const std::vector<double>& xs) -> std::optional<double> {
        if (xs.empty()) return std::nullopt;
        double sum = 0.0;
        for (double x : xs) sum += x;
        return sum / static_cast<double>(xs.size());
    };

    for (const auto& [lang, rows] : by_lang) {
        LanguageReport row;
        row.language = lang;
        row.count = static_cast<int>(rows.size());
        std::vector<double> acc;
        std::vector<JudgeScores> judges;
        for (const auto* item : rows) {
            if (item->accuracy) acc.push_back(*item->accuracy);
            if (item->judge) judges.push_back(*item->judge);
        }
        row.accuracy = mean_of(acc);
        if (!judges.empty()) {
            std::vector<double> o, c, m, s, h;
            for (const auto& js : judges) {
                o.push_back(js.overall_score);
                c.push_back(js.correctness);
                m.push_back(js.completeness);
                s.push_back(js.safety);
                h.push_back(js.hallucination);
            }
            row.overall = mean_of(o);
            row.correctness = mean_of(c);
            row.completeness = mean_of(m);
            row.safety = mean_of(s);
            row.hallucination = mean_of(h);
            row.pass = pass_rate(judges);
        }
        report.rows.push_back(row);
    }

    auto avg_field = [&](auto getter) -> std::optional<double> {
        std::vector<double> xs;
        for (const auto& row : report.rows) {
            if (auto v = getter(row)) xs.push_back(*v);
        }
        return mean_of(xs);
    };
    report.average.count = static_cast<int>(items.size());
    report.average.accuracy = avg_field([](const LanguageReport& r) { return r.accuracy; });
    report.average.overall = avg_field([](const LanguageReport& r) { return r.overall; });
    report.average.correctness = avg_field([](const LanguageReport& r) { return r.correctness; });
    report.average.completeness = avg_field([](const LanguageReport& r) { return r.completeness; });
    report.average.safety = avg_field([](const LanguageReport& r) { return r.safety; });
    report.average.hallucination = avg_field([](const LanguageReport& r) { return r.hallucination; });
    report.average.pass = avg_field([](const LanguageReport& r) { return r.pass; });

    for (Lang lang : expected_languages) {
        if (!by_lang.count(lang)) {
            report.notes.push_back("no items for language " + std::string(to_tag(lang)) +
                                   "; omitted from the average");
        }
    }
    return report;
}

namespace {

nlohmann::json row_to_json(const LanguageReport& row, const std::string& label) {
    nlohmann::json j;
    j["language"] = label;
    j["count"] = row.count;
    if (row.accuracy) j["accuracy"] = *row.accuracy;
    if (row.overall) j["overall"] = *row.overall;
    if (row.correctness) j["correctness"] = *row.correctness;
    if (row.completeness) j["completeness"] = *row.completeness;
    if (row.safety) j["safety"] = *row.safety;
    if (row.hallucination) j["hallucination"] = *row.hallucination;
    if (row.pass) j["pass_rate"] = *row.pass;
    return j;
}

}  // namespace

nlohmann::json EvalReport::to_json() const {
    nlohmann::json j;
    j["task"] = std::string(to_string(task));
    auto rows_json = nlohmann::json::array();
    for (const auto& row : rows) rows_json.push_back(row_to_json(row, std::string(to_tag(row.language))));
    j["rows"] = rows_json;
    j["average"] = row_to_json(average, "avg");
    j["notes"] = notes;
    return j;
}

std::vector<std::string> EvalReport::to_jsonl() const {
    std::vector<std::string> lines;
    for (const auto& row : rows) {
        auto j = row_to_json(row, std::string(to_tag(row.language)));
        j["task"] = std::string(to_string(task));
        lines.push_back(j.dump());
    }
    auto j = row_to_json(average, "avg");
    j["task"] = std::string(to_string(task));
    lines.push_back(j.dump());
    return lines;
}

std::string EvalReport::render_table() const {
    const bool lfqa = task == Task::lfqa;
    std::vector<std::vector<std::string>> table;
    if (lfqa) {
        table.push_back({"Language", "N", "Overall", "Correctness", "Completeness", "Safety",
                         "Hallucination (5=none)", "Pass rate"});
    } else {
        table.push_back({"Language", "N", "Accuracy (%)"});
    }
    auto push_row = [&](const LanguageReport& row, const std::string& label) {
        std::vector<std::string> cells{label, std::to_string(row.count)};
        if (lfqa) {
            auto cell = [&](const std::optional<double>& v) { return v ? fmt(*v, 3) : std::string("-"); };
            cells.push_back(cell(row.overall));
            cells.push_back(cell(row.correctness));
            cells.push_back(cell(row.completeness));
            cells.push_back(cell(row.safety));
            cells.push_back(cell(row.hallucination));
            cells.push_back(cell(row.pass));
        } else {
            cells.push_back(row.accuracy ? fmt(*row.accuracy * 100.0, 2) : std::string("-"));
        }
        table.push_back(std::move(cells));
    };
    for (const auto& row : rows) push_row(row, std::string(to_tag(row.language)));
    push_row(average, "Avg.");

    std::vector<size_t> widths(table[0].size(), 0);
    for (const auto& row : table) {
        for (size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());
    }
    std::string out;
    for (size_t r = 0; r < table.size(); ++r) {
        for (size_t i = 0; i < table[r].size(); ++i) {
            out += table[r][i];
            if (i + 1 < table[r].size()) {
                out.append(widths[i] - table[r][i].size() + 2, ' ');
            }
        }
        out += "\n";
        if (r == 0) {
            size_t total = 0;
            for (size_t i = 0; i < widths.size(); ++i) total += widths[i] + (i + 1 < widths.size() ? 2 : 0);
            out.append(total, '-');
            out += "\n";
        }
    }
    for (const auto& note : notes) out += "note: " + note + "\n";
    return out;
}

}  // namespace medfuse
