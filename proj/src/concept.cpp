#include "medfuse/concept.hpp"

#include "medfuse/errors.hpp"

namespace medfuse {

const char* to_string(ConceptSource source) {
    return source == ConceptSource::english ? "english" : "local";
}

namespace {

std::string trim_copy(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

// Trim and strip matched surrounding ASCII quote pairs.
std::string clean_item(std::string s) {
    s = trim_copy(s);
    while (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                             (s.front() == '\'' && s.back() == '\''))) {
        s = trim_copy(s.substr(1, s.size() - 2));
    }
    return s;
}

// Parses one double-quoted string starting at s[i] (which must be '"').
// Returns false when unterminated. Standard escapes are unescaped; an
// unknown escape keeps both characters.
bool parse_quoted(const std::string& s, size_t& i, std::string& out) {
    out.clear();
    ++i;  // opening quote
    while (i < s.size()) {
        char c = s[i];
        if (c == '"') {
            ++i;
            return true;
        }
        if (c == '\\' && i + 1 < s.size()) {
            char e = s[i + 1];
            switch (e) {
                case '"': out.push_back('"'); break;
                case '\\': out.push_back('\\'); break;
                case '/': out.push_back('/'); break;
                case 'n': out.push_back('\n'); break;
                case 't': out.push_back('\t'); break;
                case 'r': out.push_back('\r'); break;
                default:
                    out.push_back('\\');
                    out.push_back(e);
                    break;
            }
            i += 2;
            continue;
        }
        out.push_back(c);
        ++i;
    }
    return false;
}

void skip_ws(const std::string& s, size_t& i) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r' || s[i] == '\n')) ++i;
}

// Attempts `[ "a", "b" ]` at position start; trailing commas tolerated.
// Succeeds only with at least one string item.
bool try_parse_list(const std::string& s, size_t start, std::vector<std::string>& items) {
    items.clear();
    size_t i = start + 1;
    for (;;) {
        skip_ws(s, i);
        if (i >= s.size()) return false;
        if (s[i] == ']') return !items.empty();
        if (s[i] != '"') return false;
        std::string item;
        if (!parse_quoted(s, i, item)) return false;
        items.push_back(std::move(item));
        skip_ws(s, i);
        if (i >= s.size()) return false;
        if (s[i] == ',') {
            ++i;
            continue;
        }
        if (s[i] == ']') return true;
        return false;
    }
}

}  // namespace

std::vector<std::string> parse_concept_list(const std::string& raw) {
    for (size_t pos = raw.find('['); pos != std::string::npos; pos = raw.find('[', pos + 1)) {
        std::vector<std::string> items;
        if (!try_parse_list(raw, pos, items)) continue;

        std::vector<std::string> out;
        for (auto& item : items) {
            std::string cleaned = clean_item(std::move(item));
            if (cleaned.empty()) continue;
            if (!out.empty() && out.back() == cleaned) continue;  // consecutive exact duplicates
            out.push_back(std::move(cleaned));
        }
        return out;
    }
    throw Error(ErrorCode::no_list_found, "no bracketed concept list found in model output");
}

std::string format_concept_list(const std::vector<std::string>& items) {
    std::string out = "[";
    for (size_t i = 0; i < items.size(); ++i) {
        if (i) out += ", ";
        out.push_back('"');
        for (char c : items[i]) {
            if (c == '"' || c == '\\') out.push_back('\\');
            out.push_back(c);
        }
        out.push_back('"');
    }
    out += "]";
    return out;
}

ConceptChain extract_concepts(const ReasoningChain& trace, ConceptSource source,
                              const TemplateSet& templates, const CompleteFn& complete,
                              const ExtractorOptions& options) {
    if (trace.text.empty()) {
        throw Error(ErrorCode::invalid_argument, "cannot extract concepts from an empty trace");
    }

    std::string prompt = render(templates.get(TemplateName::concept_extraction),
                                {{"language", std::string(language_name(trace.language))},
                                 {"reasoning_trace", trace.text}});

    ChatRequest request;
    request.model_id = options.model_id;
    request.user = prompt;
    request.temperature = options.temperature;
    request.max_output_tokens = options.max_output_tokens;

    std::vector<std::string> items;
    try {
        items = parse_concept_list(complete(request).text);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::no_list_found) throw;
        // One automatic reprompt, then give up.
        ChatRequest retry = request;
        retry.user += "\n\nOutput only the list.";
        try {
            items = parse_concept_list(complete(retry).text);
        } catch (const Error& e2) {
            if (e2.code() != ErrorCode::no_list_found) throw;
            throw Error(ErrorCode::unparseable_output,
                        "extraction output had no parseable concept list after one reprompt");
        }
    }

    if (items.empty()) {
        throw Error(ErrorCode::empty_chain, "extraction produced an empty concept chain");
    }
    if (static_cast<int>(items.size()) > options.max_concepts) {
        items.resize(static_cast<size_t>(options.max_concepts));
    }

    ConceptChain chain;
    chain.language = trace.language;
    chain.concepts.reserve(items.size());
    for (size_t i = 0; i < items.size(); ++i) {
        chain.concepts.push_back(Concept{items[i], trace.language, source, static_cast<int>(i)});
    }
    return chain;
}

}  // namespace medfuse
