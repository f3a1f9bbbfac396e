#include "medfuse/templates.hpp"

#include <algorithm>
#include <cctype>

#include "medfuse/digest.hpp"
#include "medfuse/errors.hpp"
#include "medfuse/io.hpp"

namespace medfuse {

namespace {

bool is_ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Walks the body and reports each `{identifier}` token. Doubled braces are
// the templates' literal-brace notation and are copied through untouched.
template <typename OnText, typename OnPlaceholder>
void scan_template(const std::string& body, OnText&& on_text, OnPlaceholder&& on_placeholder) {
    size_t i = 0;
    size_t text_start = 0;
    while (i < body.size()) {
        if (body[i] != '{') {
            ++i;
            continue;
        }
        if (i + 1 < body.size() && body[i + 1] == '{') {
            i += 2;
            continue;
        }
        size_t j = i + 1;
        if (j < body.size() && is_ident_start(body[j])) {
            ++j;
            while (j < body.size() && is_ident_char(body[j])) ++j;
            if (j < body.size() && body[j] == '}') {
                on_text(body.substr(text_start, i - text_start));
                on_placeholder(body.substr(i + 1, j - i - 1));
                i = j + 1;
                text_start = i;
                continue;
            }
        }
        ++i;
    }
    on_text(body.substr(text_start));
}

}  // namespace

const char* template_file_name(TemplateName name) {
    switch (name) {
        case TemplateName::reasoning: return "reasoning.txt";
        case TemplateName::concept_extraction: return "concept_extraction.txt";
        case TemplateName::answer_generation: return "answer_generation.txt";
        case TemplateName::judge_system: return "judge_system.txt";
        case TemplateName::judge_eval: return "judge_eval.txt";
        case TemplateName::translation: return "translation.txt";
    }
    return "";
}

std::vector<std::string> PromptTemplate::placeholders() const {
    std::vector<std::string> out;
    scan_template(
        body, [](const std::string&) {},
        [&](const std::string& name) {
            if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
        });
    return out;
}

std::string render(const PromptTemplate& tmpl,
                   const std::map<std::string, std::string>& bindings) {
    std::string out;
    out.reserve(tmpl.body.size());
    std::vector<std::string> missing;
    std::vector<std::string> used;
    scan_template(
        tmpl.body, [&](const std::string& text) { out += text; },
        [&](const std::string& name) {
            auto it = bindings.find(name);
            if (it == bindings.end()) {
                if (std::find(missing.begin(), missing.end(), name) == missing.end()) {
                    missing.push_back(name);
                }
                return;
            }
            out += it->second;
            if (std::find(used.begin(), used.end(), name) == used.end()) used.push_back(name);
        });

    if (!missing.empty()) {
        std::string msg = "missing bindings:";
        for (const auto& name : missing) msg += " " + name;
        throw Error(ErrorCode::missing_binding, msg);
    }
    if (used.size() != bindings.size()) {
        std::string msg = "bindings match no placeholder:";
        for (const auto& [name, _] : bindings) {
            if (std::find(used.begin(), used.end(), name) == used.end()) msg += " " + name;
        }
        throw Error(ErrorCode::invalid_argument, msg);
    }
    return out;
}

TemplateSet TemplateSet::embedded() {
    TemplateSet set;
    for (int i = 0; i < kTemplateCount; ++i) {
        auto name = static_cast<TemplateName>(i);
        set.templates_.push_back(PromptTemplate{name, embedded_template_text(name)});
    }
    return set;
}

TemplateSet TemplateSet::from_directory(const std::string& dir) {
    TemplateSet set;
    for (int i = 0; i < kTemplateCount; ++i) {
        auto name = static_cast<TemplateName>(i);
        auto path = std::filesystem::path(dir) / template_file_name(name);
        set.templates_.push_back(PromptTemplate{name, read_file(path)});
    }
    return set;
}

const PromptTemplate& TemplateSet::get(TemplateName name) const {
    return templates_[static_cast<size_t>(name)];
}

std::map<std::string, std::string> TemplateSet::digests() const {
    std::map<std::string, std::string> out;
    for (const auto& tmpl : templates_) {
        out[template_file_name(tmpl.name)] = sha256_hex(tmpl.body);
    }
    return out;
}

}  // namespace medfuse
