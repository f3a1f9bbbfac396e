#pragma once

#include <map>
#include <string>
#include <vector>

namespace medfuse {

enum class TemplateName : uint8_t {
    reasoning,
    concept_extraction,
    answer_generation,
    judge_system,
    judge_eval,
    translation,
};

inline constexpr int kTemplateCount = 6;

const char* template_file_name(TemplateName name);  // e.g. "reasoning.txt"

// Raw bytes of the template asset compiled into the library. The asset files
// under assets/prompts/ are the source of truth; the build embeds them
// verbatim.
const std::string& embedded_template_text(TemplateName name);

struct PromptTemplate {
    TemplateName name = TemplateName::reasoning;
    std::string body;

    // Placeholder tokens `{identifier}` in body order, deduplicated. Literal
    // braces that do not wrap an identifier (the `{{`/`}}` in the output
    // format sections) are not placeholders.
    std::vector<std::string> placeholders() const;
};

// Substitutes every placeholder verbatim, in one pass; bound values are never
// re-scanned. Missing bindings throw Error(missing_binding) listing every
// absent name; bindings that match no placeholder throw
// Error(invalid_argument) so the call sites stay honest.
std::string render(const PromptTemplate& tmpl,
                   const std::map<std::string, std::string>& bindings);

// The six templates as one immutable set.
class TemplateSet {
public:
    static TemplateSet embedded();
    // Loads <dir>/<file_name> for each template; throws Error(io) on a
    // missing file.
    static TemplateSet from_directory(const std::string& dir);

    const PromptTemplate& get(TemplateName name) const;

    // sha256 of each template body, keyed by file name; recorded in run
    // manifests so results are attributable to exact prompts.
    std::map<std::string, std::string> digests() const;

private:
    std::vector<PromptTemplate> templates_;
};

}  // namespace medfuse
