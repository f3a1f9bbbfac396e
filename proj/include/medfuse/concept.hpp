#pragma once

#include <string>
#include <vector>

#include "medfuse/gateway.hpp"
#include "medfuse/language.hpp"
#include "medfuse/templates.hpp"
#include "medfuse/types.hpp"

namespace medfuse {

enum class ConceptSource : uint8_t { english, local };

const char* to_string(ConceptSource source);

struct Concept {
    std::string text;  // trimmed, no surrounding quote characters
    Lang language = Lang::en;
    ConceptSource source = ConceptSource::english;
    int position_in_source = 0;
};

struct ConceptChain {
    std::vector<Concept> concepts;
    Lang language = Lang::en;
};

// Extracts the first well-formed bracketed, comma-separated, quoted-string
// list in raw. Items are unescaped, trimmed, empties dropped and consecutive
// exact duplicates collapsed. `[]` does not count as a list; throws
// Error(no_list_found) when no list exists.
std::vector<std::string> parse_concept_list(const std::string& raw);

// Serialization matching the extraction output format; parse_concept_list is
// idempotent through it.
std::string format_concept_list(const std::vector<std::string>& items);

struct ExtractorOptions {
    int max_concepts = 32;  // overlong model outputs are truncated, never errors
    std::string model_id = "mock";
    double temperature = 0.7;
    int max_output_tokens = 1024;
};

// One completion with the extraction template bound to {language,
// reasoning_trace}; order of the parsed list is preserved. On a parse
// failure, reprompts once with "Output only the list." appended; a second
// failure is Error(unparseable_output). A parsed-but-empty list is
// Error(empty_chain).
ConceptChain extract_concepts(const ReasoningChain& trace, ConceptSource source,
                              const TemplateSet& templates, const CompleteFn& complete,
                              const ExtractorOptions& options = {});

}  // namespace medfuse
