#pragma once

#include <array>
#include <string>
#include <string_view>

namespace medfuse {

// Closed set of supported languages: the benchmark languages plus the
// ones that only appear in the distillation data. Anything else is
// rejected at parse time so downstream KB routing stays total.
enum class Lang : uint8_t { en, zh, ja, ko, de, fr, es, it, sw, th, yo, zu, ru };

inline constexpr int kLangCount = 13;

// Case-insensitive parse of a two-letter tag; throws Error(unknown_language)
// naming the offending tag.
Lang parse_language(std::string_view tag);

// Lowercase two-letter tag, e.g. "sw".
std::string_view to_tag(Lang lang);

// English display name, e.g. "Swahili"; this is what prompt templates bind
// for their {language} placeholder.
std::string_view language_name(Lang lang);

const std::array<Lang, kLangCount>& all_languages();

}  // namespace medfuse
