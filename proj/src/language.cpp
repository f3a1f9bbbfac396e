#include "medfuse/language.hpp"

#include <cctype>

#include "medfuse/errors.hpp"

namespace medfuse {

namespace {

struct LangInfo {
    Lang lang;
    std::string_view tag;
    std::string_view name;
};

constexpr std::array<LangInfo, kLangCount> kLangTable{{
    {Lang::en, "en", "English"},
    {Lang::zh, "zh", "Chinese"},
    {Lang::ja, "ja", "Japanese"},
    {Lang::ko, "ko", "Korean"},
    {Lang::de, "de", "German"},
    {Lang::fr, "fr", "French"},
    {Lang::es, "es", "Spanish"},
    {Lang::it, "it", "Italian"},
    {Lang::sw, "sw", "Swahili"},
    {Lang::th, "th", "Thai"},
    {Lang::yo, "yo", "Yoruba"},
    {Lang::zu, "zu", "Zulu"},
    {Lang::ru, "ru", "Russian"},
}};

}  // namespace

Lang parse_language(std::string_view tag) {
    std::string folded;
    folded.reserve(tag.size());
    for (char c : tag) folded.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    for (const auto& info : kLangTable) {
        if (info.tag == folded) return info.lang;
    }
    throw Error(ErrorCode::unknown_language, "unknown language tag: '" + std::string(tag) + "'");
}

std::string_view to_tag(Lang lang) {
    return kLangTable[static_cast<size_t>(lang)].tag;
}

std::string_view language_name(Lang lang) {
    return kLangTable[static_cast<size_t>(lang)].name;
}

const std::array<Lang, kLangCount>& all_languages() {
    static const std::array<Lang, kLangCount> langs = [] {
        std::array<Lang, kLangCount> out{};
        for (size_t i = 0; i < kLangTable.size(); ++i) out[i] = kLangTable[i].lang;
        return out;
    }();
    return langs;
}

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument: return "invalid_argument";
        case ErrorCode::config: return "config";
        case ErrorCode::io: return "io";
        case ErrorCode::parse: return "parse";
        case ErrorCode::provider: return "provider";
        case ErrorCode::not_found: return "not_found";
        case ErrorCode::unknown_language: return "unknown_language";
        case ErrorCode::missing_binding: return "missing_binding";
        case ErrorCode::empty_text: return "empty_text";
        case ErrorCode::dimension_mismatch: return "dimension_mismatch";
        case ErrorCode::zero_vector: return "zero_vector";
        case ErrorCode::no_list_found: return "no_list_found";
        case ErrorCode::unparseable_output: return "unparseable_output";
        case ErrorCode::empty_chain: return "empty_chain";
        case ErrorCode::empty_backbone: return "empty_backbone";
        case ErrorCode::duplicate_id: return "duplicate_id";
        case ErrorCode::empty_partition: return "empty_partition";
        case ErrorCode::no_valid_label: return "no_valid_label";
        case ErrorCode::judge_parse: return "judge_parse";
    }
    return "unknown";
}

}  // namespace medfuse
