#include "medfuse/fusion.hpp"

#include <cctype>
#include <limits>

#include "medfuse/errors.hpp"

namespace medfuse {

const char* to_string(InsertSide side) {
    return side == InsertSide::before_anchor ? "before_anchor" : "after_anchor";
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string normalized(const std::string& text) {
    size_t a = text.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = text.find_last_not_of(" \t\r\n");
    std::string out = text.substr(a, b - a + 1);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

nlohmann::json entry_to_json(const FusedEntry& e) {
    nlohmann::json j;
    j["text"] = e.item.text;
    j["language"] = std::string(to_tag(e.item.language));
    j["source"] = to_string(e.item.source);
    j["position_in_source"] = e.item.position_in_source;
    if (e.anchor_similarity) j["anchor_similarity"] = *e.anchor_similarity;
    if (e.inserted_at) j["inserted_at"] = *e.inserted_at;
    if (e.side) j["side"] = to_string(*e.side);
    return j;
}

FusedEntry entry_from_json(const nlohmann::json& j) {
    FusedEntry e;
    e.item.text = j.at("text").get<std::string>();
    e.item.language = parse_language(j.at("language").get<std::string>());
    e.item.source =
        j.at("source").get<std::string>() == "english" ? ConceptSource::english : ConceptSource::local;
    e.item.position_in_source = j.at("position_in_source").get<int>();
    if (j.contains("anchor_similarity")) e.anchor_similarity = j.at("anchor_similarity").get<double>();
    if (j.contains("inserted_at")) e.inserted_at = j.at("inserted_at").get<int>();
    if (j.contains("side")) {
        e.side = j.at("side").get<std::string>() == "before_anchor" ? InsertSide::before_anchor
                                                                    : InsertSide::after_anchor;
    }
    return e;
}

}  // namespace

std::string FusedChain::render_arrow() const {
    std::string out;
    for (const auto& entry : entries) {
        if (!out.empty()) out += " → ";
        if (entry.item.source == ConceptSource::local) out += "[local] ";
        out += entry.item.text;
    }
    return out;
}

nlohmann::json FusedChain::to_json() const {
    nlohmann::json j;
    j["threshold"] = threshold_used;
    auto arr = nlohmann::json::array();
    for (const auto& entry : entries) arr.push_back(entry_to_json(entry));
    j["entries"] = arr;
    return j;
}

FusedChain FusedChain::from_json(const nlohmann::json& j) {
    FusedChain chain;
    chain.threshold_used = j.at("threshold").get<double>();
    for (const auto& e : j.at("entries")) chain.entries.push_back(entry_from_json(e));
    return chain;
}

std::vector<std::string> FusedChain::trace_lines() const {
    std::vector<std::string> lines;
    lines.reserve(entries.size());
    for (const auto& entry : entries) lines.push_back(entry_to_json(entry).dump());
    return lines;
}

InsertionDecision choose_insertion_position(int k_star, const std::vector<double>& sims) {
    const int n = static_cast<int>(sims.size());
    if (n == 0 || k_star < 1 || k_star > n) {
        throw Error(ErrorCode::invalid_argument,
                    "k_star " + std::to_string(k_star) + " out of range for " + std::to_string(n) +
                        " similarities");
    }
    double s_left = kNegInf;
    if (k_star >= 2) {
        double sum = 0.0;
        for (int i = 0; i < k_star - 1; ++i) sum += sims[static_cast<size_t>(i)];
        s_left = sum / (k_star - 1);
    }
    double s_right = kNegInf;
    if (k_star <= n - 1) {
        double sum = 0.0;
        for (int i = k_star; i < n; ++i) sum += sims[static_cast<size_t>(i)];
        s_right = sum / (n - k_star);
    }
    if (s_left > s_right) return {k_star, InsertSide::before_anchor};
    return {k_star + 1, InsertSide::after_anchor};
}

FusedChain fuse(const ConceptChain& c_e, const ConceptChain& c_l, double tau, Embedder& embedder,
                const FusionOptions& options) {
    if (c_e.language != Lang::en) {
        throw Error(ErrorCode::invalid_argument, "fusion backbone must be the English chain");
    }
    if (tau < -1.0 || tau > 1.0) {
        throw Error(ErrorCode::invalid_argument, "tau must be in [-1, 1]");
    }
    if (c_e.concepts.empty()) {
        throw Error(ErrorCode::empty_backbone, "fusion requires a non-empty English backbone");
    }

    FusedChain fused;
    fused.threshold_used = tau;
    fused.entries.reserve(c_e.concepts.size() + c_l.concepts.size());

    std::vector<std::string> backbone_texts;
    backbone_texts.reserve(c_e.concepts.size());
    for (const auto& concept_item : c_e.concepts) backbone_texts.push_back(concept_item.text);
    std::vector<EmbeddingVector> state = embedder.embed_batch(backbone_texts);

    for (const auto& concept_item : c_e.concepts) {
        fused.entries.push_back(FusedEntry{concept_item, std::nullopt, std::nullopt, std::nullopt});
    }
    if (c_l.concepts.empty()) return fused;

    std::vector<std::string> local_texts;
    local_texts.reserve(c_l.concepts.size());
    for (const auto& concept_item : c_l.concepts) local_texts.push_back(concept_item.text);
    std::vector<EmbeddingVector> local_vectors = embedder.embed_batch(local_texts);

    for (size_t j = 0; j < c_l.concepts.size(); ++j) {
        const EmbeddingVector& candidate = local_vectors[j];

        std::vector<double> sims(fused.entries.size());
        size_t anchor = 0;
        for (size_t k = 0; k < state.size(); ++k) {
            sims[k] = cosine(candidate, state[k]);
            if (sims[k] > sims[anchor]) anchor = k;  // lowest index wins ties
        }
        double s_max = sims[anchor];
        if (s_max < tau) continue;

        if (options.dedupe_identical && s_max >= options.dedupe_threshold &&
            normalized(fused.entries[anchor].item.text) == normalized(c_l.concepts[j].text)) {
            continue;
        }

        InsertionDecision decision = choose_insertion_position(static_cast<int>(anchor) + 1, sims);
        size_t index = static_cast<size_t>(decision.position - 1);
        fused.entries.insert(
            fused.entries.begin() + static_cast<std::ptrdiff_t>(index),
            FusedEntry{c_l.concepts[j], s_max, static_cast<int>(index), decision.side});
        state.insert(state.begin() + static_cast<std::ptrdiff_t>(index), candidate);
    }
    return fused;
}

FusedChain fused_from_single(const ConceptChain& chain, double tau) {
    FusedChain fused;
    fused.threshold_used = tau;
    fused.entries.reserve(chain.concepts.size());
    for (const auto& concept_item : chain.concepts) {
        fused.entries.push_back(FusedEntry{concept_item, std::nullopt, std::nullopt, std::nullopt});
    }
    return fused;
}

}  // namespace medfuse
