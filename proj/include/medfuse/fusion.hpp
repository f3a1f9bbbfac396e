#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "medfuse/concept.hpp"
#include "medfuse/embedding.hpp"

namespace medfuse {

enum class InsertSide : uint8_t { before_anchor, after_anchor };

const char* to_string(InsertSide side);

struct FusedEntry {
    Concept item;
    // Present iff source == local: the max cosine against the chain state at
    // insertion time, always >= the threshold used.
    std::optional<double> anchor_similarity;
    // 0-based index the entry landed at, at insertion time (local only).
    std::optional<int> inserted_at;
    std::optional<InsertSide> side;
};

struct FusedChain {
    std::vector<FusedEntry> entries;
    double threshold_used = 0.5;

    // "c1 → c2 → …" with local entries marked "[local]"; this is the
    // {concept_chain} binding of the answer-generation prompt.
    std::string render_arrow() const;

    nlohmann::json to_json() const;
    static FusedChain from_json(const nlohmann::json& j);

    // One JSON record per entry (provenance, similarity, position), for the
    // line-delimited audit artifact.
    std::vector<std::string> trace_lines() const;
};

struct InsertionDecision {
    int position;  // 1-based, matching the fusion pseudocode convention
    InsertSide side;
};

// Decides where a candidate goes relative to its anchor. `sims` holds the
// candidate's cosine against every current chain entry and k_star is the
// 1-based anchor index. The side means are s_left = mean(sims[1..k*-1]) and
// s_right = mean(sims[k*+1..]); an empty side gets a -inf sentinel, so the
// candidate lands adjacent to the side that has context, and the -inf vs
// -inf tie at |chain|=1 falls to after_anchor. Returns position k_star
// (before_anchor) iff s_left > s_right, else k_star+1 (after_anchor).
InsertionDecision choose_insertion_position(int k_star, const std::vector<double>& sims);

struct FusionOptions {
    // Skip insertion when the anchor has identical normalized text and the
    // similarity is near-exact. Off by default.
    bool dedupe_identical = false;
    double dedupe_threshold = 0.98;
};

// Position-aware backbone augmentation: the fused chain starts as the
// English chain; each local concept, in original order, is admitted iff its
// max cosine against the *current* fused chain reaches tau, and is inserted
// before or after that anchor by bidirectional side-mean comparison.
// Embeddings of admitted local concepts join the chain state, so they
// participate in later anchor searches. Argmax ties break to the lowest
// index.
//
// Requires c_e.language == en, tau in [-1, 1], and a non-empty backbone
// (Error(empty_backbone) otherwise). An empty c_l is the degenerate case and
// returns the backbone unchanged.
FusedChain fuse(const ConceptChain& c_e, const ConceptChain& c_l, double tau,
                Embedder& embedder, const FusionOptions& options = {});

// Wraps a single chain as a fused chain without any insertion; used by the
// ablation modes that drop one reasoning language.
FusedChain fused_from_single(const ConceptChain& chain, double tau);

}  // namespace medfuse
