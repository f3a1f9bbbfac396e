#pragma once

// Independent oracle for the position-aware fusion algorithm: a literal,
// 1-based transliteration of the pseudocode with its own cosine, sharing
// nothing with the library implementation except the Embedder interface.

#include <cmath>
#include <string>
#include <vector>

#include "medfuse/embedding.hpp"

namespace medfuse::testing {

struct OracleEntry {
    std::string text;
    bool local = false;
    double similarity = 0.0;  // s_max at admission time (local entries only)
};

inline std::vector<OracleEntry> fusion_oracle(const std::vector<std::string>& english_chain,
                                              const std::vector<std::string>& local_chain,
                                              double tau, Embedder& f) {
    auto cos_sim = [](const EmbeddingVector& a, const EmbeddingVector& b) {
        double dot = 0.0, na = 0.0, nb = 0.0;
        for (size_t i = 0; i < a.values.size(); ++i) {
            dot += a.values[i] * b.values[i];
            na += a.values[i] * a.values[i];
            nb += b.values[i] * b.values[i];
        }
        return dot / (std::sqrt(na) * std::sqrt(nb));
    };

    std::vector<OracleEntry> chain;
    std::vector<EmbeddingVector> vectors;
    for (const auto& c : english_chain) {
        chain.push_back(OracleEntry{c, false, 0.0});
        vectors.push_back(f.embed_batch({c})[0]);
    }

    for (const auto& candidate : local_chain) {
        EmbeddingVector e_l = f.embed_batch({candidate})[0];

        int k_star = 1;
        double s_max = cos_sim(e_l, vectors[0]);
        for (int k = 2; k <= static_cast<int>(vectors.size()); ++k) {
            double s = cos_sim(e_l, vectors[k - 1]);
            if (s > s_max) {
                s_max = s;
                k_star = k;
            }
        }
        if (s_max < tau) continue;

        const int n = static_cast<int>(chain.size());
        double s_left = -INFINITY;
        if (k_star - 1 >= 1) {
            double sum = 0.0;
            for (int i = 1; i <= k_star - 1; ++i) sum += cos_sim(e_l, vectors[i - 1]);
            s_left = sum / (k_star - 1);
        }
        double s_right = -INFINITY;
        if (n - k_star >= 1) {
            double sum = 0.0;
            for (int i = k_star + 1; i <= n; ++i) sum += cos_sim(e_l, vectors[i - 1]);
            s_right = sum / (n - k_star);
        }
        int p = (s_left > s_right) ? k_star : k_star + 1;
        chain.insert(chain.begin() + (p - 1), OracleEntry{candidate, true, s_max});
        vectors.insert(vectors.begin() + (p - 1), e_l);
    }
    return chain;
}

}  // namespace medfuse::testing
