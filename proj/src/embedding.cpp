#include "medfuse/embedding.hpp"

#include <cctype>
#include <cmath>

#include "medfuse/digest.hpp"
#include "medfuse/errors.hpp"

namespace medfuse {

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) {
        throw Error(ErrorCode::dimension_mismatch,
                    "cosine over vectors of dim " + std::to_string(a.dim()) + " and " +
                        std::to_string(b.dim()));
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0) {
        throw Error(ErrorCode::zero_vector, "cosine is undefined for an all-zero vector");
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<EmbeddingVector> Embedder::embed_batch(const std::vector<std::string>& texts) {
    if (texts.empty()) throw Error(ErrorCode::invalid_argument, "embed_batch requires at least one text");
    for (size_t i = 0; i < texts.size(); ++i) {
        bool blank = true;
        for (char c : texts[i]) {
            if (!std::isspace(static_cast<unsigned char>(c))) { blank = false; break; }
        }
        if (blank) {
            throw Error(ErrorCode::empty_text, "empty text at index " + std::to_string(i));
        }
    }
    auto out = do_embed_batch(texts);
    if (out.size() != texts.size()) {
        throw Error(ErrorCode::provider, "embedder returned wrong number of vectors");
    }
    return out;
}

namespace {

// splitmix64: tiny, stable across platforms; the standard distributions are
// not guaranteed bit-identical between library implementations, so the mock
// maps raw 64-bit draws to doubles itself.
uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::string normalize_for_hash(const std::string& text) {
    size_t a = text.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = text.find_last_not_of(" \t\r\n");
    std::string out = text.substr(a, b - a + 1);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

}  // namespace

EmbeddingVector MockEmbedder::embed_one(const std::string& text) {
    uint64_t state = fnv1a64(normalize_for_hash(text));
    EmbeddingVector v;
    v.values.resize(kDim);
    double norm_sq = 0.0;
    for (size_t i = 0; i < kDim; ++i) {
        // top 53 bits -> [0,1) -> [-1,1)
        double u = static_cast<double>(splitmix64(state) >> 11) * (1.0 / 9007199254740992.0);
        v.values[i] = 2.0 * u - 1.0;
        norm_sq += v.values[i] * v.values[i];
    }
    if (norm_sq < 1e-24) {
        v.values[0] = 1.0;
        norm_sq = 1.0;
    }
    double inv = 1.0 / std::sqrt(norm_sq);
    for (double& x : v.values) x *= inv;
    return v;
}

std::vector<EmbeddingVector> MockEmbedder::do_embed_batch(const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& text : texts) out.push_back(embed_one(text));
    return out;
}

}  // namespace medfuse
