#pragma once

#include <memory>
#include <string>
#include <vector>

namespace medfuse {

struct EmbeddingVector {
    std::vector<double> values;

    size_t dim() const { return values.size(); }
};

// Standard cosine similarity in [-1, 1]. Throws Error(dimension_mismatch)
// when dims differ and Error(zero_vector) when either argument is all-zero.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::string name() const = 0;
    virtual size_t dimension() const = 0;

    // Output order matches input order. Rejects an empty list and any text
    // that is empty after trimming (Error(empty_text) naming the index).
    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts);

protected:
    virtual std::vector<EmbeddingVector> do_embed_batch(const std::vector<std::string>& texts) = 0;
};

// Deterministic, language-agnostic, unit-norm, dimension 64. Vectors are a
// pure function of the trimmed, case-folded text: a splitmix64 stream seeded
// from its FNV-1a hash, so equal strings give equal vectors across processes.
class MockEmbedder : public Embedder {
public:
    static constexpr size_t kDim = 64;

    std::string name() const override { return "mock"; }
    size_t dimension() const override { return kDim; }

    static EmbeddingVector embed_one(const std::string& text);

protected:
    std::vector<EmbeddingVector> do_embed_batch(const std::vector<std::string>& texts) override;
};

// Per-call batch cap when talking to remote embedding providers.
inline constexpr size_t kEmbedBatchCap = 64;

}  // namespace medfuse
