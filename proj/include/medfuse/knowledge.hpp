#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "medfuse/embedding.hpp"
#include "medfuse/language.hpp"

namespace medfuse {

struct Document {
    std::string id;  // unique within its language partition
    Lang language = Lang::en;
    std::string title;
    std::string text;
};

struct RetrievalHit {
    Document document;
    double retrieve_score = 0.0;  // stage-1 cosine
    double rerank_score = 0.0;    // stage-2 score; hits are sorted by this
    Lang query_language = Lang::en;
};

struct IngestReport {
    std::map<Lang, int> per_language;  // stored records (chunks count individually)
    int input_documents = 0;
    int chunks_created = 0;
};

// Second-stage scorer over the stage-1 candidate set. stage1_scores line up
// with docs; the identity reranker just echoes them.
class Reranker {
public:
    virtual ~Reranker() = default;
    virtual std::string name() const = 0;
    virtual std::vector<double> score(const std::string& query,
                                      const std::vector<const Document*>& docs,
                                      const std::vector<double>& stage1_scores) = 0;
};

class IdentityReranker : public Reranker {
public:
    std::string name() const override { return "identity"; }
    std::vector<double> score(const std::string&, const std::vector<const Document*>&,
                              const std::vector<double>& stage1_scores) override {
        return stage1_scores;
    }
};

// Cross-scores query and document text with the embedding provider.
class EmbeddingReranker : public Reranker {
public:
    explicit EmbeddingReranker(std::shared_ptr<Embedder> embedder)
        : embedder_(std::move(embedder)) {}

    std::string name() const override { return "embedding"; }
    std::vector<double> score(const std::string& query,
                              const std::vector<const Document*>& docs,
                              const std::vector<double>& stage1_scores) override;

private:
    std::shared_ptr<Embedder> embedder_;
};

struct StoreOptions {
    size_t max_doc_chars = 8192;  // longer source docs are chunked at ingestion
    size_t chunk_overlap = 200;
};

// Splits text at paragraph boundaries into pieces of at most max_chars with
// the given trailing overlap. Exposed for tests.
std::vector<std::string> chunk_text(const std::string& text, size_t max_chars,
                                    size_t overlap);

// Language-partitioned document store with dense retrieval and reranking.
// Documents and vectors persist in append-only files per partition
// (<lang>.docs.jsonl, <lang>.vec with a dimension header and row-major
// float64 values, <lang>.ids as the row manifest); the in-memory index is
// rebuilt at startup. Reads are concurrent-safe against the loaded snapshot;
// ingest is an exclusive writer.
class KnowledgeStore {
public:
    KnowledgeStore(std::filesystem::path dir, std::shared_ptr<Embedder> embedder,
                   std::shared_ptr<Reranker> reranker, StoreOptions options = {});

    // Validates the whole batch (duplicate (language,id) rejected, oversize
    // docs chunked), computes every embedding, and only then persists: an
    // embedding failure aborts the batch with nothing written.
    IngestReport ingest(const std::vector<Document>& documents);

    // Stage 1 ranks the partition by cosine(query, doc) and keeps the top
    // k_initial (all docs when the partition is smaller); stage 2 reranks
    // those candidates and returns the top k_final, sorted by rerank score.
    // Ties break by ingestion order. Throws Error(empty_partition).
    std::vector<RetrievalHit> retrieve(const std::string& query, Lang language,
                                       int k_initial = 10, int k_final = 3) const;

    // English hits first, then local hits, each internally rerank-sorted and
    // deduplicated by (language, id). When exactly one partition is empty the
    // other side is returned and a warning recorded; both empty is an
    // Error(empty_partition). Requires local_lang != en.
    std::vector<RetrievalHit> dual_query_retrieve(const std::string& q_local,
                                                  const std::string& q_english,
                                                  Lang local_lang, int k_initial = 10,
                                                  int k_final = 3,
                                                  std::vector<std::string>* warnings = nullptr) const;

    std::map<Lang, int> stats() const;
    bool partition_empty(Lang language) const;

    // Instrumentation: retrieve() calls served per partition.
    int64_t retrieve_count(Lang language) const;

private:
    struct Partition {
        std::vector<Document> docs;
        std::vector<EmbeddingVector> vectors;
        std::map<std::string, size_t> by_id;
    };

    void load();
    void append_partition(Lang lang, const std::vector<Document>& docs,
                          const std::vector<EmbeddingVector>& vectors);

    std::filesystem::path dir_;
    std::shared_ptr<Embedder> embedder_;
    std::shared_ptr<Reranker> reranker_;
    StoreOptions options_;
    std::map<Lang, Partition> partitions_;
    mutable std::map<Lang, std::atomic<int64_t>> retrieve_counts_;
};

}  // namespace medfuse
