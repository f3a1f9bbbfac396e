#include "medfuse/knowledge.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>
#include <set>

#include <json.hpp>

#include "medfuse/errors.hpp"
#include "medfuse/io.hpp"

namespace medfuse {

namespace {

constexpr char kVecMagic[8] = {'M', 'F', 'V', 'E', 'C', '0', '0', '1'};

std::string doc_key(Lang lang, const std::string& id) {
    return std::string(to_tag(lang)) + ":" + id;
}

}  // namespace

std::vector<double> EmbeddingReranker::score(const std::string& query,
                                             const std::vector<const Document*>& docs,
                                             const std::vector<double>&) {
    std::vector<std::string> texts;
    texts.reserve(docs.size() + 1);
    texts.push_back(query);
    for (const auto* doc : docs) texts.push_back(doc->text);
    auto vectors = embedder_->embed_batch(texts);
    std::vector<double> out(docs.size());
    for (size_t i = 0; i < docs.size(); ++i) out[i] = cosine(vectors[0], vectors[i + 1]);
    return out;
}

std::vector<std::string> chunk_text(const std::string& text, size_t max_chars, size_t overlap) {
    if (max_chars == 0) throw Error(ErrorCode::invalid_argument, "max_chars must be positive");
    if (text.size() <= max_chars) return {text};
    if (overlap >= max_chars) overlap = max_chars / 4;
    const size_t target = max_chars - overlap;

    // Paragraph-boundary packing; a single oversize paragraph is hard-split.
    std::vector<std::string> paragraphs;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t brk = text.find("\n\n", pos);
        std::string para = text.substr(pos, brk == std::string::npos ? std::string::npos : brk - pos);
        pos = brk == std::string::npos ? text.size() : brk + 2;
        if (para.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        while (para.size() > target) {
            paragraphs.push_back(para.substr(0, target));
            para = para.substr(target);
        }
        if (!para.empty()) paragraphs.push_back(std::move(para));
    }

    std::vector<std::string> segments;
    std::string current;
    for (auto& para : paragraphs) {
        size_t extra = current.empty() ? para.size() : para.size() + 2;
        if (!current.empty() && current.size() + extra > target) {
            segments.push_back(std::move(current));
            current.clear();
        }
        if (!current.empty()) current += "\n\n";
        current += para;
    }
    if (!current.empty()) segments.push_back(std::move(current));
    if (segments.empty()) segments.push_back(text.substr(0, target));

    std::vector<std::string> chunks;
    chunks.reserve(segments.size());
    for (size_t i = 0; i < segments.size(); ++i) {
        if (i == 0) {
            chunks.push_back(segments[i]);
            continue;
        }
        const std::string& prev = chunks.back();
        std::string tail = prev.size() > overlap ? prev.substr(prev.size() - overlap) : prev;
        chunks.push_back(tail + segments[i]);
    }
    return chunks;
}

KnowledgeStore::KnowledgeStore(std::filesystem::path dir, std::shared_ptr<Embedder> embedder,
                               std::shared_ptr<Reranker> reranker, StoreOptions options)
    : dir_(std::move(dir)),
      embedder_(std::move(embedder)),
      reranker_(std::move(reranker)),
      options_(options) {
    if (!embedder_) throw Error(ErrorCode::config, "knowledge store needs an embedder");
    if (!reranker_) throw Error(ErrorCode::config, "knowledge store needs a reranker");
    std::filesystem::create_directories(dir_);
    for (Lang lang : all_languages()) retrieve_counts_[lang].store(0);
    load();
}

void KnowledgeStore::load() {
    for (Lang lang : all_languages()) {
        auto docs_path = dir_ / (std::string(to_tag(lang)) + ".docs.jsonl");
        if (!std::filesystem::exists(docs_path)) continue;

        Partition part;
        for_each_jsonl(docs_path, [&](const nlohmann::json& j, size_t) {
            Document doc;
            doc.id = j.at("id").get<std::string>();
            doc.language = parse_language(j.at("lang").get<std::string>());
            doc.title = j.value("title", "");
            doc.text = j.at("text").get<std::string>();
            part.by_id[doc.id] = part.docs.size();
            part.docs.push_back(std::move(doc));
        });

        auto vec_path = dir_ / (std::string(to_tag(lang)) + ".vec");
        auto ids_path = dir_ / (std::string(to_tag(lang)) + ".ids");
        std::ifstream vec(vec_path, std::ios::binary);
        std::ifstream ids(ids_path);
        if (!vec || !ids) {
            throw Error(ErrorCode::io, "missing embedding sidecar for partition " +
                                           std::string(to_tag(lang)) + " in " + dir_.string());
        }
        char magic[8];
        uint32_t dim = 0;
        vec.read(magic, 8);
        vec.read(reinterpret_cast<char*>(&dim), sizeof(dim));
        if (!vec || std::memcmp(magic, kVecMagic, 8) != 0 || dim == 0) {
            throw Error(ErrorCode::io, "corrupt embedding sidecar: " + vec_path.string());
        }
        std::string id_line;
        while (std::getline(ids, id_line)) {
            if (id_line.empty()) continue;
            EmbeddingVector v;
            v.values.resize(dim);
            vec.read(reinterpret_cast<char*>(v.values.data()),
                     static_cast<std::streamsize>(dim * sizeof(double)));
            if (!vec) {
                throw Error(ErrorCode::io, "embedding sidecar truncated: " + vec_path.string());
            }
            part.vectors.push_back(std::move(v));
        }
        if (part.vectors.size() != part.docs.size()) {
            throw Error(ErrorCode::io,
                        "sidecar row count does not match documents for partition " +
                            std::string(to_tag(lang)));
        }
        partitions_[lang] = std::move(part);
    }
}

IngestReport KnowledgeStore::ingest(const std::vector<Document>& documents) {
    IngestReport report;
    report.input_documents = static_cast<int>(documents.size());

    std::map<Lang, std::vector<Document>> staged;
    std::set<std::string> seen;
    for (const auto& [lang, part] : partitions_) {
        for (const auto& doc : part.docs) seen.insert(doc_key(lang, doc.id));
    }

    for (const auto& doc : documents) {
        if (doc.id.empty()) throw Error(ErrorCode::parse, "document id must be non-empty");
        if (doc.text.empty()) throw Error(ErrorCode::parse, "document text must be non-empty (id " + doc.id + ")");

        std::vector<std::string> pieces = chunk_text(doc.text, options_.max_doc_chars, options_.chunk_overlap);
        if (pieces.size() > 1) report.chunks_created += static_cast<int>(pieces.size());
        for (size_t i = 0; i < pieces.size(); ++i) {
            Document record;
            record.id = pieces.size() == 1 ? doc.id : doc.id + "#" + std::to_string(i + 1);
            record.language = doc.language;
            record.title = doc.title;
            record.text = std::move(pieces[i]);
            if (!seen.insert(doc_key(record.language, record.id)).second) {
                throw Error(ErrorCode::duplicate_id,
                            "duplicate document id '" + record.id + "' in partition " +
                                std::string(to_tag(record.language)));
            }
            staged[record.language].push_back(std::move(record));
        }
    }

    // Embed everything before touching the files, so an embedding failure
    // aborts the batch with nothing persisted.
    std::map<Lang, std::vector<EmbeddingVector>> vectors;
    for (const auto& [lang, docs] : staged) {
        std::vector<std::string> texts;
        texts.reserve(docs.size());
        for (const auto& doc : docs) texts.push_back(doc.text);
        auto& dst = vectors[lang];
        for (size_t offset = 0; offset < texts.size(); offset += kEmbedBatchCap) {
            size_t end = std::min(texts.size(), offset + kEmbedBatchCap);
            auto batch = embedder_->embed_batch(
                std::vector<std::string>(texts.begin() + offset, texts.begin() + end));
            dst.insert(dst.end(), std::make_move_iterator(batch.begin()),
                       std::make_move_iterator(batch.end()));
        }
    }

    for (auto& [lang, docs] : staged) {
        append_partition(lang, docs, vectors[lang]);
        report.per_language[lang] += static_cast<int>(docs.size());
    }
    return report;
}

void KnowledgeStore::append_partition(Lang lang, const std::vector<Document>& docs,
                                      const std::vector<EmbeddingVector>& vectors) {
    auto docs_path = dir_ / (std::string(to_tag(lang)) + ".docs.jsonl");
    auto ids_path = dir_ / (std::string(to_tag(lang)) + ".ids");
    auto vec_path = dir_ / (std::string(to_tag(lang)) + ".vec");

    const uint32_t dim = vectors.empty() ? 0 : static_cast<uint32_t>(vectors.front().dim());
    if (!std::filesystem::exists(vec_path)) {
        std::ofstream vec(vec_path, std::ios::binary);
        vec.write(kVecMagic, 8);
        vec.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
    }

    std::ofstream docs_out(docs_path, std::ios::app | std::ios::binary);
    std::ofstream ids_out(ids_path, std::ios::app | std::ios::binary);
    std::ofstream vec_out(vec_path, std::ios::app | std::ios::binary);
    if (!docs_out || !ids_out || !vec_out) {
        throw Error(ErrorCode::io, "cannot append to partition files in " + dir_.string());
    }

    auto& part = partitions_[lang];
    for (size_t i = 0; i < docs.size(); ++i) {
        nlohmann::json j;
        j["id"] = docs[i].id;
        j["lang"] = std::string(to_tag(lang));
        j["title"] = docs[i].title;
        j["text"] = docs[i].text;
        docs_out << j.dump() << "\n";
        ids_out << docs[i].id << "\n";
        vec_out.write(reinterpret_cast<const char*>(vectors[i].values.data()),
                      static_cast<std::streamsize>(vectors[i].values.size() * sizeof(double)));
        part.by_id[docs[i].id] = part.docs.size();
        part.docs.push_back(docs[i]);
        part.vectors.push_back(vectors[i]);
    }
}

std::vector<RetrievalHit> KnowledgeStore::retrieve(const std::string& query, Lang language,
                                                   int k_initial, int k_final) const {
    if (k_final < 1 || k_final > k_initial) {
        throw Error(ErrorCode::invalid_argument, "need 1 <= k_final <= k_initial");
    }
    auto it = partitions_.find(language);
    if (it == partitions_.end() || it->second.docs.empty()) {
        throw Error(ErrorCode::empty_partition,
                    "knowledge partition for language '" + std::string(to_tag(language)) + "' is empty");
    }
    retrieve_counts_.at(language).fetch_add(1);
    const Partition& part = it->second;

    EmbeddingVector query_vec = embedder_->embed_batch({query})[0];
    std::vector<double> scores(part.docs.size());
    for (size_t i = 0; i < part.docs.size(); ++i) scores[i] = cosine(query_vec, part.vectors[i]);

    // Stage 1: cosine ranking, ties broken by ingestion order.
    std::vector<size_t> order(part.docs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return scores[a] > scores[b]; });
    size_t keep = std::min<size_t>(order.size(), static_cast<size_t>(k_initial));
    order.resize(keep);

    // Stage 2: rerank the candidate set; nothing outside it can surface.
    std::vector<const Document*> candidates(keep);
    std::vector<double> stage1(keep);
    for (size_t i = 0; i < keep; ++i) {
        candidates[i] = &part.docs[order[i]];
        stage1[i] = scores[order[i]];
    }
    std::vector<double> reranked = reranker_->score(query, candidates, stage1);
    if (reranked.size() != keep) {
        throw Error(ErrorCode::provider, "reranker returned wrong number of scores");
    }

    std::vector<size_t> final_order(keep);
    std::iota(final_order.begin(), final_order.end(), 0);
    std::stable_sort(final_order.begin(), final_order.end(),
                     [&](size_t a, size_t b) { return reranked[a] > reranked[b]; });
    size_t out_n = std::min<size_t>(keep, static_cast<size_t>(k_final));

    std::vector<RetrievalHit> hits;
    hits.reserve(out_n);
    for (size_t i = 0; i < out_n; ++i) {
        size_t c = final_order[i];
        hits.push_back(RetrievalHit{*candidates[c], stage1[c], reranked[c], language});
    }
    return hits;
}

std::vector<RetrievalHit> KnowledgeStore::dual_query_retrieve(const std::string& q_local,
                                                              const std::string& q_english,
                                                              Lang local_lang, int k_initial,
                                                              int k_final,
                                                              std::vector<std::string>* warnings) const {
    if (local_lang == Lang::en) {
        throw Error(ErrorCode::invalid_argument,
                    "dual-query retrieval needs a non-English local language; use retrieve() for en");
    }
    bool en_empty = partition_empty(Lang::en);
    bool local_empty = partition_empty(local_lang);
    if (en_empty && local_empty) {
        throw Error(ErrorCode::empty_partition,
                    "both the en and " + std::string(to_tag(local_lang)) + " partitions are empty");
    }

    std::vector<RetrievalHit> hits;
    if (!en_empty) {
        auto en_hits = retrieve(q_english, Lang::en, k_initial, k_final);
        hits.insert(hits.end(), en_hits.begin(), en_hits.end());
    } else if (warnings) {
        warnings->push_back("en partition is empty; returning local hits only");
    }
    if (!local_empty) {
        auto local_hits = retrieve(q_local, local_lang, k_initial, k_final);
        hits.insert(hits.end(), local_hits.begin(), local_hits.end());
    } else if (warnings) {
        warnings->push_back(std::string(to_tag(local_lang)) +
                            " partition is empty; returning en hits only");
    }

    std::vector<RetrievalHit> deduped;
    std::set<std::string> keys;
    for (auto& hit : hits) {
        if (keys.insert(doc_key(hit.document.language, hit.document.id)).second) {
            deduped.push_back(std::move(hit));
        }
    }
    return deduped;
}

std::map<Lang, int> KnowledgeStore::stats() const {
    std::map<Lang, int> out;
    for (const auto& [lang, part] : partitions_) {
        if (!part.docs.empty()) out[lang] = static_cast<int>(part.docs.size());
    }
    return out;
}

bool KnowledgeStore::partition_empty(Lang language) const {
    auto it = partitions_.find(language);
    return it == partitions_.end() || it->second.docs.empty();
}

int64_t KnowledgeStore::retrieve_count(Lang language) const {
    return retrieve_counts_.at(language).load();
}

}  // namespace medfuse
