/* medfuse — cross-lingual medical QA engine, C API.
 *
 * The engine runs parallel English / local-language reasoning, fuses the
 * extracted concept chains into an English-anchored scaffold, grounds it
 * with multilingual retrieval and synthesizes a final local-language answer.
 * This header is the stable ABI: opaque handles, status codes, UTF-8
 * strings. Strings returned through char** are heap-allocated and must be
 * released with mf_string_free().
 */
#ifndef MEDFUSE_H
#define MEDFUSE_H

#include <stdint.h>

#if defined(_WIN32)
#define MF_API __declspec(dllexport)
#else
#define MF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct mf_engine mf_engine;

typedef enum mf_status {
    MF_OK = 0,
    MF_ERR_INVALID_ARG = 1,
    MF_ERR_CONFIG = 2,
    MF_ERR_IO = 3,
    MF_ERR_PARSE = 4,
    MF_ERR_PROVIDER = 5,
    MF_ERR_NOT_FOUND = 6,
    MF_ERR_ITEM_FAILURES = 7, /* run finished but some items failed */
    MF_ERR_INTERNAL = 8
} mf_status;

MF_API const char* mf_version(void);

/* Message for the most recent failure on this thread; valid until the next
 * mf_* call on the same thread. */
MF_API const char* mf_last_error(void);

MF_API void mf_string_free(char* s);

/* Engine lifecycle. The configuration is a JSON document (see README);
 * mf_engine_create reads it from a file. */
MF_API mf_status mf_engine_create(const char* config_path, mf_engine** out);
MF_API mf_status mf_engine_create_from_json(const char* config_json, mf_engine** out);
MF_API void mf_engine_destroy(mf_engine* engine);

typedef struct mf_run_stats {
    int64_t items;
    int64_t failures;
    int64_t provider_calls;
} mf_run_stats;

/* Answers every question in a line-delimited question file and writes
 * line-delimited answer records to out_results plus a run manifest next to
 * it. lang and ablation may be NULL to use the configured values. Returns
 * MF_ERR_ITEM_FAILURES when the run completed but at least one item failed;
 * stats (optional) is filled either way. */
MF_API mf_status mf_run(mf_engine* engine, const char* questions_jsonl, const char* lang,
                        const char* ablation, const char* out_results, mf_run_stats* stats);

/* Answers a single question given as a JSON object; *result_json receives
 * the answer record (or {"question_id":...,"error":...} on item failure). */
MF_API mf_status mf_answer(mf_engine* engine, const char* question_json, char** result_json);

/* Knowledge base: ingest line-delimited {id, lang, title, text} records;
 * report per-language document counts. */
MF_API mf_status mf_kb_ingest(mf_engine* engine, const char* docs_jsonl, char** report_json);
MF_API mf_status mf_kb_stats(mf_engine* engine, char** report_json);

/* Scores a results file against gold questions. task is "mcqa", "nli" or
 * "lfqa". out_report may be NULL; otherwise the machine-readable report
 * lines are written there and the aligned table next to it. *report_json
 * receives the full report including the rendered table. */
MF_API mf_status mf_eval(mf_engine* engine, const char* task, const char* pred_jsonl,
                         const char* gold_jsonl, const char* out_report, char** report_json);

typedef struct mf_distill_stats {
    int64_t emitted;
    int64_t skipped_incorrect;
    int64_t skipped_error;
} mf_distill_stats;

/* Builds distillation records ({"question","rationale","answer"}) from mcqa
 * items, keeping only the ones answered correctly. */
MF_API mf_status mf_distill(mf_engine* engine, const char* train_jsonl, const char* out_jsonl,
                            mf_distill_stats* stats);

MF_API mf_status mf_cache_clear(mf_engine* engine, int64_t* removed);

/* Instrumentation: completions that actually reached a provider (cache
 * misses) since engine creation. */
MF_API int64_t mf_provider_invocations(const mf_engine* engine);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* MEDFUSE_H */
