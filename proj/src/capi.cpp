#include "medfuse.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "medfuse/engine.hpp"
#include "medfuse/errors.hpp"

using medfuse::Engine;
using medfuse::Error;
using medfuse::ErrorCode;

struct mf_engine {
    std::unique_ptr<Engine> impl;
};

namespace {

thread_local std::string g_last_error;

mf_status status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument:
        case ErrorCode::dimension_mismatch:
        case ErrorCode::zero_vector:
        case ErrorCode::empty_text:
        case ErrorCode::empty_backbone:
            return MF_ERR_INVALID_ARG;
        case ErrorCode::config:
            return MF_ERR_CONFIG;
        case ErrorCode::io:
            return MF_ERR_IO;
        case ErrorCode::parse:
        case ErrorCode::unknown_language:
        case ErrorCode::missing_binding:
        case ErrorCode::no_list_found:
        case ErrorCode::unparseable_output:
        case ErrorCode::empty_chain:
        case ErrorCode::duplicate_id:
        case ErrorCode::no_valid_label:
        case ErrorCode::judge_parse:
            return MF_ERR_PARSE;
        case ErrorCode::provider:
            return MF_ERR_PROVIDER;
        case ErrorCode::not_found:
        case ErrorCode::empty_partition:
            return MF_ERR_NOT_FOUND;
    }
    return MF_ERR_INTERNAL;
}

template <typename Fn>
mf_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        g_last_error = e.what();
        return status_for(e.code());
    } catch (const nlohmann::json::exception& e) {
        g_last_error = e.what();
        return MF_ERR_PARSE;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return MF_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown failure";
        return MF_ERR_INTERNAL;
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

mf_status require(bool condition, const char* message) {
    if (condition) return MF_OK;
    g_last_error = message;
    return MF_ERR_INVALID_ARG;
}

}  // namespace

extern "C" {

const char* mf_version(void) { return medfuse::engine_version(); }

const char* mf_last_error(void) { return g_last_error.c_str(); }

void mf_string_free(char* s) { std::free(s); }

mf_status mf_engine_create(const char* config_path, mf_engine** out) {
    if (auto s = require(config_path && out, "config_path and out must be non-null")) return s;
    return guarded([&] {
        auto engine = new mf_engine{Engine::from_config_file(config_path)};
        *out = engine;
        return MF_OK;
    });
}

mf_status mf_engine_create_from_json(const char* config_json, mf_engine** out) {
    if (auto s = require(config_json && out, "config_json and out must be non-null")) return s;
    return guarded([&] {
        auto engine = new mf_engine{Engine::from_config_json(config_json)};
        *out = engine;
        return MF_OK;
    });
}

void mf_engine_destroy(mf_engine* engine) { delete engine; }

mf_status mf_run(mf_engine* engine, const char* questions_jsonl, const char* lang,
                 const char* ablation, const char* out_results, mf_run_stats* stats) {
    if (auto s = require(engine && questions_jsonl && out_results,
                         "engine, questions_jsonl and out_results must be non-null")) {
        return s;
    }
    return guarded([&] {
        auto outcome = engine->impl->run_dataset(
            questions_jsonl, out_results,
            lang ? std::optional<std::string>(lang) : std::nullopt,
            ablation ? std::optional<std::string>(ablation) : std::nullopt);
        if (stats) {
            stats->items = outcome.items;
            stats->failures = outcome.failures;
            stats->provider_calls = outcome.provider_calls;
        }
        if (outcome.failures > 0) {
            g_last_error = std::to_string(outcome.failures) + " item(s) failed";
            return MF_ERR_ITEM_FAILURES;
        }
        return MF_OK;
    });
}

mf_status mf_answer(mf_engine* engine, const char* question_json, char** result_json) {
    if (auto s = require(engine && question_json && result_json,
                         "engine, question_json and result_json must be non-null")) {
        return s;
    }
    return guarded([&] {
        auto q = medfuse::Question::from_json(nlohmann::json::parse(question_json, nullptr, true));
        auto result = engine->impl->answer(q);
        nlohmann::json j;
        if (result.ok()) {
            j = result.record->to_json();
        } else {
            j["question_id"] = result.question_id;
            j["error"] = *result.error;
        }
        *result_json = dup_string(j.dump());
        if (!result.ok()) {
            g_last_error = *result.error;
            return MF_ERR_ITEM_FAILURES;
        }
        return MF_OK;
    });
}

mf_status mf_kb_ingest(mf_engine* engine, const char* docs_jsonl, char** report_json) {
    if (auto s = require(engine && docs_jsonl, "engine and docs_jsonl must be non-null")) return s;
    return guarded([&] {
        auto report = engine->impl->kb_ingest(docs_jsonl);
        if (report_json) {
            nlohmann::json per_language = nlohmann::json::object();
            for (const auto& [lang, count] : report.per_language) {
                per_language[std::string(medfuse::to_tag(lang))] = count;
            }
            nlohmann::json j;
            j["per_language"] = per_language;
            j["input_documents"] = report.input_documents;
            j["chunks_created"] = report.chunks_created;
            *report_json = dup_string(j.dump());
        }
        return MF_OK;
    });
}

mf_status mf_kb_stats(mf_engine* engine, char** report_json) {
    if (auto s = require(engine && report_json, "engine and report_json must be non-null")) return s;
    return guarded([&] {
        nlohmann::json j = nlohmann::json::object();
        for (const auto& [lang, count] : engine->impl->kb_stats()) {
            j[std::string(medfuse::to_tag(lang))] = count;
        }
        *report_json = dup_string(j.dump());
        return MF_OK;
    });
}

mf_status mf_eval(mf_engine* engine, const char* task, const char* pred_jsonl,
                  const char* gold_jsonl, const char* out_report, char** report_json) {
    if (auto s = require(engine && task && pred_jsonl && gold_jsonl,
                         "engine, task, pred_jsonl and gold_jsonl must be non-null")) {
        return s;
    }
    return guarded([&] {
        auto outcome = engine->impl->evaluate(
            medfuse::parse_task(task), pred_jsonl, gold_jsonl,
            out_report ? std::optional<std::filesystem::path>(out_report) : std::nullopt);
        if (report_json) {
            nlohmann::json j = outcome.report.to_json();
            j["scored"] = outcome.scored;
            j["errors"] = outcome.errors;
            j["table"] = outcome.report.render_table();
            *report_json = dup_string(j.dump());
        }
        return MF_OK;
    });
}

mf_status mf_distill(mf_engine* engine, const char* train_jsonl, const char* out_jsonl,
                     mf_distill_stats* stats) {
    if (auto s = require(engine && train_jsonl && out_jsonl,
                         "engine, train_jsonl and out_jsonl must be non-null")) {
        return s;
    }
    return guarded([&] {
        auto result = engine->impl->distill(train_jsonl, out_jsonl);
        if (stats) {
            stats->emitted = result.emitted;
            stats->skipped_incorrect = result.skipped_incorrect;
            stats->skipped_error = result.skipped_error;
        }
        return MF_OK;
    });
}

mf_status mf_cache_clear(mf_engine* engine, int64_t* removed) {
    if (auto s = require(engine != nullptr, "engine must be non-null")) return s;
    return guarded([&] {
        auto n = engine->impl->cache_clear();
        if (removed) *removed = static_cast<int64_t>(n);
        return MF_OK;
    });
}

int64_t mf_provider_invocations(const mf_engine* engine) {
    if (!engine) return -1;
    return engine->impl->gateway().stats().provider_invocations.load();
}

}  // extern "C"
