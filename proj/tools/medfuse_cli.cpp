// medfuse command-line driver. Everything goes through the C API in
// medfuse.h; this binary only parses flags, prints results and maps
// statuses onto exit codes (0 ok, 1 item-level failures, 2 usage/config).

#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "medfuse.h"

namespace {

int exit_code_for(mf_status status) {
    switch (status) {
        case MF_OK: return 0;
        case MF_ERR_ITEM_FAILURES: return 1;
        default: return 2;
    }
}

int fail(mf_status status) {
    std::fprintf(stderr, "error: %s\n", mf_last_error());
    return exit_code_for(status);
}

struct EngineHandle {
    mf_engine* ptr = nullptr;
    ~EngineHandle() { mf_engine_destroy(ptr); }
};

int with_engine(const std::string& config_path, EngineHandle& engine) {
    mf_status status = mf_engine_create(config_path.c_str(), &engine.ptr);
    if (status != MF_OK) return fail(status);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"medfuse: cross-lingual medical QA engine"};
    app.require_subcommand(1);

    std::string config_path;
    std::string questions, out, lang, ablation;
    std::string task, pred, gold, report_out;
    std::string train;
    std::string docs;

    auto* run = app.add_subcommand("run", "Answer a question dataset");
    run->add_option("--config", config_path, "Engine configuration file")->required();
    run->add_option("questions", questions, "Line-delimited question file")->required();
    run->add_option("--lang", lang, "Restrict the run to one language tag");
    run->add_option("--ablation", ablation, "full | no_rag | no_english | no_local");
    run->add_option("--out", out, "Results output path")->required();

    auto* eval = app.add_subcommand("eval", "Score a results file against golds");
    eval->add_option("--config", config_path, "Engine configuration file")->required();
    eval->add_option("--task", task, "mcqa | nli | lfqa")->required();
    eval->add_option("--pred", pred, "Results file from 'run'")->required();
    eval->add_option("--gold", gold, "Gold question file")->required();
    eval->add_option("--out", report_out, "Report output path (lines + .txt table)");

    auto* kb = app.add_subcommand("kb", "Knowledge base maintenance");
    kb->require_subcommand(1);
    auto* kb_ingest = kb->add_subcommand("ingest", "Ingest line-delimited documents");
    kb_ingest->add_option("--config", config_path, "Engine configuration file")->required();
    kb_ingest->add_option("docs", docs, "Document file: {id, lang, title, text} per line")->required();
    auto* kb_stats = kb->add_subcommand("stats", "Per-language document counts");
    kb_stats->add_option("--config", config_path, "Engine configuration file")->required();

    auto* distill = app.add_subcommand("distill", "Export correct-answer reasoning records");
    distill->add_option("--config", config_path, "Engine configuration file")->required();
    distill->add_option("--train", train, "Line-delimited mcqa question file")->required();
    distill->add_option("--out", out, "Output path for distillation records")->required();

    auto* cache = app.add_subcommand("cache", "Response cache maintenance");
    cache->require_subcommand(1);
    auto* cache_clear = cache->add_subcommand("clear", "Remove every cached response");
    cache_clear->add_option("--config", config_path, "Engine configuration file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints the message and usage hint
        return 2;
    }

    EngineHandle engine;
    if (int rc = with_engine(config_path, engine)) return rc;

    if (run->parsed()) {
        mf_run_stats stats{};
        mf_status status = mf_run(engine.ptr, questions.c_str(), lang.empty() ? nullptr : lang.c_str(),
                                  ablation.empty() ? nullptr : ablation.c_str(), out.c_str(), &stats);
        if (status != MF_OK && status != MF_ERR_ITEM_FAILURES) return fail(status);
        std::printf("answered %lld item(s), %lld failure(s), %lld provider call(s)\n",
                    static_cast<long long>(stats.items), static_cast<long long>(stats.failures),
                    static_cast<long long>(stats.provider_calls));
        std::printf("results: %s\nmanifest: %s.manifest.json\n", out.c_str(), out.c_str());
        return exit_code_for(status);
    }

    if (eval->parsed()) {
        char* report_json = nullptr;
        mf_status status = mf_eval(engine.ptr, task.c_str(), pred.c_str(), gold.c_str(),
                                   report_out.empty() ? nullptr : report_out.c_str(), &report_json);
        if (status != MF_OK) return fail(status);
        auto j = nlohmann::json::parse(report_json);
        mf_string_free(report_json);
        std::printf("%s", j.at("table").get<std::string>().c_str());
        if (!report_out.empty()) {
            std::printf("report: %s (table: %s.txt)\n", report_out.c_str(), report_out.c_str());
        }
        return 0;
    }

    if (kb_ingest->parsed()) {
        char* report_json = nullptr;
        mf_status status = mf_kb_ingest(engine.ptr, docs.c_str(), &report_json);
        if (status != MF_OK) return fail(status);
        auto j = nlohmann::json::parse(report_json);
        mf_string_free(report_json);
        std::printf("ingested %d document(s)", j.at("input_documents").get<int>());
        if (j.at("chunks_created").get<int>() > 0) {
            std::printf(" (%d chunk(s))", j.at("chunks_created").get<int>());
        }
        std::printf("\n");
        for (auto& [tag, count] : j.at("per_language").items()) {
            std::printf("  %s: %d\n", tag.c_str(), count.get<int>());
        }
        return 0;
    }

    if (kb_stats->parsed()) {
        char* report_json = nullptr;
        mf_status status = mf_kb_stats(engine.ptr, &report_json);
        if (status != MF_OK) return fail(status);
        auto j = nlohmann::json::parse(report_json);
        mf_string_free(report_json);
        std::printf("Language  Documents\n");
        for (auto& [tag, count] : j.items()) {
            std::printf("%-8s  %d\n", tag.c_str(), count.get<int>());
        }
        return 0;
    }

    if (distill->parsed()) {
        mf_distill_stats stats{};
        mf_status status = mf_distill(engine.ptr, train.c_str(), out.c_str(), &stats);
        if (status != MF_OK) return fail(status);
        std::printf("emitted %lld record(s); skipped %lld incorrect, %lld errored\n",
                    static_cast<long long>(stats.emitted),
                    static_cast<long long>(stats.skipped_incorrect),
                    static_cast<long long>(stats.skipped_error));
        return 0;
    }

    if (cache_clear->parsed()) {
        int64_t removed = 0;
        mf_status status = mf_cache_clear(engine.ptr, &removed);
        if (status != MF_OK) return fail(status);
        std::printf("removed %lld cache entrie(s)\n", static_cast<long long>(removed));
        return 0;
    }

    return 2;
}
