#pragma once

// Shared test scaffolding: throwaway directories, table-driven embedders,
// scripted/recording providers and small dataset builders.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "medfuse/embedding.hpp"
#include "medfuse/errors.hpp"
#include "medfuse/gateway.hpp"
#include "medfuse/knowledge.hpp"
#include "medfuse/types.hpp"

namespace medfuse::testing {

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<uint64_t> counter{0};
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("medfuse-" + tag + "-" + std::to_string(rd()) + "-" +
                 std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path file(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Embedder with an explicit text -> vector table; unknown texts throw so
// tests notice unplanned lookups.
class TableEmbedder : public Embedder {
public:
    explicit TableEmbedder(size_t dim) : dim_(dim) {}

    void set(const std::string& text, std::vector<double> values) {
        if (values.size() != dim_) throw std::runtime_error("table vector has wrong dim");
        table_[text] = std::move(values);
    }

    std::string name() const override { return "table"; }
    size_t dimension() const override { return dim_; }

protected:
    std::vector<EmbeddingVector> do_embed_batch(const std::vector<std::string>& texts) override {
        std::vector<EmbeddingVector> out;
        for (const auto& text : texts) {
            auto it = table_.find(text);
            if (it == table_.end()) throw std::runtime_error("no table vector for: " + text);
            out.push_back(EmbeddingVector{it->second});
        }
        return out;
    }

private:
    size_t dim_;
    std::map<std::string, std::vector<double>> table_;
};

// Counts invocations and optionally fails the first N calls with a
// retryable provider error; otherwise delegates to the mock.
class FlakyProvider : public Provider {
public:
    explicit FlakyProvider(int failures_before_success)
        : failures_left_(failures_before_success) {}

    std::string name() const override { return "flaky"; }
    ChatResponse complete(const ChatRequest& request) override {
        invocations.fetch_add(1);
        if (failures_left_.fetch_sub(1) > 0) {
            throw Error(ErrorCode::provider, "transient outage");
        }
        return inner_.complete(request);
    }

    std::atomic<int> invocations{0};

private:
    std::atomic<int> failures_left_;
    MockProvider inner_;
};

// Delegates to the mock but records every prompt; used for ablation
// soundness and independence checks.
class RecordingProvider : public Provider {
public:
    std::string name() const override { return "mock"; }
    ChatResponse complete(const ChatRequest& request) override {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            prompts.push_back((request.system ? *request.system + "\x1e" : std::string()) +
                              request.user);
        }
        invocations.fetch_add(1);
        return inner_.complete(request);
    }

    std::vector<std::string> snapshot() {
        std::lock_guard<std::mutex> lock(mutex_);
        return prompts;
    }

    std::vector<std::string> prompts;
    std::atomic<int> invocations{0};

private:
    std::mutex mutex_;
    MockProvider inner_;
};

// Produces stage-appropriate outputs like the mock, but answers mcqa
// questions with a fixed label so tests control correctness exactly.
class FixedAnswerProvider : public Provider {
public:
    explicit FixedAnswerProvider(std::string answer) : answer_(std::move(answer)) {}

    std::string name() const override { return "scripted"; }
    ChatResponse complete(const ChatRequest& request) override {
        ChatResponse resp = inner_.complete(request);
        bool is_json_stage =
            request.user.find("Your task is to assist healthcare professionals") != std::string::npos ||
            request.user.find("Your task is to generate a final clinical answer") != std::string::npos;
        if (is_json_stage) {
            auto j = nlohmann::json::parse(resp.text);
            j["answer"] = answer_;
            resp.text = j.dump();
        }
        return resp;
    }

private:
    std::string answer_;
    MockProvider inner_;
};

inline Question make_mcqa(const std::string& id, Lang lang, const std::string& text,
                          const std::vector<std::string>& option_texts, char gold) {
    Question q;
    q.id = id;
    q.task = Task::mcqa;
    q.language = lang;
    q.text = text;
    for (size_t i = 0; i < option_texts.size(); ++i) {
        q.options.emplace_back(static_cast<char>('A' + i), option_texts[i]);
    }
    q.gold = std::string(1, gold);
    return q;
}

inline std::vector<Question> synthetic_mcqa_set(int n, Lang lang) {
    static const char* kTopics[] = {
        "acute chest pain with radiation to the left arm",
        "persistent dry cough lasting six weeks",
        "progressive weakness in the lower limbs",
        "recurrent fever with night sweats",
        "sudden loss of vision in one eye",
        "chronic epigastric discomfort after meals",
        "painful swelling of the right knee",
        "intermittent palpitations during exercise",
        "gradual hearing loss in both ears",
        "unexplained weight loss over three months",
    };
    std::vector<Question> items;
    for (int i = 0; i < n; ++i) {
        items.push_back(make_mcqa(
            "q" + std::to_string(i + 1), lang,
            std::string("A patient presents with ") + kTopics[i % 10] + " (case " +
                std::to_string(i + 1) + "). Which management step is most appropriate first?",
            {"observation and reassessment", "targeted laboratory testing",
             "immediate imaging studies", "empiric pharmacotherapy"},
            static_cast<char>('A' + (i % 4))));
    }
    return items;
}

inline std::string questions_to_jsonl(const std::vector<Question>& items) {
    std::string out;
    for (const auto& q : items) out += q.to_json().dump() + "\n";
    return out;
}

inline std::vector<Document> synthetic_documents(Lang lang, int n, const std::string& stem) {
    std::vector<Document> docs;
    for (int i = 0; i < n; ++i) {
        Document d;
        d.id = stem + "-" + std::to_string(i + 1);
        d.language = lang;
        d.title = "Reference " + std::to_string(i + 1);
        d.text = "Guideline text about " + stem + " topic " + std::to_string(i + 1) +
                 ": management, diagnosis and follow-up considerations.";
        docs.push_back(std::move(d));
    }
    return docs;
}

}  // namespace medfuse::testing
