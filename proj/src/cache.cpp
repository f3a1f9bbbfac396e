#include "medfuse/cache.hpp"

#include <chrono>
#include <cstdio>

#include <json.hpp>

#include "medfuse/digest.hpp"
#include "medfuse/errors.hpp"
#include "medfuse/io.hpp"

namespace medfuse {

const char* to_string(FinishState state) {
    switch (state) {
        case FinishState::complete: return "complete";
        case FinishState::truncated: return "truncated";
        case FinishState::refused: return "refused";
    }
    return "complete";
}

FinishState parse_finish_state(std::string_view name) {
    if (name == "complete") return FinishState::complete;
    if (name == "truncated") return FinishState::truncated;
    if (name == "refused") return FinishState::refused;
    throw Error(ErrorCode::parse, "unknown finish state: '" + std::string(name) + "'");
}

std::string CacheKey::digest() const {
    char temp_buf[32];
    std::snprintf(temp_buf, sizeof(temp_buf), "%.6f", temperature);
    std::string canonical = provider + "\n" + model_id + "\n" + prompt_sha256 + "\n" + temp_buf +
                            "\n" + (seed_hint ? std::to_string(*seed_hint) : "-");
    return sha256_hex(canonical);
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    if (dir_.empty()) throw Error(ErrorCode::config, "cache directory path is empty");
    std::filesystem::create_directories(dir_);
}

std::optional<ChatResponse> ResponseCache::lookup(const CacheKey& key) const {
    auto path = dir_ / (key.digest() + ".json");
    if (!std::filesystem::exists(path)) return std::nullopt;
    try {
        auto j = nlohmann::json::parse(read_file(path));
        ChatResponse resp;
        resp.text = j.at("response").at("text").get<std::string>();
        resp.finish_state = parse_finish_state(j.at("response").at("finish_state").get<std::string>());
        resp.provider_latency_ms = j.at("response").at("provider_latency_ms").get<int64_t>();
        return resp;
    } catch (const std::exception&) {
        // A torn or corrupt entry is a miss; the next store overwrites it.
        return std::nullopt;
    }
}

void ResponseCache::store(const CacheKey& key, const ChatResponse& response) const {
    nlohmann::json j;
    j["provider"] = key.provider;
    j["model_id"] = key.model_id;
    j["prompt_sha256"] = key.prompt_sha256;
    j["temperature"] = key.temperature;
    if (key.seed_hint) j["seed_hint"] = *key.seed_hint;
    j["created_at"] = std::chrono::duration_cast<std::chrono::seconds>(
                          std::chrono::system_clock::now().time_since_epoch())
                          .count();
    j["response"] = {{"text", response.text},
                     {"finish_state", to_string(response.finish_state)},
                     {"provider_latency_ms", response.provider_latency_ms}};
    atomic_write_file(dir_ / (key.digest() + ".json"), j.dump());
}

size_t ResponseCache::clear() const {
    size_t removed = 0;
    if (!std::filesystem::exists(dir_)) return 0;
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            std::filesystem::remove(entry.path());
            ++removed;
        }
    }
    return removed;
}

}  // namespace medfuse
