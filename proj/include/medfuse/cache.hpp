#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "medfuse/chat.hpp"

namespace medfuse {

// Identity of one completion request; the digest is the cache file name.
struct CacheKey {
    std::string provider;
    std::string model_id;
    std::string prompt_sha256;  // over system + "\x1e" + user
    double temperature = 0.7;
    std::optional<int64_t> seed_hint;

    std::string digest() const;
};

// Directory of content-addressed response files, one JSON value each.
// Values are immutable once written; concurrent writers of the same key are
// idempotent (write-temp + rename).
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir);

    std::optional<ChatResponse> lookup(const CacheKey& key) const;
    void store(const CacheKey& key, const ChatResponse& response) const;

    // Removes every entry; returns the number removed.
    size_t clear() const;

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
};

}  // namespace medfuse
