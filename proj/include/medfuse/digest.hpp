#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace medfuse {

// Stable 64-bit FNV-1a. Used wherever we need a cheap cross-process
// deterministic hash (mock provider/embedder seeding).
uint64_t fnv1a64(std::string_view data);

// Hex-encoded SHA-256, used for cache keys and run manifests.
std::string sha256_hex(std::string_view data);

// First 12 hex chars of the SHA-256; enough for stage-trace digests.
std::string short_digest(std::string_view data);

}  // namespace medfuse
