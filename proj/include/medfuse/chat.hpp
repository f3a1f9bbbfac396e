#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace medfuse {

enum class FinishState : uint8_t { complete, truncated, refused };

const char* to_string(FinishState state);
FinishState parse_finish_state(std::string_view name);

struct ChatRequest {
    std::string model_id;
    std::optional<std::string> system;
    std::string user;
    double temperature = 0.7;
    int max_output_tokens = 1024;
    std::optional<int64_t> seed_hint;
};

struct ChatResponse {
    std::string text;
    FinishState finish_state = FinishState::complete;
    int64_t provider_latency_ms = 0;
};

}  // namespace medfuse
