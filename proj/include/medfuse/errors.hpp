#pragma once

#include <stdexcept>
#include <string>

namespace medfuse {

// Every failure mode the library reports. Codes map 1:1 onto the C API
// status values (see medfuse.h); keep the two enums in sync.
enum class ErrorCode {
    invalid_argument,
    config,
    io,
    parse,
    provider,           // transport/provider failure (retryable)
    not_found,
    unknown_language,
    missing_binding,
    empty_text,
    dimension_mismatch,
    zero_vector,
    no_list_found,
    unparseable_output,
    empty_chain,
    empty_backbone,
    duplicate_id,
    empty_partition,
    no_valid_label,
    judge_parse,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

}  // namespace medfuse
