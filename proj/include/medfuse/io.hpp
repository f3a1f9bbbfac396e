#pragma once

#include <filesystem>
#include <functional>
#include <string>

#include <json.hpp>

namespace medfuse {

std::string read_file(const std::filesystem::path& path);

// Write-to-temp + rename, so concurrent writers of the same content are
// idempotent and readers never observe a torn file.
void atomic_write_file(const std::filesystem::path& path, std::string_view content);

// Calls fn(parsed, line_no) for every non-blank line; parse failures and
// fn exceptions are rethrown as Error(parse) with the 1-based line number.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const nlohmann::json&, size_t)>& fn);

}  // namespace medfuse
