#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace syco {

using json = nlohmann::json;

// Calls fn(line_number, parsed) for every non-blank line. Line numbers are 1-based.
// Malformed JSON raises ParseError(line).
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(std::size_t, const json&)>& fn);

std::vector<json> read_jsonl(const std::filesystem::path& path);

// Serializes one object per line with sorted keys (nlohmann default), '\n' endings.
void write_jsonl(const std::filesystem::path& path, const std::vector<json>& records);

std::string read_file(const std::filesystem::path& path);

// write-temp-then-rename so readers never observe a partial file.
void atomic_write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace syco
