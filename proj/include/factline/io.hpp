#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace factline::io {

using json = nlohmann::json;

std::string slurp(const std::filesystem::path& path);
std::vector<std::string> read_lines(const std::filesystem::path& path);

// Writes via a temp file in the same directory followed by rename, so readers
// never observe partial content.
void atomic_write(const std::filesystem::path& path, const std::string& content);

std::vector<json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<json>& records);

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

std::string format_double(double v);  // shortest round-trip text

}  // namespace factline::io
