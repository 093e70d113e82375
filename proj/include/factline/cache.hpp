#pragma once

// Content-addressed disk cache with immutable entries. Values are stored with
// a checksum header so truncated or edited files read back as misses (with a
// warning) instead of poisoning a run; the next put heals the entry.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace factline::pipeline {

class DiskCache {
  public:
    explicit DiskCache(std::filesystem::path dir);

    const std::filesystem::path& dir() const { return dir_; }

    // Stable key for a composite identity such as (operation, template, model,
    // input). Field boundaries are part of the hash.
    static std::string key_of(const std::vector<std::string>& parts);

    std::optional<std::string> get(const std::string& key) const;
    // First write wins; existing entries are never rewritten.
    void put(const std::string& key, const std::string& value) const;

    std::filesystem::path entry_path(const std::string& key) const;

  private:
    std::filesystem::path dir_;
};

}  // namespace factline::pipeline
