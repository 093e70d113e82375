#pragma once

// Embedding cache file: little-endian header (magic, count, dim) followed by
// row-major float32 data, keyed by a sidecar text-hash index (<path>.idx.jsonl
// with records {"sha256": ..., "row": ...}).

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace factline::io {

void write_embedding_cache(const std::filesystem::path& path,
                           const std::vector<std::string>& texts, const Eigen::MatrixXd& rows);

// Looks up each text through the sidecar index; throws InputError when a text
// is not cached.
Eigen::MatrixXd read_embedding_cache(const std::filesystem::path& path,
                                     const std::vector<std::string>& texts);

struct EmbeddingCacheContent {
    Eigen::MatrixXd rows;
    std::vector<std::string> hashes;  // row order
};
EmbeddingCacheContent read_embedding_cache_all(const std::filesystem::path& path);

}  // namespace factline::io
