#include "factline/embedding_cache.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include "factline/common.hpp"
#include "factline/io.hpp"
#include "factline/sha256.hpp"

namespace factline::io {

namespace {
constexpr char kMagic[8] = {'F', 'L', 'E', 'C', '0', '0', '0', '1'};
}

void write_embedding_cache(const std::filesystem::path& path,
                           const std::vector<std::string>& texts, const Eigen::MatrixXd& rows) {
    if (static_cast<Eigen::Index>(texts.size()) != rows.rows()) {
        throw ContractError("embedding cache: one text per row required");
    }
    std::string buf;
    buf.append(kMagic, sizeof(kMagic));
    const std::uint64_t count = texts.size();
    const std::uint32_t dim = static_cast<std::uint32_t>(rows.cols());
    buf.append(reinterpret_cast<const char*>(&count), sizeof(count));
    buf.append(reinterpret_cast<const char*>(&dim), sizeof(dim));
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
        for (Eigen::Index c = 0; c < rows.cols(); ++c) {
            const float f = static_cast<float>(rows(r, c));
            buf.append(reinterpret_cast<const char*>(&f), sizeof(f));
        }
    }
    atomic_write(path, buf);

    std::vector<json> index;
    index.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
        index.push_back({{"sha256", sha256_hex(texts[i])}, {"row", i}});
    }
    write_jsonl(path.string() + ".idx.jsonl", index);
}

EmbeddingCacheContent read_embedding_cache_all(const std::filesystem::path& path) {
    const std::string buf = slurp(path);
    if (buf.size() < sizeof(kMagic) + 12 || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
        throw ParseError(path.string() + ": not an embedding cache file");
    }
    std::uint64_t count = 0;
    std::uint32_t dim = 0;
    std::memcpy(&count, buf.data() + sizeof(kMagic), sizeof(count));
    std::memcpy(&dim, buf.data() + sizeof(kMagic) + sizeof(count), sizeof(dim));
    const std::size_t header = sizeof(kMagic) + sizeof(count) + sizeof(dim);
    if (buf.size() != header + count * dim * sizeof(float)) {
        throw ParseError(path.string() + ": truncated embedding cache");
    }
    EmbeddingCacheContent out;
    out.rows.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim));
    const char* p = buf.data() + header;
    for (std::uint64_t r = 0; r < count; ++r) {
        for (std::uint32_t c = 0; c < dim; ++c) {
            float f;
            std::memcpy(&f, p, sizeof(f));
            p += sizeof(f);
            out.rows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = f;
        }
    }
    out.hashes.resize(count);
    for (const auto& j : read_jsonl(path.string() + ".idx.jsonl")) {
        const auto row = j.at("row").get<std::uint64_t>();
        if (row >= count) throw ParseError(path.string() + ": index row out of range");
        out.hashes[row] = j.at("sha256").get<std::string>();
    }
    return out;
}

Eigen::MatrixXd read_embedding_cache(const std::filesystem::path& path,
                                     const std::vector<std::string>& texts) {
    const EmbeddingCacheContent content = read_embedding_cache_all(path);
    std::map<std::string, std::size_t> by_hash;
    for (std::size_t i = 0; i < content.hashes.size(); ++i) by_hash[content.hashes[i]] = i;
    Eigen::MatrixXd out(static_cast<Eigen::Index>(texts.size()), content.rows.cols());
    for (std::size_t i = 0; i < texts.size(); ++i) {
        const auto it = by_hash.find(sha256_hex(texts[i]));
        if (it == by_hash.end()) {
            throw InputError(path.string() + ": no cached embedding for text '" + texts[i] + "'");
        }
        out.row(static_cast<Eigen::Index>(i)) = content.rows.row(static_cast<Eigen::Index>(it->second));
    }
    return out;
}

}  // namespace factline::io
