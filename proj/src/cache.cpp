#include "factline/cache.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "factline/common.hpp"
#include "factline/io.hpp"
#include "factline/sha256.hpp"

namespace factline::pipeline {
namespace {

constexpr const char* kMagic = "flcache1";

}  // namespace

DiskCache::DiskCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    if (dir_.empty()) throw UsageError("cache directory must not be empty");
    std::filesystem::create_directories(dir_);
}

std::string DiskCache::key_of(const std::vector<std::string>& parts) {
    Sha256 h;
    for (const auto& p : parts) {
        const std::string prefix = std::to_string(p.size()) + ":";
        h.update(prefix);
        h.update(p);
    }
    const auto d = h.digest();
    static constexpr char hex[] = "0123456789abcdef";
    std::string out(d.size() * 2, '0');
    for (std::size_t i = 0; i < d.size(); ++i) {
        out[2 * i] = hex[d[i] >> 4];
        out[2 * i + 1] = hex[d[i] & 0xf];
    }
    return out;
}

std::filesystem::path DiskCache::entry_path(const std::string& key) const {
    if (key.empty()) throw UsageError("cache key must not be empty");
    return dir_ / (key + ".entry");
}

std::optional<std::string> DiskCache::get(const std::string& key) const {
    const auto path = entry_path(key);
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string raw = buf.str();

    const auto warn = [&](const char* what) {
        std::fprintf(stderr, "warning: cache entry %s is %s; treating as a miss\n",
                     path.string().c_str(), what);
        return std::nullopt;
    };

    const auto nl = raw.find('\n');
    if (nl == std::string::npos) return warn("missing its header");
    std::istringstream header(raw.substr(0, nl));
    std::string magic, digest;
    std::size_t size = 0;
    if (!(header >> magic >> digest >> size) || magic != kMagic) return warn("malformed");
    const std::string value = raw.substr(nl + 1);
    if (value.size() != size) return warn("truncated");
    if (sha256_hex(value) != digest) return warn("corrupted");
    return value;
}

void DiskCache::put(const std::string& key, const std::string& value) const {
    const auto path = entry_path(key);
    if (std::filesystem::exists(path) && get(key).has_value()) return;
    std::string blob = kMagic;
    blob += " " + sha256_hex(value) + " " + std::to_string(value.size()) + "\n";
    blob += value;
    io::atomic_write(path, blob);
}

}  // namespace factline::pipeline
