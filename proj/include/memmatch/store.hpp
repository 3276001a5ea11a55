#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace memmatch {

/// Flat store of pooled memory vectors as f32, addressable by row. The
/// f32 representation is authoritative for search distances so that a
/// store rebuilt from its cache file is bit-identical to a fresh build.
struct MemoryStore {
    int level = 0;
    int m = 0;
    std::vector<int64_t> ids;
    std::vector<float> data;  // ids.size() * m

    int64_t size() const { return static_cast<int64_t>(ids.size()); }
    const float* row(int64_t i) const { return data.data() + static_cast<size_t>(i) * m; }
    void add(int64_t id, const std::vector<float>& g);
};

/// Cache file: magic "MMVC", u32 version, u32 level, u32 m, u64 count,
/// then count records of (i64 id, m little-endian f32).
void save_store(const MemoryStore& store, const std::string& path);
MemoryStore load_store(const std::string& path);

/// Header check without reading the payload.
bool store_cache_compatible(const std::string& path, int level, int m);

}  // namespace memmatch
