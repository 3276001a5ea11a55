#include "memmatch/store.hpp"

#include <cstring>
#include <stdexcept>

#include "memmatch/io.hpp"

namespace memmatch {

namespace {
constexpr char kMagic[4] = {'M', 'M', 'V', 'C'};
constexpr uint32_t kVersion = 1;
}  // namespace

void MemoryStore::add(int64_t id, const std::vector<float>& g) {
    if (static_cast<int>(g.size()) != m) throw std::invalid_argument("memory store: vector width mismatch");
    ids.push_back(id);
    data.insert(data.end(), g.begin(), g.end());
}

void save_store(const MemoryStore& store, const std::string& path) {
    std::string out;
    out.append(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<uint32_t>(store.level));
    put_u32(out, static_cast<uint32_t>(store.m));
    put_u64(out, static_cast<uint64_t>(store.ids.size()));
    for (size_t i = 0; i < store.ids.size(); ++i) {
        put_i64(out, store.ids[i]);
        for (int c = 0; c < store.m; ++c) put_f32(out, store.data[i * static_cast<size_t>(store.m) + c]);
    }
    write_file_atomic(path, out);
}

MemoryStore load_store(const std::string& path) {
    const std::string buf = read_file(path);
    BinReader r(buf);
    if (r.bytes(4) != std::string(kMagic, 4)) throw std::runtime_error("not a memory cache file: " + path);
    if (r.u32() != kVersion) throw std::runtime_error("memory cache version mismatch: " + path);
    MemoryStore store;
    store.level = static_cast<int>(r.u32());
    store.m = static_cast<int>(r.u32());
    const uint64_t count = r.u64();
    store.ids.reserve(count);
    store.data.reserve(count * static_cast<size_t>(store.m));
    for (uint64_t i = 0; i < count; ++i) {
        store.ids.push_back(r.i64());
        for (int c = 0; c < store.m; ++c) store.data.push_back(r.f32());
    }
    if (!r.at_end()) throw std::runtime_error("trailing bytes in memory cache file: " + path);
    return store;
}

bool store_cache_compatible(const std::string& path, int level, int m) {
    if (!file_exists(path)) return false;
    try {
        std::string buf = read_file(path);
        if (buf.size() < 16) return false;
        BinReader r(buf);
        if (r.bytes(4) != std::string(kMagic, 4)) return false;
        if (r.u32() != kVersion) return false;
        if (static_cast<int>(r.u32()) != level) return false;
        if (static_cast<int>(r.u32()) != m) return false;
        return true;
    } catch (const std::exception&) {
        return false;
    }
}

}  // namespace memmatch
