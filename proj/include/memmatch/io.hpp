#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace memmatch {

uint64_t fnv1a64(const void* data, size_t len, uint64_t seed = 0xcbf29ce484222325ULL);
uint64_t fnv1a64_str(const std::string& s);
uint64_t fnv1a64_file(const std::string& path);
std::string hex64(uint64_t v);

std::string read_file(const std::string& path);
std::vector<std::string> read_lines(const std::string& path);

/// Writes to <path>.tmp then renames, so readers never observe partial files.
void write_file_atomic(const std::string& path, const std::string& contents);

void ensure_dir(const std::string& path);
bool file_exists(const std::string& path);

/// Advisory flock on <path>; blocks until acquired, released on destruction.
class FileLock {
  public:
    explicit FileLock(const std::string& path);
    ~FileLock();
    FileLock(const FileLock&) = delete;
    FileLock& operator=(const FileLock&) = delete;

  private:
    int fd_ = -1;
};

// Little-endian binary primitives for the checkpoint / cache formats.
void put_u32(std::string& out, uint32_t v);
void put_u64(std::string& out, uint64_t v);
void put_i64(std::string& out, int64_t v);
void put_f32(std::string& out, float v);

class BinReader {
  public:
    explicit BinReader(const std::string& buf) : buf_(buf) {}
    uint32_t u32();
    uint64_t u64();
    int64_t i64();
    float f32();
    std::string bytes(size_t n);
    bool at_end() const { return pos_ == buf_.size(); }

  private:
    const std::string& buf_;
    size_t pos_ = 0;
    void need(size_t n);
};

}  // namespace memmatch
