#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fashioncut/tensor.hpp"

namespace fashioncut {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat archive of named arrays (plus string payloads) with a format-version
// entry. Binary little-endian; writes are temp-file + rename so a checkpoint
// on disk is always complete.
class ArrayArchive {
 public:
  static constexpr const char* kFormatVersion = "fashioncut-archive-1";

  void put_tensor(const std::string& name, const Tensor<float>& t);
  void put_scalar_i64(const std::string& name, int64_t v);
  void put_scalar_u64(const std::string& name, uint64_t v);
  void put_string(const std::string& name, const std::string& v);

  bool has(const std::string& name) const;
  const Tensor<float>& tensor(const std::string& name) const;
  int64_t scalar_i64(const std::string& name) const;
  uint64_t scalar_u64(const std::string& name) const;
  const std::string& string(const std::string& name) const;

  std::vector<std::string> names() const;

  void save(const std::string& path) const;
  static ArrayArchive load(const std::string& path);

 private:
  enum class Kind : uint8_t { kF32 = 0, kI64 = 1, kU64 = 2, kBytes = 3 };
  struct Entry {
    Kind kind;
    Tensor<float> tensor;
    int64_t i64 = 0;
    uint64_t u64 = 0;
    std::string bytes;
  };
  std::map<std::string, Entry> entries_;
};

}  // namespace fashioncut
