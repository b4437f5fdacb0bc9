#include "fashioncut/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace fashioncut {

namespace {

constexpr char kMagic[8] = {'F', 'C', 'A', 'R', '0', '0', '0', '1'};

template <class T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw CheckpointError("archive: truncated read");
  return v;
}

void write_name(std::ostream& os, const std::string& name) {
  if (name.size() > 0xffff) throw CheckpointError("archive: name too long");
  write_pod<uint16_t>(os, static_cast<uint16_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
}

std::string read_name(std::istream& is) {
  uint16_t len = read_pod<uint16_t>(is);
  std::string s(len, '\0');
  is.read(s.data(), len);
  if (!is) throw CheckpointError("archive: truncated name");
  return s;
}

}  // namespace

void ArrayArchive::put_tensor(const std::string& name, const Tensor<float>& t) {
  Entry e;
  e.kind = Kind::kF32;
  e.tensor = t;
  entries_[name] = std::move(e);
}

void ArrayArchive::put_scalar_i64(const std::string& name, int64_t v) {
  Entry e;
  e.kind = Kind::kI64;
  e.i64 = v;
  entries_[name] = std::move(e);
}

void ArrayArchive::put_scalar_u64(const std::string& name, uint64_t v) {
  Entry e;
  e.kind = Kind::kU64;
  e.u64 = v;
  entries_[name] = std::move(e);
}

void ArrayArchive::put_string(const std::string& name, const std::string& v) {
  Entry e;
  e.kind = Kind::kBytes;
  e.bytes = v;
  entries_[name] = std::move(e);
}

bool ArrayArchive::has(const std::string& name) const { return entries_.count(name) > 0; }

const Tensor<float>& ArrayArchive::tensor(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end() || it->second.kind != Kind::kF32)
    throw CheckpointError("archive: missing tensor entry '" + name + "'");
  return it->second.tensor;
}

int64_t ArrayArchive::scalar_i64(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end() || it->second.kind != Kind::kI64)
    throw CheckpointError("archive: missing i64 entry '" + name + "'");
  return it->second.i64;
}

uint64_t ArrayArchive::scalar_u64(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end() || it->second.kind != Kind::kU64)
    throw CheckpointError("archive: missing u64 entry '" + name + "'");
  return it->second.u64;
}

const std::string& ArrayArchive::string(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end() || it->second.kind != Kind::kBytes)
    throw CheckpointError("archive: missing string entry '" + name + "'");
  return it->second.bytes;
}

std::vector<std::string> ArrayArchive::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [k, v] : entries_) out.push_back(k);
  return out;
}

void ArrayArchive::save(const std::string& path) const {
  std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw CheckpointError("archive: cannot open for writing: " + tmp);
    os.write(kMagic, sizeof(kMagic));
    write_name(os, kFormatVersion);
    write_pod<uint32_t>(os, static_cast<uint32_t>(entries_.size()));
    for (const auto& [name, e] : entries_) {
      write_name(os, name);
      write_pod<uint8_t>(os, static_cast<uint8_t>(e.kind));
      switch (e.kind) {
        case Kind::kF32: {
          write_pod<uint8_t>(os, static_cast<uint8_t>(e.tensor.ndim()));
          for (int d = 0; d < e.tensor.ndim(); ++d) write_pod<int64_t>(os, e.tensor.dim(d));
          os.write(reinterpret_cast<const char*>(e.tensor.data()),
                   static_cast<std::streamsize>(e.tensor.numel() * sizeof(float)));
          break;
        }
        case Kind::kI64: write_pod<int64_t>(os, e.i64); break;
        case Kind::kU64: write_pod<uint64_t>(os, e.u64); break;
        case Kind::kBytes: {
          write_pod<uint64_t>(os, e.bytes.size());
          os.write(e.bytes.data(), static_cast<std::streamsize>(e.bytes.size()));
          break;
        }
      }
    }
    if (!os) throw CheckpointError("archive: write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw CheckpointError("archive: rename failed: " + path + " (" + ec.message() + ")");
}

ArrayArchive ArrayArchive::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("archive: cannot open: " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw CheckpointError("archive: bad magic in " + path);
  std::string version = read_name(is);
  if (version != kFormatVersion)
    throw CheckpointError("archive: unsupported format version '" + version + "' in " + path);

  ArrayArchive a;
  uint32_t count = read_pod<uint32_t>(is);
  for (uint32_t i = 0; i < count; ++i) {
    std::string name = read_name(is);
    Kind kind = static_cast<Kind>(read_pod<uint8_t>(is));
    Entry e;
    e.kind = kind;
    switch (kind) {
      case Kind::kF32: {
        uint8_t ndim = read_pod<uint8_t>(is);
        std::vector<int64_t> shape(ndim);
        for (auto& d : shape) d = read_pod<int64_t>(is);
        Tensor<float> t(shape);
        is.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(t.numel() * sizeof(float)));
        if (!is) throw CheckpointError("archive: truncated tensor '" + name + "'");
        e.tensor = std::move(t);
        break;
      }
      case Kind::kI64: e.i64 = read_pod<int64_t>(is); break;
      case Kind::kU64: e.u64 = read_pod<uint64_t>(is); break;
      case Kind::kBytes: {
        uint64_t len = read_pod<uint64_t>(is);
        e.bytes.resize(len);
        is.read(e.bytes.data(), static_cast<std::streamsize>(len));
        if (!is) throw CheckpointError("archive: truncated string '" + name + "'");
        break;
      }
      default: throw CheckpointError("archive: unknown entry kind in " + path);
    }
    a.entries_[name] = std::move(e);
  }
  return a;
}

}  // namespace fashioncut
