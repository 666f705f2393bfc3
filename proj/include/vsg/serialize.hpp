#pragma once

#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "vsg/optim.hpp"

namespace vsg {

// ---------------------------------------------------------------------------
// Array container: fixed-width text headers followed by raw little-endian
// data. Layout per file:
//   24-byte file header: "vsgarr-1" + 8 spaces + "%08d" array count
//   per array: 192-byte header (name:64, dtype:4, rank:4, extents: 8 x 15),
//   then the raw bytes with no padding.

struct ArrayData {
  std::string name;
  std::string dtype;  // "f32", "u8", "i32", "u64"
  std::vector<int64_t> extents;
  std::vector<uint8_t> bytes;

  int64_t count() const {
    int64_t n = 1;
    for (int64_t e : extents) n *= e;
    return n;
  }

  static int dtype_size(const std::string& d) {
    if (d == "f32" || d == "i32") return 4;
    if (d == "u8") return 1;
    if (d == "u64") return 8;
    fail<IoError>("array file: unknown dtype '", d, "'");
  }

  static ArrayData from_floats(std::string name, std::vector<int64_t> extents,
                               const std::vector<float>& v) {
    ArrayData a{std::move(name), "f32", std::move(extents), {}};
    a.bytes.resize(v.size() * 4);
    std::memcpy(a.bytes.data(), v.data(), a.bytes.size());
    VSG_CHECK(a.count() == static_cast<int64_t>(v.size()), "array ", a.name, ": extent/count mismatch");
    return a;
  }

  static ArrayData from_bytes(std::string name, std::vector<int64_t> extents,
                              std::vector<uint8_t> v) {
    ArrayData a{std::move(name), "u8", std::move(extents), std::move(v)};
    VSG_CHECK(a.count() == static_cast<int64_t>(a.bytes.size()), "array ", a.name,
              ": extent/count mismatch");
    return a;
  }

  std::vector<float> as_floats() const {
    VSG_CHECK(dtype == "f32", "array ", name, ": expected f32, got ", dtype);
    std::vector<float> v(bytes.size() / 4);
    std::memcpy(v.data(), bytes.data(), bytes.size());
    return v;
  }
};

namespace detail {
inline void put_padded(std::string& dst, const std::string& s, size_t width) {
  VSG_CHECK(s.size() <= width, "array file: field too long: ", s);
  dst += s;
  dst.append(width - s.size(), ' ');
}
}  // namespace detail

inline void write_array_file(const std::string& path, const std::vector<ArrayData>& arrays) {
  std::ofstream f(path, std::ios::binary);
  VSG_CHECK(f.good(), "cannot open for write: ", path);
  char head[25];
  std::snprintf(head, sizeof(head), "vsgarr-1        %08d", static_cast<int>(arrays.size()));
  f.write(head, 24);
  for (const auto& a : arrays) {
    VSG_CHECK(a.extents.size() <= 8, "array ", a.name, ": rank > 8");
    std::string h;
    h.reserve(192);
    detail::put_padded(h, a.name, 64);
    detail::put_padded(h, a.dtype, 4);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d", static_cast<int>(a.extents.size()));
    h += buf;
    for (size_t i = 0; i < 8; ++i) {
      const long long e = i < a.extents.size() ? static_cast<long long>(a.extents[i]) : 0;
      std::snprintf(buf, sizeof(buf), "%15lld", e);
      h += buf;
    }
    VSG_CHECK(h.size() == 192, "array header layout bug");
    f.write(h.data(), 192);
    f.write(reinterpret_cast<const char*>(a.bytes.data()),
            static_cast<std::streamsize>(a.bytes.size()));
  }
  VSG_CHECK(f.good(), "write failed: ", path);
}

inline std::vector<ArrayData> read_array_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  VSG_CHECK(f.good(), "cannot open: ", path);
  char head[24];
  f.read(head, 24);
  VSG_CHECK(f.gcount() == 24 && std::memcmp(head, "vsgarr-1", 8) == 0,
            "not a vsgarr-1 file: ", path);
  const int count = std::atoi(std::string(head + 16, 8).c_str());
  std::vector<ArrayData> out;
  for (int i = 0; i < count; ++i) {
    char h[192];
    f.read(h, 192);
    VSG_CHECK(f.gcount() == 192, "truncated array header in ", path);
    ArrayData a;
    a.name = std::string(h, 64);
    a.name.erase(a.name.find_last_not_of(' ') + 1);
    a.dtype = std::string(h + 64, 4);
    a.dtype.erase(a.dtype.find_last_not_of(' ') + 1);
    const int rank = std::atoi(std::string(h + 68, 4).c_str());
    for (int r = 0; r < rank; ++r)
      a.extents.push_back(std::atoll(std::string(h + 72 + r * 15, 15).c_str()));
    const int64_t nbytes = a.count() * ArrayData::dtype_size(a.dtype);
    a.bytes.resize(nbytes);
    f.read(reinterpret_cast<char*>(a.bytes.data()), nbytes);
    VSG_CHECK(f.gcount() == nbytes, "truncated array data in ", path);
    out.push_back(std::move(a));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoint: text manifest (name, dtype, shape, byte offset) then one flat
// binary blob. Version string "vsgwm-ckpt-1".

struct CheckpointManifest {
  std::map<std::string, std::string> meta;
  struct Entry {
    std::string name;
    Shape shape;
    int64_t offset = 0;
  };
  std::vector<Entry> entries;
};

inline void save_checkpoint(const std::string& path,
                            const std::vector<std::pair<std::string, const ParamRegistry*>>& groups,
                            const std::map<std::string, std::string>& meta) {
  std::ofstream f(path, std::ios::binary);
  VSG_CHECK(f.good(), "cannot open for write: ", path);
  f << "vsgwm-ckpt-1\n";
  for (const auto& [k, v] : meta) f << "meta " << k << " " << v << "\n";
  int64_t n = 0;
  for (auto& [_, reg] : groups) n += static_cast<int64_t>(reg->size());
  f << "params " << n << "\n";
  int64_t offset = 0;
  for (auto& [prefix, reg] : groups) {
    for (auto& [name, t] : reg->items()) {
      f << prefix << "/" << name << " f32 ";
      for (size_t i = 0; i < t.shape().size(); ++i) f << (i ? "x" : "") << t.shape()[i];
      f << " " << offset << "\n";
      offset += t.size() * 4;
    }
  }
  f << "blob " << offset << "\n";
  for (auto& [_, reg] : groups)
    for (auto& [name, t] : reg->items())
      f.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(t.size() * 4));
  VSG_CHECK(f.good(), "write failed: ", path);
}

struct LoadedCheckpoint {
  CheckpointManifest manifest;
  std::vector<uint8_t> blob;

  // Copies values into the registry; every parameter must be present with a
  // matching shape.
  void apply(const std::string& prefix, ParamRegistry& reg) const {
    for (auto& [name, t] : reg.items()) {
      const std::string full = prefix + "/" + name;
      const CheckpointManifest::Entry* found = nullptr;
      for (auto& e : manifest.entries)
        if (e.name == full) {
          found = &e;
          break;
        }
      VSG_CHECK(found, "checkpoint missing parameter: ", full);
      VSG_CHECK(found->shape == t.shape(), "checkpoint shape mismatch for ", full, ": file ",
                shape_str(found->shape), " vs model ", shape_str(t.shape()));
      Tensor dst = t;  // shared handle; drops constness of the pair element
      std::memcpy(dst.data(), blob.data() + found->offset, t.size() * 4);
    }
  }
};

inline LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  VSG_CHECK(f.good(), "cannot open: ", path);
  std::string line;
  std::getline(f, line);
  VSG_CHECK(line == "vsgwm-ckpt-1", "not a vsgwm-ckpt-1 checkpoint: ", path);
  LoadedCheckpoint out;
  int64_t n_params = -1;
  while (std::getline(f, line)) {
    if (line.rfind("meta ", 0) == 0) {
      const size_t sp = line.find(' ', 5);
      VSG_CHECK(sp != std::string::npos, "bad meta line: ", line);
      out.manifest.meta[line.substr(5, sp - 5)] = line.substr(sp + 1);
    } else if (line.rfind("params ", 0) == 0) {
      n_params = std::atoll(line.c_str() + 7);
      break;
    } else {
      fail<IoError>("unexpected checkpoint line: ", line);
    }
  }
  VSG_CHECK(n_params >= 0, "checkpoint has no params section: ", path);
  for (int64_t i = 0; i < n_params; ++i) {
    std::getline(f, line);
    CheckpointManifest::Entry e;
    // "<name> f32 <d0>x<d1>... <offset>"
    size_t p1 = line.find(' ');
    size_t p2 = line.find(' ', p1 + 1);
    size_t p3 = line.find(' ', p2 + 1);
    VSG_CHECK(p1 != std::string::npos && p2 != std::string::npos && p3 != std::string::npos,
              "bad manifest line: ", line);
    e.name = line.substr(0, p1);
    VSG_CHECK(line.substr(p1 + 1, p2 - p1 - 1) == "f32", "bad dtype in: ", line);
    std::string dims = line.substr(p2 + 1, p3 - p2 - 1);
    size_t pos = 0;
    while (pos < dims.size()) {
      size_t x = dims.find('x', pos);
      if (x == std::string::npos) x = dims.size();
      e.shape.push_back(std::atoi(dims.substr(pos, x - pos).c_str()));
      pos = x + 1;
    }
    e.offset = std::atoll(line.c_str() + p3 + 1);
    out.manifest.entries.push_back(std::move(e));
  }
  std::getline(f, line);
  VSG_CHECK(line.rfind("blob ", 0) == 0, "checkpoint missing blob header: ", path);
  const int64_t blob_size = std::atoll(line.c_str() + 5);
  out.blob.resize(blob_size);
  f.read(reinterpret_cast<char*>(out.blob.data()), blob_size);
  VSG_CHECK(f.gcount() == blob_size, "truncated checkpoint blob: ", path);
  return out;
}

}  // namespace vsg
