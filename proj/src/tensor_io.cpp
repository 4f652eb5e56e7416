// SPDX-License-Identifier: Apache-2.0
#include "cda/tensor_io.hpp"

#include <cstdio>
#include <cstring>

namespace cda {
namespace {

constexpr char kMagic[4] = {'C', 'D', 'A', '1'};
constexpr uint8_t kVersion = 1;

struct Writer {
  FILE* f;
  explicit Writer(const std::string& path) {
    f = std::fopen(path.c_str(), "wb");
    require(f != nullptr, "save_tensor: cannot open '" + path + "' for writing");
  }
  ~Writer() {
    if (f) std::fclose(f);
  }
  void bytes(const void* p, size_t n) {
    require(std::fwrite(p, 1, n, f) == n, "save_tensor: short write");
  }
  void u8(uint8_t v) { bytes(&v, 1); }
  void u32(uint32_t v) {
    uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                    static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
    bytes(b, 4);
  }
  void u64(uint64_t v) {
    u32(static_cast<uint32_t>(v));
    u32(static_cast<uint32_t>(v >> 32));
  }
  void f64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
};

struct Reader {
  FILE* f;
  size_t offset = 0;
  std::string path;
  explicit Reader(const std::string& p) : path(p) {
    f = std::fopen(p.c_str(), "rb");
    require(f != nullptr, "load_tensor: cannot open '" + p + "'");
  }
  ~Reader() {
    if (f) std::fclose(f);
  }
  void bytes(void* p, size_t n) {
    if (std::fread(p, 1, n, f) != n)
      fail("load_tensor: '" + path + "' truncated at byte offset " + std::to_string(offset));
    offset += n;
  }
  uint8_t u8() {
    uint8_t v;
    bytes(&v, 1);
    return v;
  }
  uint32_t u32() {
    uint8_t b[4];
    bytes(b, 4);
    return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
           static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
  }
  uint64_t u64() {
    uint64_t lo = u32();
    uint64_t hi = u32();
    return lo | hi << 32;
  }
  double f64() {
    uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
};

void write_header(Writer& w, Dtype dtype, const std::vector<uint32_t>& dims) {
  require(dims.size() <= 255, "save_tensor: rank exceeds 255");
  w.bytes(kMagic, 4);
  w.u8(kVersion);
  w.u8(static_cast<uint8_t>(dtype));
  w.u8(static_cast<uint8_t>(dims.size()));
  w.u8(0);  // reserved
  for (uint32_t d : dims) w.u32(d);
}

size_t check_dims(const std::vector<uint32_t>& dims, size_t n, const char* what) {
  size_t numel = 1;
  for (uint32_t d : dims) numel *= d;
  require(numel == n, std::string("save_tensor: dims product != data length for ") + what);
  return numel;
}

}  // namespace

void save_tensor(const std::string& path, const std::vector<uint32_t>& dims,
                 const std::vector<double>& data) {
  check_dims(dims, data.size(), "f64 tensor");
  Writer w(path);
  write_header(w, Dtype::kF64, dims);
  for (double v : data) w.f64(v);
}

void save_tensor(const std::string& path, const std::vector<uint32_t>& dims,
                 const std::vector<int32_t>& data) {
  check_dims(dims, data.size(), "i32 tensor");
  Writer w(path);
  write_header(w, Dtype::kI32, dims);
  for (int32_t v : data) w.u32(static_cast<uint32_t>(v));
}

LoadedTensor load_tensor(const std::string& path) {
  Reader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    fail("load_tensor: '" + path + "' bad magic at byte offset 0");
  uint8_t version = r.u8();
  if (version != kVersion)
    fail("load_tensor: '" + path + "' unsupported version " + std::to_string(version) +
         " at byte offset 4");
  uint8_t dtype = r.u8();
  if (dtype != static_cast<uint8_t>(Dtype::kF64) && dtype != static_cast<uint8_t>(Dtype::kI32))
    fail("load_tensor: '" + path + "' unknown dtype " + std::to_string(dtype) +
         " at byte offset 5");
  uint8_t rank = r.u8();
  r.u8();  // reserved

  LoadedTensor t;
  t.dtype = static_cast<Dtype>(dtype);
  t.dims.resize(rank);
  for (int i = 0; i < rank; ++i) t.dims[i] = r.u32();

  size_t n = t.numel();
  if (t.dtype == Dtype::kF64) {
    t.f64.resize(n);
    for (size_t i = 0; i < n; ++i) t.f64[i] = r.f64();
  } else {
    t.i32.resize(n);
    for (size_t i = 0; i < n; ++i) t.i32[i] = static_cast<int32_t>(r.u32());
  }

  // Trailing garbage would make round-trips ambiguous.
  uint8_t probe;
  if (std::fread(&probe, 1, 1, r.f) == 1)
    fail("load_tensor: '" + path + "' trailing bytes at offset " + std::to_string(r.offset));
  return t;
}

}  // namespace cda
