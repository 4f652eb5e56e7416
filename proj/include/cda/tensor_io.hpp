// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cda/common.hpp"

namespace cda {

// Binary tensor container:
//   magic "CDA1" | u8 version=1 | u8 dtype (1=f64, 2=i32) | u8 rank |
//   u8 reserved=0 | rank x u32 dims | row-major little-endian payload.
// Round-trips are bit-exact; load errors name the failing byte offset.

enum class Dtype : uint8_t { kF64 = 1, kI32 = 2 };

struct LoadedTensor {
  Dtype dtype;
  std::vector<uint32_t> dims;
  std::vector<double> f64;   // filled when dtype == kF64
  std::vector<int32_t> i32;  // filled when dtype == kI32

  size_t numel() const {
    size_t n = 1;
    for (uint32_t d : dims) n *= d;
    return n;
  }
};

void save_tensor(const std::string& path, const std::vector<uint32_t>& dims,
                 const std::vector<double>& data);
void save_tensor(const std::string& path, const std::vector<uint32_t>& dims,
                 const std::vector<int32_t>& data);
LoadedTensor load_tensor(const std::string& path);

}  // namespace cda
