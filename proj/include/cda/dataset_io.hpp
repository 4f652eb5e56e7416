// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "cda/scenegen.hpp"

namespace cda {

// On-disk dataset layout:
//   <dir>/manifest.json                    seed, params, counts, class names, dims
//   <dir>/scene_<id>_image.cda             f64 tensor, dims (H, W, 3)
//   <dir>/scene_<id>_mask.cda              i32 tensor, dims (H, W)
// Tensor files use the CDA1 container; ids are zero-padded to five digits.

void save_dataset(const std::string& dir, const Dataset& ds);
Dataset load_dataset(const std::string& dir);

}  // namespace cda
