// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gdiff/tensor.hpp"

namespace gdiff {

/// Grayscale canvases of shape [1, size, size]: a uniform background
/// level with one axis-aligned rectangle (sides >= 2) at another level.
/// Levels are multiples of 1/255 so PGM round trips are exact.
std::vector<Tensor> generate_rectangles(std::size_t count, std::size_t size, std::uint64_t seed);

struct DatasetItem {
  std::string name;  ///< file stem
  Tensor tensor;
};

/// Writes item_00000.gdt, ... (and .pgm previews when `previews`).
void write_dataset(const std::filesystem::path& directory, const std::vector<Tensor>& items, bool previews = false);

/// Loads every .gdt/.pgm/.ppm file in the directory in filename order.
/// Throws FormatError when shapes differ or the directory has no items.
std::vector<DatasetItem> load_dataset(const std::filesystem::path& directory, std::size_t limit = 0);

}  // namespace gdiff
