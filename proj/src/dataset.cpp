// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "gdiff/dataset.hpp"

#include <algorithm>
#include <cstdio>

#include "gdiff/error.hpp"
#include "gdiff/rng.hpp"
#include "gdiff/tensor_io.hpp"

namespace gdiff {

namespace {

double random_level(SeededGenerator& rng) { return static_cast<double>(rng.uniform_index(256)) / 255.0; }

}  // namespace

std::vector<Tensor> generate_rectangles(std::size_t count, std::size_t size, std::uint64_t seed) {
  if (size < 2) throw InvalidArgument("generate_rectangles: canvas must be at least 2x2");
  std::vector<Tensor> out;
  out.reserve(count);
  const SeededGenerator root(seed);
  for (std::size_t n = 0; n < count; ++n) {
    SeededGenerator rng = root.split(n);
    Tensor img({1, size, size}, random_level(rng));
    const std::size_t top = rng.uniform_index(size - 1);
    const std::size_t left = rng.uniform_index(size - 1);
    const std::size_t h = 2 + rng.uniform_index(size - top - 1);
    const std::size_t w = 2 + rng.uniform_index(size - left - 1);
    const double level = random_level(rng);
    for (std::size_t r = top; r < top + h; ++r) {
      for (std::size_t c = left; c < left + w; ++c) img[r * size + c] = level;
    }
    out.push_back(std::move(img));
  }
  return out;
}

void write_dataset(const std::filesystem::path& directory, const std::vector<Tensor>& items, bool previews) {
  std::filesystem::create_directories(directory);
  for (std::size_t n = 0; n < items.size(); ++n) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "item_%05zu", n);
    write_tensor(items[n], directory / (std::string(stem) + ".gdt"));
    if (previews) write_image(items[n], ImageMeta::from_shape(items[n].shape()), directory / (std::string(stem) + ".pgm"));
  }
}

std::vector<DatasetItem> load_dataset(const std::filesystem::path& directory, std::size_t limit) {
  if (!std::filesystem::is_directory(directory)) throw IoError("dataset directory not found: " + directory.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(directory)) {
    const auto ext = entry.path().extension();
    if (entry.is_regular_file() && (ext == ".gdt" || ext == ".pgm" || ext == ".ppm")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  // A .pgm preview next to a .gdt of the same stem is the same item.
  std::vector<std::filesystem::path> unique;
  for (const auto& f : files) {
    if (f.extension() != ".gdt") {
      auto twin = f;
      twin.replace_extension(".gdt");
      if (std::binary_search(files.begin(), files.end(), twin)) continue;
    }
    unique.push_back(f);
  }
  if (limit > 0 && unique.size() > limit) unique.resize(limit);
  if (unique.empty()) throw FormatError("dataset is empty: " + directory.string());

  std::vector<DatasetItem> items;
  items.reserve(unique.size());
  for (const auto& f : unique) {
    Tensor t = load_tensor_or_image(f);
    if (!items.empty() && t.shape() != items.front().tensor.shape()) {
      throw FormatError("dataset has mixed shapes: " + f.string() + " is " + shape_string(t.shape()) + ", expected " +
                        shape_string(items.front().tensor.shape()));
    }
    items.push_back({f.stem().string(), std::move(t)});
  }
  return items;
}

}  // namespace gdiff
