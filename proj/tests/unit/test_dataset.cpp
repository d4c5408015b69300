// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <set>

#include <doctest.h>

#include "gdiff/dataset.hpp"
#include "gdiff/error.hpp"
#include "gdiff/tensor_io.hpp"
#include "helpers.hpp"

using namespace gdiff;

namespace {

bool same(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() && std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

}  // namespace

TEST_CASE("rectangle images are two-level and reproducible") {
  const auto a = generate_rectangles(40, 8, 3);
  const auto b = generate_rectangles(40, 8, 3);
  REQUIRE(a.size() == 40);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].shape() == Shape{1, 8, 8});
    CHECK(same(a[i], b[i]));
    std::set<double> levels(a[i].data().begin(), a[i].data().end());
    CHECK(levels.size() <= 2);
    for (double v : levels) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      // Levels are k / 255 so PGM round trips are exact.
      CHECK(std::abs(v * 255.0 - std::round(v * 255.0)) < 1e-9);
    }
  }
  // Item i does not depend on how many items were requested.
  CHECK(same(generate_rectangles(5, 8, 3)[4], a[4]));
  CHECK_FALSE(same(generate_rectangles(1, 8, 4)[0], a[0]));
}

TEST_CASE("dataset round trip") {
  testing::ScratchDir dir("data");
  const auto items = generate_rectangles(6, 8, 5);
  write_dataset(dir.path(), items, true);
  CHECK(std::filesystem::exists(dir / "item_00000.pgm"));
  const auto loaded = load_dataset(dir.path());
  REQUIRE(loaded.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) CHECK(same(loaded[i].tensor, items[i]));
  CHECK(loaded[2].name == "item_00002");
  CHECK(load_dataset(dir.path(), 4).size() == 4);
}

TEST_CASE("dataset loading errors") {
  testing::ScratchDir dir("data_bad");
  CHECK_THROWS_AS(load_dataset(dir / "missing"), IoError);
  CHECK_THROWS_AS(load_dataset(dir.path()), FormatError);
  write_tensor(Tensor({1, 8, 8}), dir / "a.gdt");
  write_tensor(Tensor({1, 4, 4}), dir / "b.gdt");
  CHECK_THROWS_AS(load_dataset(dir.path()), FormatError);
}
