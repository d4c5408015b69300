// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

#include <doctest.h>

#include "gdiff/error.hpp"
#include "gdiff/rng.hpp"
#include "gdiff/tensor_io.hpp"
#include "helpers.hpp"

using gdiff::ImageMeta;
using gdiff::Tensor;

TEST_CASE("tensor shape validation") {
  CHECK_THROWS_AS(Tensor(gdiff::Shape{}), gdiff::InvalidArgument);
  CHECK_THROWS_AS(Tensor(gdiff::Shape{2, 0}), gdiff::InvalidArgument);
  CHECK_THROWS_AS(Tensor(gdiff::Shape{2, 2}, std::vector<double>{1, 2, 3}), gdiff::InvalidArgument);
  const Tensor t({2, 3}, 1.5);
  CHECK(t.size() == 6);
  CHECK(t.reshaped({3, 2}).shape() == gdiff::Shape{3, 2});
  CHECK_THROWS_AS(t.reshaped({4, 2}), gdiff::InvalidArgument);
}

TEST_CASE("tensor arithmetic and finiteness") {
  Tensor a = Tensor::vector({1, 2, 3});
  const Tensor b = Tensor::vector({0.5, 0.5, 0.5});
  CHECK((a - b) == Tensor::vector({0.5, 1.5, 2.5}));
  CHECK(gdiff::dot(a, b) == 3.0);
  a[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(gdiff::all_finite(a.data()));
  CHECK_THROWS_AS(gdiff::require_finite(a, "a"), gdiff::NumericError);
  CHECK_THROWS_AS(Tensor::vector({1, 2}) + Tensor::vector({1}), gdiff::InvalidArgument);
}

TEST_CASE("read P5 scales bytes by 1/255") {
  testing::ScratchDir dir("p5");
  testing::write_bytes(dir / "a.pgm", std::string("P5\n2 2\n255\n") + std::string("\x00\xff\x80\x40", 4));
  const auto [t, meta] = gdiff::read_image(dir / "a.pgm");
  CHECK(meta == ImageMeta{2, 2, 1});
  CHECK(t.shape() == gdiff::Shape{1, 2, 2});
  CHECK(t[0] == 0.0);
  CHECK(t[1] == 1.0);
  CHECK(t[2] == 128.0 / 255.0);
  CHECK(t[3] == 64.0 / 255.0);
}

TEST_CASE("read P6 and header comments") {
  testing::ScratchDir dir("p6");
  testing::write_bytes(dir / "w.ppm", std::string("P6\n# comment\n2 1\n255\n") + std::string(6, '\xff'));
  const auto [t, meta] = gdiff::read_image(dir / "w.ppm");
  CHECK(meta == ImageMeta{1, 2, 3});
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(t[i] == 1.0);

  // Interleaved RGB becomes channel planes.
  testing::write_bytes(dir / "c.ppm", std::string("P6 2 1 255\n") + std::string("\x01\x02\x03\x04\x05\x06", 6));
  const auto [c, cm] = gdiff::read_image(dir / "c.ppm");
  CHECK(c[0] == 1.0 / 255);
  CHECK(c[1] == 4.0 / 255);
  CHECK(c[2] == 2.0 / 255);
  CHECK(c[4] == 3.0 / 255);
}

TEST_CASE("image read errors") {
  testing::ScratchDir dir("bad");
  testing::write_bytes(dir / "p7.pgm", "P7\n2 2\n255\n\x01\x02\x03\x04");
  CHECK_THROWS_AS(gdiff::read_image(dir / "p7.pgm"), gdiff::FormatError);
  testing::write_bytes(dir / "short.pgm", "P5\n2 2\n255\n\x01\x02");
  CHECK_THROWS_AS(gdiff::read_image(dir / "short.pgm"), gdiff::FormatError);
  testing::write_bytes(dir / "deep.pgm", "P5\n1 1\n65535\n\x01\x02");
  CHECK_THROWS_AS(gdiff::read_image(dir / "deep.pgm"), gdiff::FormatError);
  testing::write_bytes(dir / "hdr.pgm", "P5\n2\n");
  CHECK_THROWS_AS(gdiff::read_image(dir / "hdr.pgm"), gdiff::FormatError);
  CHECK_THROWS_AS(gdiff::read_image(dir / "missing.pgm"), gdiff::IoError);
}

TEST_CASE("write_image quantization and clamping") {
  testing::ScratchDir dir("wi");
  const ImageMeta meta{1, 3, 1};
  gdiff::write_image(Tensor({1, 1, 3}, std::vector<double>{0.5, 1.3, -0.2}), meta, dir / "q.pgm");
  const std::string bytes = testing::read_bytes(dir / "q.pgm");
  const std::string payload = bytes.substr(bytes.size() - 3);
  CHECK(static_cast<unsigned char>(payload[0]) == 128);
  CHECK(static_cast<unsigned char>(payload[1]) == 255);
  CHECK(static_cast<unsigned char>(payload[2]) == 0);
  CHECK_THROWS_AS(gdiff::write_image(Tensor({1, 2, 2}), meta, dir / "x.pgm"), gdiff::InvalidArgument);
}

TEST_CASE("image round trip stays within half a quantization step") {
  testing::ScratchDir dir("rt");
  gdiff::SeededGenerator rng(5);
  for (std::size_t channels : {1u, 3u}) {
    const ImageMeta meta{5, 7, channels};
    Tensor x(meta.shape());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform();
    const auto path = dir / (channels == 1 ? "r.pgm" : "r.ppm");
    gdiff::write_image(x, meta, path);
    const auto [back, m2] = gdiff::read_image(path);
    CHECK(m2 == meta);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(back[i] - x[i]) <= 1.0 / 510.0 + 1e-15);
  }
}

TEST_CASE("GDT1 round trip is bit exact") {
  testing::ScratchDir dir("gdt");
  gdiff::SeededGenerator rng(9);
  for (int rep = 0; rep < 20; ++rep) {
    gdiff::Shape shape;
    const std::size_t rank = 1 + rng.uniform_index(4);
    for (std::size_t r = 0; r < rank; ++r) shape.push_back(1 + rng.uniform_index(5));
    Tensor x(shape);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.gaussian() * std::pow(10.0, rng.gaussian() * 5);
    gdiff::write_tensor(x, dir / "t.gdt");
    const Tensor back = gdiff::read_tensor(dir / "t.gdt");
    REQUIRE(back.shape() == x.shape());
    CHECK(std::memcmp(back.data().data(), x.data().data(), x.size() * sizeof(double)) == 0);
  }
}

TEST_CASE("GDT1 layout is little-endian and exact") {
  std::ostringstream out;
  gdiff::write_tensor(out, Tensor({2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6}));
  const std::string s = out.str();
  REQUIRE(s.size() == 4 + 4 + 8 + 6 * 8);
  CHECK(s.substr(0, 4) == "GDT1");
  CHECK(s.substr(4, 4) == std::string("\x02\x00\x00\x00", 4));
  CHECK(s.substr(8, 4) == std::string("\x02\x00\x00\x00", 4));
  CHECK(s.substr(12, 4) == std::string("\x03\x00\x00\x00", 4));
  // 1.0 = 0x3FF0000000000000
  CHECK(s.substr(16, 8) == std::string("\x00\x00\x00\x00\x00\x00\xf0\x3f", 8));
}

TEST_CASE("GDT1 errors") {
  std::istringstream bad_magic(std::string("XXXX\x01\x00\x00\x00\x01\x00\x00\x00", 12) + std::string(8, '\0'));
  CHECK_THROWS_AS(gdiff::read_tensor(bad_magic), gdiff::FormatError);
  std::istringstream rank0(std::string("GDT1\x00\x00\x00\x00", 8));
  CHECK_THROWS_AS(gdiff::read_tensor(rank0), gdiff::FormatError);
  std::istringstream truncated(std::string("GDT1\x01\x00\x00\x00\x02\x00\x00\x00", 12) + std::string(8, '\0'));
  CHECK_THROWS_AS(gdiff::read_tensor(truncated), gdiff::FormatError);
  std::istringstream huge(std::string("GDT1\xff\x00\x00\x00", 8));
  CHECK_THROWS_AS(gdiff::read_tensor(huge), gdiff::FormatError);
  std::istringstream zero_dim(std::string("GDT1\x01\x00\x00\x00\x00\x00\x00\x00", 12));
  CHECK_THROWS_AS(gdiff::read_tensor(zero_dim), gdiff::FormatError);
}
