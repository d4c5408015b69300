// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "gdiff/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>

#include "gdiff/error.hpp"

namespace gdiff {

namespace {

constexpr char kTensorMagic[4] = {'G', 'D', 'T', '1'};
constexpr std::uint32_t kMaxRank = 8;
// Refuse to allocate more than 2^31 values from an untrusted header.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 31;

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& in, const char* what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError(std::string("truncated tensor: ") + what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw FormatError("truncated tensor data");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string pnm_token(std::istream& in) {
  std::string token;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(static_cast<char>(c));
  }
  if (token.empty()) throw FormatError("malformed image header: unexpected end of file");
  return token;
}

std::size_t pnm_number(std::istream& in, const char* what) {
  const std::string token = pnm_token(in);
  if (!std::all_of(token.begin(), token.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); }) ||
      token.size() > 9) {
    throw FormatError(std::string("malformed image header: bad ") + what + " '" + token + "'");
  }
  return static_cast<std::size_t>(std::stoul(token));
}

}  // namespace

void ImageMeta::validate() const {
  if (channels != 1 && channels != 3) throw InvalidArgument("image channels must be 1 or 3");
  if (height == 0 || width == 0) throw InvalidArgument("image extents must be positive");
}

ImageMeta ImageMeta::from_shape(const Shape& shape) {
  ImageMeta meta;
  if (shape.size() == 3) {
    meta = {shape[1], shape[2], shape[0]};
  } else if (shape.size() == 1) {
    meta = {1, shape[0], 1};
  } else {
    throw InvalidArgument("expected a [C,H,W] or [n] tensor, got " + shape_string(shape));
  }
  meta.validate();
  return meta;
}

std::pair<Tensor, ImageMeta> read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image '" + path.string() + "'");
  const std::string magic = pnm_token(in);
  ImageMeta meta;
  if (magic == "P5") {
    meta.channels = 1;
  } else if (magic == "P6") {
    meta.channels = 3;
  } else {
    throw FormatError("unsupported image format '" + magic + "' in '" + path.string() + "'");
  }
  meta.width = pnm_number(in, "width");
  meta.height = pnm_number(in, "height");
  const std::size_t maxval = pnm_number(in, "maxval");
  if (maxval != 255) throw FormatError("unsupported maxval " + std::to_string(maxval) + " (only 255)");
  if (meta.width == 0 || meta.height == 0) throw FormatError("image has zero extent");
  // pnm_token consumed exactly one whitespace byte after maxval.

  const std::size_t n = meta.size();
  std::vector<unsigned char> bytes(n);
  if (!in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(n))) {
    throw FormatError("truncated image payload in '" + path.string() + "'");
  }
  // File order is interleaved HWC; tensors are CHW.
  std::vector<double> data(n);
  for (std::size_t y = 0; y < meta.height; ++y) {
    for (std::size_t x = 0; x < meta.width; ++x) {
      for (std::size_t c = 0; c < meta.channels; ++c) {
        const std::size_t src = (y * meta.width + x) * meta.channels + c;
        data[(c * meta.height + y) * meta.width + x] = bytes[src] / 255.0;
      }
    }
  }
  return {Tensor(meta.shape(), std::move(data)), meta};
}

void write_image(const Tensor& tensor, const ImageMeta& meta, const std::filesystem::path& path) {
  meta.validate();
  if (tensor.size() != meta.size()) {
    throw InvalidArgument("write_image: tensor " + shape_string(tensor.shape()) + " does not match image " +
                          shape_string(meta.shape()));
  }
  std::vector<unsigned char> bytes(meta.size());
  for (std::size_t c = 0; c < meta.channels; ++c) {
    for (std::size_t y = 0; y < meta.height; ++y) {
      for (std::size_t x = 0; x < meta.width; ++x) {
        double v = tensor[(c * meta.height + y) * meta.width + x];
        if (std::isnan(v)) throw NumericError("write_image: NaN pixel");
        v = std::clamp(v, 0.0, 1.0);
        bytes[(y * meta.width + x) * meta.channels + c] = static_cast<unsigned char>(std::floor(v * 255.0 + 0.5));
      }
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << (meta.channels == 1 ? "P5" : "P6") << '\n' << meta.width << ' ' << meta.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void write_tensor(std::ostream& out, const Tensor& tensor) {
  if (tensor.rank() == 0) throw InvalidArgument("write_tensor: empty tensor");
  out.write(kTensorMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(tensor.rank()));
  for (std::size_t d : tensor.shape()) {
    if (d > std::numeric_limits<std::uint32_t>::max()) throw InvalidArgument("write_tensor: extent overflow");
    put_u32(out, static_cast<std::uint32_t>(d));
  }
  for (double v : tensor.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
}

Tensor read_tensor(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4)) throw FormatError("truncated tensor: magic");
  if (std::memcmp(magic, kTensorMagic, 4) != 0) throw FormatError("bad tensor magic (expected GDT1)");
  const std::uint32_t rank = get_u32(in, "rank");
  if (rank == 0) throw FormatError("tensor rank 0 is not allowed");
  if (rank > kMaxRank) throw FormatError("tensor rank " + std::to_string(rank) + " exceeds limit");
  Shape shape(rank);
  std::uint64_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    const std::uint32_t d = get_u32(in, "extent");
    if (d == 0) throw FormatError("tensor extent 0 is not allowed");
    count *= d;
    if (count > kMaxElements) throw FormatError("tensor element count overflow");
    shape[i] = d;
  }
  std::vector<double> data(static_cast<std::size_t>(count));
  for (double& v : data) v = std::bit_cast<double>(get_u64(in));
  if (!all_finite(data)) throw FormatError("tensor contains non-finite values");
  return Tensor(std::move(shape), std::move(data));
}

void write_tensor(const Tensor& tensor, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_tensor(out, tensor);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open tensor '" + path.string() + "'");
  return read_tensor(in);
}

Tensor load_tensor_or_image(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return read_image(path).first;
  return read_tensor(path);
}

}  // namespace gdiff
