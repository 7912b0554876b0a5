// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "woad/features_io.hpp"

#include <fstream>
#include <limits>
#include <vector>

#include "binary_io.hpp"

namespace woad {

namespace {

constexpr std::size_t kMagicBytes = 6;
// Refuse payloads above 4 GiB; far beyond any per-video feature file.
constexpr std::uint64_t kMaxPayloadBytes = std::uint64_t{1} << 32;

}  // namespace

void write_features(std::ostream& out, const MatrixX<float>& features) {
  out.write(kFeatureMagic, kMagicBytes);
  detail::put_le(out, static_cast<std::uint32_t>(features.rows()));
  detail::put_le(out, static_cast<std::uint32_t>(features.cols()));
  for (Eigen::Index i = 0; i < features.size(); ++i) detail::put_le(out, features.data()[i]);
  if (!out) throw std::runtime_error("write_features: stream error");
}

void write_features(const std::filesystem::path& path, const MatrixX<float>& features) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_features: cannot open " + path.string());
  write_features(out, features);
}

MatrixX<float> read_features_f32(std::istream& in, const std::string& source) {
  using Unit = ParseError::Unit;
  char magic[kMagicBytes];
  if (!in.read(magic, kMagicBytes)) {
    throw ParseError(source, Unit::Byte, static_cast<std::uint64_t>(in.gcount()),
                     "truncated header: missing magic");
  }
  if (std::string_view(magic, kMagicBytes) != std::string_view(kFeatureMagic, kMagicBytes)) {
    throw ParseError(source, Unit::Byte, 0, "bad magic, expected WOADF1");
  }
  std::uint32_t rows = 0, cols = 0;
  if (!detail::get_le(in, rows)) throw ParseError(source, Unit::Byte, 6, "truncated header: missing frame count");
  if (!detail::get_le(in, cols)) throw ParseError(source, Unit::Byte, 10, "truncated header: missing dimension");
  if (rows == 0) throw ParseError(source, Unit::Byte, 6, "empty video: frame count is 0");
  if (cols == 0) throw ParseError(source, Unit::Byte, 10, "feature dimension is 0");
  const std::uint64_t count = std::uint64_t{rows} * cols;
  if (count * sizeof(float) > kMaxPayloadBytes ||
      count > static_cast<std::uint64_t>(std::numeric_limits<Eigen::Index>::max())) {
    throw ParseError(source, Unit::Byte, 6,
                     "dimension overflow: " + std::to_string(rows) + " x " + std::to_string(cols));
  }

  MatrixX<float> m(rows, cols);
  for (std::uint64_t i = 0; i < count; ++i) {
    if (!detail::get_le(in, m.data()[i])) {
      throw ParseError(source, Unit::Byte, kFeatureHeaderBytes + i * sizeof(float),
                       "truncated payload: expected " + std::to_string(count) + " floats, found " +
                           std::to_string(i));
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ParseError(source, Unit::Byte, kFeatureHeaderBytes + count * sizeof(float),
                     "trailing bytes after payload");
  }
  return m;
}

FeatureSequence load_features(const std::filesystem::path& path, std::string video_id, double fps) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_features: cannot open " + path.string());
  FeatureSequence seq;
  seq.video_id = video_id.empty() ? path.stem().string() : std::move(video_id);
  seq.fps = fps;
  seq.features = read_features_f32(in, path.string()).cast<double>();
  return seq;
}

}  // namespace woad
