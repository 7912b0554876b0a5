// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "woad/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "binary_io.hpp"
#include "woad/hash.hpp"

namespace woad {

namespace {

using Unit = ParseError::Unit;

// Bounds anything read from a length prefix.
constexpr std::uint32_t kMaxString = 1u << 20;

void put_string(std::ostream& out, const std::string& s) {
  detail::put_le(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

class Reader {
 public:
  Reader(std::istream& in, const std::string& source) : in_(in), source_(source) {}

  template <typename T>
  T value(const char* what) {
    T v{};
    if (!detail::get_le(in_, v)) fail(std::string("truncated ") + what);
    offset_ += sizeof(T);
    return v;
  }

  std::string string(const char* what) {
    const auto size = value<std::uint32_t>(what);
    if (size > kMaxString) fail(std::string(what) + " length " + std::to_string(size) + " too large");
    std::string s(size, '\0');
    if (!in_.read(s.data(), size)) fail(std::string("truncated ") + what);
    offset_ += size;
    return s;
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(source_, Unit::Byte, offset_, message);
  }

  void skip(std::uint64_t n) { offset_ += n; }

 private:
  std::istream& in_;
  const std::string& source_;
  std::uint64_t offset_ = 0;
};

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  out.write(kCheckpointMagic, 6);
  detail::put_le(out, kCheckpointVersion);
  detail::put_le(out, ckpt.config_hash);
  detail::put_le(out, static_cast<std::int32_t>(ckpt.epoch));
  put_string(out, ckpt.rng_state);
  const ModelShape& s = ckpt.model.shape;
  for (int v : {s.input_dim, s.feature_dim, s.hidden, s.classes, s.window, s.recurrent ? 1 : 0}) {
    detail::put_le(out, static_cast<std::int32_t>(v));
  }
  const auto params = ckpt.model.parameters();
  detail::put_le(out, static_cast<std::uint32_t>(params.size()));
  for (const Parameter* p : params) {
    put_string(out, p->name);
    detail::put_le(out, static_cast<std::uint32_t>(p->value.rows()));
    detail::put_le(out, static_cast<std::uint32_t>(p->value.cols()));
    for (Eigen::Index i = 0; i < p->value.size(); ++i) detail::put_le(out, p->value.data()[i]);
  }
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_checkpoint(out, ckpt);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Checkpoint read_checkpoint(std::istream& in, const std::string& source) {
  Reader r(in, source);
  char magic[6];
  if (!in.read(magic, 6) || std::memcmp(magic, kCheckpointMagic, 6) != 0) r.fail("bad magic");
  r.skip(6);

  Checkpoint ckpt;
  const auto version = r.value<std::uint32_t>("version");
  if (version != kCheckpointVersion) r.fail("unsupported version " + std::to_string(version));
  ckpt.config_hash = r.value<std::uint64_t>("config hash");
  ckpt.epoch = r.value<std::int32_t>("epoch");
  ckpt.rng_state = r.string("rng state");

  ModelShape shape;
  shape.input_dim = r.value<std::int32_t>("model shape");
  shape.feature_dim = r.value<std::int32_t>("model shape");
  shape.hidden = r.value<std::int32_t>("model shape");
  shape.classes = r.value<std::int32_t>("model shape");
  shape.window = r.value<std::int32_t>("model shape");
  shape.recurrent = r.value<std::int32_t>("model shape") != 0;
  if (shape.input_dim < 1 || shape.feature_dim < 0 || shape.hidden < 1 || shape.classes < 1 ||
      shape.window < 0) {
    r.fail("invalid model shape");
  }
  ckpt.model = Model(shape);

  auto params = ckpt.model.parameters();
  const auto count = r.value<std::uint32_t>("parameter count");
  if (count != params.size()) {
    r.fail("expected " + std::to_string(params.size()) + " parameters, found " + std::to_string(count));
  }
  for (Parameter* p : params) {
    const auto name = r.string("parameter name");
    if (name != p->name) r.fail("expected parameter '" + p->name + "', found '" + name + "'");
    const auto rows = r.value<std::uint32_t>("parameter rows");
    const auto cols = r.value<std::uint32_t>("parameter cols");
    if (rows != p->value.rows() || cols != p->value.cols()) r.fail("shape mismatch for '" + name + "'");
    for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value.data()[i] = r.value<double>("parameter data");
    if (!p->value.allFinite()) r.fail("non-finite values in '" + name + "'");
  }
  if (in.peek() != std::char_traits<char>::eof()) r.fail("trailing bytes");
  return ckpt;
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  return read_checkpoint(in, path.string());
}

std::uint64_t checkpoint_hash(const Checkpoint& ckpt) {
  std::ostringstream out;
  write_checkpoint(out, ckpt);
  Fnv1a h;
  h.add(std::string_view(out.str()));
  return h.value();
}

void write_label_snapshot(std::ostream& out, const std::vector<std::string>& video_ids,
                          const std::vector<LabelTrack>& tracks) {
  for (std::size_t v = 0; v < tracks.size(); ++v) {
    const LabelTrack& t = tracks[v];
    out << video_ids[v] << '\t' << (t.provenance == Provenance::GroundTruth ? "gt" : "pseudo") << '\t';
    for (int f = 0; f < t.length(); ++f) out << (f ? "," : "") << t.frame_labels[static_cast<std::size_t>(f)];
    out << '\t';
    for (std::uint8_t b : t.start_bits) out << (b ? '1' : '0');
    out << '\n';
  }
}

}  // namespace woad
