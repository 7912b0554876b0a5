// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "woad/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "woad/features_io.hpp"
#include "woad/hash.hpp"
#include "woad/random.hpp"

namespace woad {

namespace {

// Splits `total` units into `bins` parts, each at least `floor_each`.
std::vector<int> random_partition(int total, int bins, int floor_each, Rng& rng) {
  std::vector<int> parts(static_cast<std::size_t>(bins), floor_each);
  for (int k = total - bins * floor_each; k > 0; --k) {
    ++parts[rng.below(static_cast<std::uint64_t>(bins))];
  }
  return parts;
}

Matrix make_prototypes(const SyntheticSpec& spec, Rng& rng) {
  Matrix gaussian(spec.dim, spec.classes + 1);
  for (Eigen::Index r = 0; r < gaussian.rows(); ++r) {
    for (Eigen::Index c = 0; c < gaussian.cols(); ++c) gaussian(r, c) = rng.normal();
  }
  // Orthonormal columns; scaled so every pair is `margin` apart.
  Eigen::HouseholderQR<Matrix> qr(gaussian);
  const Matrix q = qr.householderQ() * Matrix::Identity(spec.dim, spec.classes + 1);
  return (spec.margin / std::sqrt(2.0)) * q.transpose();
}

std::string video_name(const char* split, int cls, int index) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s_c%d_%03d", split, cls, index);
  return buf;
}

}  // namespace

void SyntheticSpec::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("invalid synthetic spec: " + what); };
  if (classes < 1) fail("classes must be >= 1");
  if (dim < classes + 1) fail("dim must be >= classes + 1");
  if (train_per_class < 1 || test_per_class < 1) fail("videos per class must be >= 1");
  if (min_length < 2 || max_length < min_length) fail("need 2 <= min_length <= max_length");
  if (!(action_ratio > 0.0 && action_ratio < 1.0)) fail("action_ratio must be in (0, 1)");
  if (!(margin > 0.0) || !std::isfinite(margin)) fail("margin must be > 0");
  if (!(noise >= 0.0) || !std::isfinite(noise)) fail("noise must be >= 0");
  if (!(fps > 0.0) || !std::isfinite(fps)) fail("fps must be > 0");
  if (max_instances < 1) fail("max_instances must be >= 1");
}

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  SyntheticCorpus out;
  out.spec = spec;
  if (spec.margin <= spec.noise) {
    out.warnings.push_back("margin <= noise: corpus may be unlearnable");
  }

  Rng rng(spec.seed);
  out.prototypes = make_prototypes(spec, rng);
  for (int c = 1; c <= spec.classes; ++c) out.manifest.class_names.push_back("class" + std::to_string(c));

  auto make_split = [&](Split split, int per_class) {
    const char* tag = split == Split::Train ? "train" : "test";
    for (int cls = 1; cls <= spec.classes; ++cls) {
      for (int i = 0; i < per_class; ++i) {
        const int T = rng.range(spec.min_length, spec.max_length);
        const int action = std::clamp(static_cast<int>(std::lround(spec.action_ratio * T)), 1, T - 1);
        const int background = T - action;
        // Instances need one frame each and a background frame between them.
        const int instances = std::min({rng.range(1, spec.max_instances), action, background + 1});
        const auto lengths = random_partition(action, instances, 1, rng);
        auto gaps = random_partition(background - (instances - 1), instances + 1, 0, rng);
        for (int k = 1; k < instances; ++k) ++gaps[static_cast<std::size_t>(k)];

        std::vector<int> labels(static_cast<std::size_t>(T), 0);
        std::vector<eval::Segment> segments;
        int t = gaps[0];
        for (int k = 0; k < instances; ++k) {
          const int first = t;
          t += lengths[static_cast<std::size_t>(k)];
          for (int f = first; f < t; ++f) labels[static_cast<std::size_t>(f)] = cls;
          segments.push_back({cls, first / spec.fps, t / spec.fps});
          t += gaps[static_cast<std::size_t>(k) + 1];
        }

        MatrixX<float> features(T, spec.dim);
        for (int f = 0; f < T; ++f) {
          for (int d = 0; d < spec.dim; ++d) {
            const double value = out.prototypes(labels[static_cast<std::size_t>(f)], d) + spec.noise * rng.normal();
            features(f, d) = static_cast<float>(value);
          }
        }

        ManifestEntry e;
        e.video_id = video_name(tag, cls, i);
        e.split = split;
        e.frame_rate = spec.fps;
        e.num_frames = T;
        e.feature_path = "features/" + e.video_id + ".woadf";
        e.classes = {cls};
        e.segments = std::move(segments);
        out.manifest.entries.push_back(std::move(e));
        out.features.push_back(std::move(features));
      }
    }
  };
  make_split(Split::Train, spec.train_per_class);
  make_split(Split::Test, spec.test_per_class);
  return out;
}

std::filesystem::path write_synthetic(const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "features");
  for (std::size_t i = 0; i < corpus.features.size(); ++i) {
    write_features(dir / corpus.manifest.entries[i].feature_path, corpus.features[i]);
  }
  const auto path = dir / "manifest.tsv";
  write_manifest(path, corpus.manifest);
  return path;
}

Corpus synthetic_corpus(const SyntheticCorpus& corpus, Split split) {
  Corpus out;
  out.classes = corpus.manifest.classes();
  for (std::size_t i = 0; i < corpus.features.size(); ++i) {
    const ManifestEntry& e = corpus.manifest.entries[i];
    if (e.split != split) continue;
    Video v;
    v.id = e.video_id;
    v.raw = corpus.features[i].cast<double>();
    v.classes = e.classes;
    v.fps = e.frame_rate;
    if (e.segments) v.ground_truth = segments_to_track(*e.segments, e.frame_rate, e.num_frames);
    out.videos.push_back(std::move(v));
  }
  return out;
}

std::uint64_t synthetic_hash(const SyntheticCorpus& corpus) {
  Fnv1a h;
  std::ostringstream manifest;
  write_manifest(manifest, corpus.manifest);
  h.add(std::string_view(manifest.str()));
  for (const auto& f : corpus.features) {
    std::ostringstream bytes;
    write_features(bytes, f);
    h.add(std::string_view(bytes.str()));
  }
  return h.value();
}

}  // namespace woad
