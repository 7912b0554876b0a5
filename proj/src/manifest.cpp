// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "woad/manifest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "woad/features_io.hpp"

namespace woad {

namespace {

constexpr const char* kColumns[] = {"video_id", "split",   "frame_rate", "num_frames",
                                    "feature_path", "classes", "segments"};
constexpr std::size_t kColumnCount = 7;

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

struct LineContext {
  const std::string& source;
  std::uint64_t line;

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(source, ParseError::Unit::Line, line, message);
  }

  double number(const std::string& text, const char* what) const {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
      fail(std::string("invalid ") + what + " '" + text + "'");
    }
    return v;
  }

  int integer(const std::string& text, const char* what) const {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      fail(std::string("invalid ") + what + " '" + text + "'");
    }
    return v;
  }
};

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

CorpusManifest parse_manifest(std::istream& in, const std::string& source) {
  CorpusManifest manifest;
  std::string line;
  std::uint64_t line_no = 0;
  bool saw_magic = false, saw_classes = false, saw_columns = false;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const LineContext ctx{source, line_no};
    if (line.empty()) continue;
    const auto fields = split_on(line, '\t');

    if (!saw_magic) {
      if (fields.size() != 2 || fields[0] != "#woad-manifest") ctx.fail("missing #woad-manifest header");
      if (fields[1] != "1") ctx.fail("unsupported manifest version '" + fields[1] + "'");
      saw_magic = true;
      continue;
    }
    if (!saw_classes) {
      if (fields[0] != "#classes") ctx.fail("missing #classes line");
      if (fields.size() < 2) ctx.fail("class vocabulary is empty");
      manifest.class_names.assign(fields.begin() + 1, fields.end());
      for (const auto& name : manifest.class_names) {
        if (name.empty()) ctx.fail("empty class name");
      }
      saw_classes = true;
      continue;
    }
    if (line[0] == '#') continue;
    if (!saw_columns) {
      if (fields.size() != kColumnCount) ctx.fail("column header must have 7 columns");
      for (std::size_t k = 0; k < kColumnCount; ++k) {
        if (fields[k] != kColumns[k]) ctx.fail(std::string("expected column '") + kColumns[k] + "'");
      }
      saw_columns = true;
      continue;
    }

    if (fields.size() != kColumnCount) {
      ctx.fail("expected 7 fields, found " + std::to_string(fields.size()));
    }
    ManifestEntry e;
    e.video_id = fields[0];
    if (e.video_id.empty()) ctx.fail("empty video_id");
    for (const auto& other : manifest.entries) {
      if (other.video_id == e.video_id) ctx.fail("duplicate video_id '" + e.video_id + "'");
    }
    if (fields[1] == "train") {
      e.split = Split::Train;
    } else if (fields[1] == "test") {
      e.split = Split::Test;
    } else {
      ctx.fail("split must be 'train' or 'test', found '" + fields[1] + "'");
    }
    e.frame_rate = ctx.number(fields[2], "frame_rate");
    if (!(e.frame_rate > 0.0)) ctx.fail("frame_rate must be positive");
    e.num_frames = ctx.integer(fields[3], "num_frames");
    if (e.num_frames < 1) ctx.fail("num_frames must be >= 1");
    e.feature_path = fields[4];
    if (e.feature_path.empty()) ctx.fail("empty feature_path");

    const int C = manifest.classes();
    if (fields[5].empty()) ctx.fail("video has no class label");
    for (const auto& tok : split_on(fields[5], ',')) {
      const int cls = ctx.integer(tok, "class index");
      if (cls < 1 || cls > C) ctx.fail("class index " + tok + " outside [1, " + std::to_string(C) + "]");
      e.classes.push_back(cls);
    }

    if (fields[6] != "-") {
      std::vector<eval::Segment> segments;
      const double duration = static_cast<double>(e.num_frames) / e.frame_rate;
      for (const auto& tok : split_on(fields[6], ';')) {
        const auto colon = tok.find(':');
        const auto dash = tok.find('-', colon == std::string::npos ? 0 : colon + 1);
        if (colon == std::string::npos || dash == std::string::npos) {
          ctx.fail("segment '" + tok + "' is not cls:start-end");
        }
        eval::Segment s;
        s.cls = ctx.integer(tok.substr(0, colon), "segment class");
        s.start_s = ctx.number(tok.substr(colon + 1, dash - colon - 1), "segment start");
        s.end_s = ctx.number(tok.substr(dash + 1), "segment end");
        if (s.cls < 1 || s.cls > C) ctx.fail("segment class " + std::to_string(s.cls) + " out of range");
        if (s.start_s < 0.0 || s.end_s < s.start_s) ctx.fail("segment '" + tok + "' has start > end or negative start");
        if (s.end_s > duration + 1e-6) ctx.fail("segment '" + tok + "' ends after the video");
        if (std::find(e.classes.begin(), e.classes.end(), s.cls) == e.classes.end()) {
          ctx.fail("segment class " + std::to_string(s.cls) + " missing from video classes");
        }
        segments.push_back(s);
      }
      e.segments = std::move(segments);
    }
    manifest.entries.push_back(std::move(e));
  }
  if (!saw_magic) throw ParseError(source, ParseError::Unit::Line, line_no + 1, "empty manifest");
  if (!saw_classes) throw ParseError(source, ParseError::Unit::Line, line_no + 1, "missing #classes line");
  if (!saw_columns) throw ParseError(source, ParseError::Unit::Line, line_no + 1, "missing column header");
  return manifest;
}

CorpusManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_manifest: cannot open " + path.string());
  CorpusManifest m = parse_manifest(in, path.string());
  m.base_dir = path.parent_path();
  return m;
}

void write_manifest(std::ostream& out, const CorpusManifest& manifest) {
  out << "#woad-manifest\t1\n#classes";
  for (const auto& name : manifest.class_names) out << '\t' << name;
  out << '\n';
  for (std::size_t k = 0; k < kColumnCount; ++k) out << (k ? "\t" : "") << kColumns[k];
  out << '\n';
  for (const ManifestEntry& e : manifest.entries) {
    out << e.video_id << '\t' << (e.split == Split::Train ? "train" : "test") << '\t'
        << format_double(e.frame_rate) << '\t' << e.num_frames << '\t' << e.feature_path << '\t';
    for (std::size_t k = 0; k < e.classes.size(); ++k) out << (k ? "," : "") << e.classes[k];
    out << '\t';
    if (!e.segments) {
      out << '-';
    } else {
      for (std::size_t k = 0; k < e.segments->size(); ++k) {
        const auto& s = (*e.segments)[k];
        out << (k ? ";" : "") << s.cls << ':' << format_double(s.start_s) << '-' << format_double(s.end_s);
      }
    }
    out << '\n';
  }
}

void write_manifest(const std::filesystem::path& path, const CorpusManifest& manifest) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_manifest: cannot open " + path.string());
  write_manifest(out, manifest);
}

void check_feature_files(const CorpusManifest& manifest, const std::string& source) {
  // Data rows start after the three header lines.
  std::uint64_t line = 4;
  for (const ManifestEntry& e : manifest.entries) {
    const auto path = manifest.base_dir / e.feature_path;
    if (!std::filesystem::exists(path)) {
      throw ParseError(source, ParseError::Unit::Line, line, "feature file not found: " + path.string());
    }
    std::ifstream in(path, std::ios::binary);
    const auto features = read_features_f32(in, path.string());
    if (features.rows() != e.num_frames) {
      throw ParseError(source, ParseError::Unit::Line, line,
                       "num_frames " + std::to_string(e.num_frames) + " but feature file has " +
                           std::to_string(features.rows()));
    }
    ++line;
  }
}

LabelTrack segments_to_track(const std::vector<eval::Segment>& segments, double fps, int num_frames) {
  std::vector<FrameSegment> frames;
  for (const eval::Segment& s : segments) {
    const auto [first, last] = eval::segment_frames(s, fps, num_frames);
    if (last >= first) frames.push_back({s.cls, first, last});
  }
  return segments_to_labels(frames, num_frames, Provenance::GroundTruth);
}

Corpus load_corpus(const CorpusManifest& manifest, Split split) {
  Corpus corpus;
  corpus.classes = manifest.classes();
  for (const ManifestEntry& e : manifest.entries) {
    if (e.split != split) continue;
    FeatureSequence seq = load_features(manifest.base_dir / e.feature_path, e.video_id, e.frame_rate);
    if (seq.length() != e.num_frames) {
      throw std::runtime_error("load_corpus: '" + e.video_id + "' has " + std::to_string(seq.length()) +
                               " frames, manifest says " + std::to_string(e.num_frames));
    }
    if (!corpus.videos.empty() && seq.dim() != corpus.input_dim()) {
      throw std::runtime_error("load_corpus: '" + e.video_id + "' feature dimension differs");
    }
    Video v;
    v.id = e.video_id;
    v.raw = std::move(seq.features);
    v.classes = e.classes;
    v.fps = e.frame_rate;
    if (e.segments) v.ground_truth = segments_to_track(*e.segments, e.frame_rate, e.num_frames);
    corpus.videos.push_back(std::move(v));
  }
  return corpus;
}

std::vector<eval::VideoGroundTruth> ground_truth(const CorpusManifest& manifest, Split split) {
  std::vector<eval::VideoGroundTruth> out;
  for (const ManifestEntry& e : manifest.entries) {
    if (e.split != split) continue;
    out.push_back({e.video_id, e.frame_rate, e.num_frames, e.segments.value_or(std::vector<eval::Segment>{})});
  }
  return out;
}

}  // namespace woad
