// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "woad/detection_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace woad {

namespace {

void put(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), " %.9g", v);
  out << buf;
}

std::string header_field(const std::string& line, const std::string& key) {
  const auto pos = line.find(" " + key + "=");
  if (pos == std::string::npos) return {};
  const auto begin = pos + key.size() + 2;
  const auto end = line.find(' ', begin);
  return line.substr(begin, end == std::string::npos ? std::string::npos : end - begin);
}

}  // namespace

void write_detection_log(std::ostream& out, const DetectionLog& log) {
  const int C = static_cast<int>(log.action_prob.cols()) - 1;
  char fps[32];
  std::snprintf(fps, sizeof(fps), "%.17g", log.fps);
  out << "# woad-detections v1 video_id=" << log.video_id << " fps=" << fps << " classes=" << C << '\n';
  for (int t = 0; t < log.length(); ++t) {
    out << t;
    put(out, t / log.fps);
    for (Eigen::Index c = 0; c <= C; ++c) put(out, log.action_prob(t, c));
    put(out, log.start_prob(t, 0));
    put(out, log.start_prob(t, 1));
    for (Eigen::Index c = 0; c <= C; ++c) put(out, log.combined(t, c));
    out << ' ' << static_cast<int>(log.event_flags[static_cast<std::size_t>(t)]) << '\n';
  }
}

void write_detection_log(const std::filesystem::path& path, const DetectionLog& log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_detection_log(out, log);
}

DetectionLog read_detection_log(std::istream& in, const std::string& source) {
  using Unit = ParseError::Unit;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# woad-detections v1", 0) != 0) {
    throw ParseError(source, Unit::Line, 1, "missing '# woad-detections v1' header");
  }
  DetectionLog log;
  log.video_id = header_field(line, "video_id");
  int classes = 0;
  try {
    log.fps = std::stod(header_field(line, "fps"));
    classes = std::stoi(header_field(line, "classes"));
  } catch (const std::exception&) {
    throw ParseError(source, Unit::Line, 1, "header needs fps= and classes=");
  }
  if (log.video_id.empty() || !(log.fps > 0.0) || classes < 1) {
    throw ParseError(source, Unit::Line, 1, "invalid header values");
  }

  const int width = 2 + (classes + 1) + 2 + (classes + 1) + 1;
  std::vector<std::vector<double>> rows;
  std::uint64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::vector<double> row;
    std::string tok;
    while (fields >> tok) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw ParseError(source, Unit::Line, line_no, "invalid number '" + tok + "'");
      }
      row.push_back(v);
    }
    if (static_cast<int>(row.size()) != width) {
      throw ParseError(source, Unit::Line, line_no,
                       "expected " + std::to_string(width) + " fields, found " + std::to_string(row.size()));
    }
    if (row[0] != static_cast<double>(rows.size())) {
      throw ParseError(source, Unit::Line, line_no, "frame index out of sequence");
    }
    rows.push_back(std::move(row));
  }

  const auto T = static_cast<Eigen::Index>(rows.size());
  log.action_prob.resize(T, classes + 1);
  log.start_prob.resize(T, 2);
  log.combined.resize(T, classes + 1);
  Vector combined(classes + 1);
  for (Eigen::Index t = 0; t < T; ++t) {
    const auto& r = rows[static_cast<std::size_t>(t)];
    std::size_t k = 2;
    for (int c = 0; c <= classes; ++c) log.action_prob(t, c) = r[k++];
    log.start_prob(t, 0) = r[k++];
    log.start_prob(t, 1) = r[k++];
    for (int c = 0; c <= classes; ++c) combined(c) = log.combined(t, c) = r[k++];
    const int predicted = argmax_lowest(combined);
    log.predicted.push_back(predicted);
    const bool fired = r[k] != 0.0;
    log.event_flags.push_back(fired ? 1 : 0);
    if (fired) log.events.push_back({t, t / log.fps, predicted, combined(predicted)});
  }
  return log;
}

DetectionLog read_detection_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open detection log " + path.string());
  return read_detection_log(in, path.string());
}

}  // namespace woad
