// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "woad/errors.hpp"
#include "woad/streaming.hpp"

namespace woad {

/// Plain-text detection log, 9 significant digits:
///
///   # woad-detections v1 video_id=<id> fps=<fps> classes=<C>
///   one line per frame: frame time_s a_0..a_C st_0 st_1 as_0..as_C event
///
/// `event` is 1 when a start fired; its class is the argmax of as and its
/// confidence that score.
void write_detection_log(std::ostream& out, const DetectionLog& log);
void write_detection_log(const std::filesystem::path& path, const DetectionLog& log);

DetectionLog read_detection_log(std::istream& in, const std::string& source = "<detections>");
DetectionLog read_detection_log(const std::filesystem::path& path);

}  // namespace woad
