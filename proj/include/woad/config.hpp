// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "woad/errors.hpp"
#include "woad/evaluation.hpp"
#include "woad/streaming.hpp"
#include "woad/synthetic.hpp"
#include "woad/training.hpp"

namespace woad {

struct EvalOptions {
  std::vector<double> thresholds = eval::default_time_thresholds();
  eval::ApMode ap_mode = eval::ApMode::Uninterpolated;

  friend bool operator==(const EvalOptions&, const EvalOptions&) = default;
};

/// Everything a CLI run can be configured with.
struct RunConfig {
  TrainConfig train;
  StreamOptions stream;
  EvalOptions eval;
  SyntheticSpec synth;

  /// Stream options with the inference-time ablation applied.
  StreamOptions stream_options() const;
};

/// Unknown configuration key. The message lists every valid key.
class UnknownKey : public std::invalid_argument {
 public:
  explicit UnknownKey(const std::string& key);
  std::string key;
};

/// Every key accepted by parse_config / set_config_value, in canonical order.
const std::vector<std::string>& config_keys();

/// Assigns one key; throws UnknownKey or std::invalid_argument.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const RunConfig& cfg, const std::string& key);

/// Flat `key = value` lines; '#' starts a comment, blank lines are ignored.
/// Keys not mentioned keep their defaults. Errors are ParseError with a line.
RunConfig parse_config(std::istream& in, const std::string& source = "<config>");
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// `key=value` override as given on the command line.
void apply_override(RunConfig& cfg, const std::string& assignment);

/// Every key in canonical order with full-precision values.
std::string serialize_config(const RunConfig& cfg);

/// FNV-1a of serialize_config.
std::uint64_t config_hash(const RunConfig& cfg);

}  // namespace woad
