// Copyright 2026 The WOAD Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "woad/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "woad/hash.hpp"

namespace woad {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw std::invalid_argument(key + ": expected a finite number, found '" + text + "'");
  }
  return v;
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& text) {
  Int v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument(key + ": expected an integer, found '" + text + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw std::invalid_argument(key + ": expected true or false, found '" + text + "'");
}

template <typename Enum>
struct EnumNames {
  std::vector<std::pair<Enum, const char*>> names;

  Enum parse(const std::string& key, const std::string& text) const {
    std::string valid;
    for (const auto& [value, name] : names) {
      if (text == name) return value;
      valid += (valid.empty() ? "" : "|") + std::string(name);
    }
    throw std::invalid_argument(key + ": expected " + valid + ", found '" + text + "'");
  }

  std::string format(Enum value) const {
    for (const auto& [v, name] : names) {
      if (v == value) return name;
    }
    return "?";
  }
};

const EnumNames<tpg::CasForm> kCasForms{{{tpg::CasForm::Ranking, "ranking"}, {tpg::CasForm::Verbatim, "verbatim"}}};
const EnumNames<tpg::ScoreScale> kScales{{{tpg::ScoreScale::Raw, "raw"}, {tpg::ScoreScale::Softmax, "softmax"}}};
const EnumNames<oar::StartNormalization> kNormalizations{
    {{oar::StartNormalization::Selected, "selected"}, {oar::StartNormalization::AllFrames, "all_frames"}}};
const EnumNames<WeightDecayMode> kDecayModes{
    {{WeightDecayMode::Coupled, "coupled"}, {WeightDecayMode::Decoupled, "decoupled"}}};
const EnumNames<eval::ApMode> kApModes{
    {{eval::ApMode::Uninterpolated, "uninterpolated"}, {eval::ApMode::ElevenPoint, "eleven_point"}}};

struct Key {
  std::string name;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

// Builds a Key bound to a field reached through `field`.
template <typename Field>
Key double_key(std::string name, Field field) {
  return {std::move(name),
          [field](RunConfig& c, const std::string& k, const std::string& v) { field(c) = parse_double(k, v); },
          [field](const RunConfig& c) { return format_double(field(c)); }};
}

template <typename Field>
Key int_key(std::string name, Field field) {
  return {std::move(name),
          [field](RunConfig& c, const std::string& k, const std::string& v) {
            using T = std::remove_reference_t<decltype(field(c))>;
            field(c) = parse_int<T>(k, v);
          },
          [field](const RunConfig& c) { return std::to_string(field(c)); }};
}

template <typename Field>
Key bool_key(std::string name, Field field) {
  return {std::move(name),
          [field](RunConfig& c, const std::string& k, const std::string& v) { field(c) = parse_bool(k, v); },
          [field](const RunConfig& c) { return std::string(field(c) ? "true" : "false"); }};
}

template <typename Enum, typename Field>
Key enum_key(std::string name, const EnumNames<Enum>& names, Field field) {
  return {std::move(name),
          [&names, field](RunConfig& c, const std::string& k, const std::string& v) { field(c) = names.parse(k, v); },
          [&names, field](const RunConfig& c) { return names.format(field(c)); }};
}

#define WOAD_FIELD(expr) [](auto& c) -> auto& { return c.expr; }

const std::vector<Key>& key_table() {
  static const std::vector<Key> table = {
      int_key("seed", WOAD_FIELD(train.seed)),
      int_key("train.epochs", WOAD_FIELD(train.epochs)),
      int_key("train.batch_videos", WOAD_FIELD(train.batch_videos)),
      int_key("train.seq_len", WOAD_FIELD(train.seq_len)),
      int_key("train.refresh_interval", WOAD_FIELD(train.refresh_interval)),
      double_key("train.lambda", WOAD_FIELD(train.lambda)),
      double_key("train.strong_fraction", WOAD_FIELD(train.strong_fraction)),
      double_key("train.ground_truth_ratio", WOAD_FIELD(train.ground_truth_ratio)),
      double_key("train.divergence_threshold", WOAD_FIELD(train.divergence_threshold)),
      bool_key("ablation.no_tpg_loss", WOAD_FIELD(train.ablation.no_tpg_loss)),
      bool_key("ablation.no_rnn", WOAD_FIELD(train.ablation.no_rnn)),
      bool_key("ablation.no_temporal_pool", WOAD_FIELD(train.ablation.no_temporal_pool)),
      bool_key("ablation.no_start_head", WOAD_FIELD(train.ablation.no_start_head)),
      int_key("tpg.kappa", WOAD_FIELD(train.kappa)),
      double_key("tpg.cas_margin", WOAD_FIELD(train.cas_margin)),
      enum_key("tpg.cas_form", kCasForms, WOAD_FIELD(train.cas_form)),
      double_key("proposal.class_threshold", WOAD_FIELD(train.proposals.class_threshold)),
      double_key("proposal.score_threshold", WOAD_FIELD(train.proposals.score_threshold)),
      int_key("proposal.gap", WOAD_FIELD(train.proposals.gap)),
      int_key("proposal.min_length", WOAD_FIELD(train.proposals.min_length)),
      enum_key("proposal.scale", kScales, WOAD_FIELD(train.proposals.scale)),
      int_key("oar.hidden", WOAD_FIELD(train.hidden)),
      int_key("oar.feature_dim", WOAD_FIELD(train.feature_dim)),
      int_key("oar.window", WOAD_FIELD(train.window)),
      double_key("start.gamma", WOAD_FIELD(train.start.gamma)),
      int_key("start.negative_ratio", WOAD_FIELD(train.start.negative_ratio)),
      enum_key("start.normalization", kNormalizations, WOAD_FIELD(train.start.normalization)),
      double_key("adam.learning_rate", WOAD_FIELD(train.adam.learning_rate)),
      double_key("adam.weight_decay", WOAD_FIELD(train.adam.weight_decay)),
      double_key("adam.beta1", WOAD_FIELD(train.adam.beta1)),
      double_key("adam.beta2", WOAD_FIELD(train.adam.beta2)),
      double_key("adam.epsilon", WOAD_FIELD(train.adam.epsilon)),
      enum_key("adam.decay_mode", kDecayModes, WOAD_FIELD(train.adam.decay_mode)),
      double_key("stream.score_threshold", WOAD_FIELD(stream.score_threshold)),
      Key{"eval.thresholds",
          [](RunConfig& c, const std::string& k, const std::string& v) {
            std::vector<double> values;
            std::string item;
            std::istringstream is(v);
            while (std::getline(is, item, ',')) {
              const double t = parse_double(k, trim(item));
              if (!(t > 0.0)) throw std::invalid_argument(k + ": thresholds must be > 0");
              values.push_back(t);
            }
            if (values.empty()) throw std::invalid_argument(k + ": at least one threshold required");
            c.eval.thresholds = std::move(values);
          },
          [](const RunConfig& c) {
            std::string out;
            for (double t : c.eval.thresholds) out += (out.empty() ? "" : ",") + format_double(t);
            return out;
          }},
      enum_key("eval.ap_mode", kApModes, WOAD_FIELD(eval.ap_mode)),
      int_key("synth.classes", WOAD_FIELD(synth.classes)),
      int_key("synth.dim", WOAD_FIELD(synth.dim)),
      int_key("synth.train_per_class", WOAD_FIELD(synth.train_per_class)),
      int_key("synth.test_per_class", WOAD_FIELD(synth.test_per_class)),
      int_key("synth.min_length", WOAD_FIELD(synth.min_length)),
      int_key("synth.max_length", WOAD_FIELD(synth.max_length)),
      double_key("synth.action_ratio", WOAD_FIELD(synth.action_ratio)),
      double_key("synth.margin", WOAD_FIELD(synth.margin)),
      double_key("synth.noise", WOAD_FIELD(synth.noise)),
      double_key("synth.fps", WOAD_FIELD(synth.fps)),
      int_key("synth.max_instances", WOAD_FIELD(synth.max_instances)),
      int_key("synth.seed", WOAD_FIELD(synth.seed)),
  };
  return table;
}

#undef WOAD_FIELD

const Key& find_key(const std::string& name) {
  for (const Key& k : key_table()) {
    if (k.name == name) return k;
  }
  throw UnknownKey(name);
}

std::string valid_key_list() {
  std::string out;
  for (const Key& k : key_table()) out += (out.empty() ? "" : ", ") + k.name;
  return out;
}

}  // namespace

UnknownKey::UnknownKey(const std::string& k)
    : std::invalid_argument("unknown key '" + k + "'; valid keys: " + valid_key_list()), key(k) {}

StreamOptions RunConfig::stream_options() const {
  StreamOptions out = stream;
  out.use_start_head = !train.ablation.no_start_head;
  return out;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const Key& k : key_table()) out.push_back(k.name);
    return out;
  }();
  return keys;
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  find_key(key).set(cfg, key, value);
}

std::string get_config_value(const RunConfig& cfg, const std::string& key) { return find_key(key).get(cfg); }

RunConfig parse_config(std::istream& in, const std::string& source) {
  RunConfig cfg;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(source, ParseError::Unit::Line, line_no, "expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      set_config_value(cfg, key, value);
    } catch (const std::invalid_argument& e) {
      throw ParseError(source, ParseError::Unit::Line, line_no, e.what());
    }
  }
  return cfg;
}

RunConfig parse_config(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  return parse_config(in, path.string());
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw std::invalid_argument("override '" + assignment + "' is not key=value");
  set_config_value(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::string serialize_config(const RunConfig& cfg) {
  std::string out;
  for (const Key& k : key_table()) out += k.name + " = " + k.get(cfg) + "\n";
  return out;
}

std::uint64_t config_hash(const RunConfig& cfg) {
  Fnv1a h;
  h.add(std::string_view(serialize_config(cfg)));
  return h.value();
}

}  // namespace woad
