#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "icf/corpus.hpp"
#include "icf/eval.hpp"

namespace icf {

// Flat key = value configuration document.  '#' starts a comment, blank
// lines are ignored, duplicate keys are an error, and values are free text
// with surrounding whitespace trimmed.
class ConfigFile {
 public:
  static ConfigFile parse_file(const std::string& path);
  static ConfigFile parse_string(const std::string& text, const std::string& origin);

  bool has(const std::string& key) const;
  const std::string& get_string(const std::string& key) const;  // missing key -> error
  std::string get_or(const std::string& key, const std::string& fallback) const;
  long long get_int(const std::string& key) const;
  long long int_or(const std::string& key, long long fallback) const;
  double get_double(const std::string& key) const;
  double double_or(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key) const;  // 0/1/true/false/yes/no
  bool bool_or(const std::string& key, bool fallback) const;
  // Comma-separated list, items trimmed, empties dropped.
  std::vector<std::string> get_list(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }
  const std::string& origin() const { return origin_; }

 private:
  std::map<std::string, std::string> entries_;
  std::string origin_;
};

// A fully validated experiment description.
struct RunConfig {
  // Input paths ("" when the key is absent).
  std::string dataset_path;
  std::string labels_path;
  std::string definitions_path;
  std::string embeddings_path;
  std::string out_dir;

  std::uint64_t seed = 0;
  bool seed_provided = false;
  int folds = 10;
  int replicates = 1000;
  std::vector<EvalMode> modes;

  std::vector<SystemConfig> systems;
  std::vector<std::pair<std::string, std::string>> pairings;

  // Synthetic-generation settings (cmd_synth).
  SynthOptions synth;
  std::string synth_out;
  std::string synth_embeddings_out;
  int synth_embedding_dim = 24;
  double synth_jitter = 0.15;

  // predict/train plumbing.
  std::string model_path;
  std::string train_system_id;

  const SystemConfig& system_by_id(const std::string& id) const;
};

// Parses and validates a RunConfig.  Unknown keys, duplicate system ids,
// empty grids, malformed pairings, and missing referenced files are errors;
// `seed_override` (the --seed flag) replaces the config seed everywhere.
RunConfig load_run_config(const ConfigFile& file,
                          std::optional<std::uint64_t> seed_override = std::nullopt);

}  // namespace icf
