#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace icf {

// Flag values shared by the subcommands.  --out overrides the natural output
// location of each command (synth.out, out_dir, or the artifact path).
struct CliFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;  // --seed, overrides the config seed
  std::string out;
  std::string mode;                   // --mode {all_labels, icf_only}
  bool scores = false;                // --scores (predict, selection systems)
  std::optional<int> n;               // --n (synth)
};

int cmd_synth(const CliFlags& flags);
int cmd_prep(const CliFlags& flags);
int cmd_cv(const CliFlags& flags);
int cmd_train(const CliFlags& flags);
int cmd_predict(const CliFlags& flags);
int cmd_report(const CliFlags& flags);

// Dispatches `command` and maps exceptions to exit codes:
// 0 success, 2 data/configuration error, 3 unexpected runtime failure.
// (Usage errors exit 1 from the argument parser before reaching this.)
int run_cli(const std::string& command, const CliFlags& flags);

}  // namespace icf
