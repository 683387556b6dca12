// icfcoder: assign ICF mobility codes to activity reports.
//
//   icfcoder <synth|prep|cv|train|predict|report> --config FILE [flags]
//
// Exit codes: 0 success, 1 usage error, 2 data/configuration error,
// 3 unexpected runtime failure.

#include <CLI11.hpp>

#include <cstdint>
#include <string>

#include "icf/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"ICF mobility coding pipeline"};
  app.require_subcommand(1);

  struct SubSpec {
    const char* name;
    const char* help;
    bool has_scores;
    bool has_n;
  };
  const SubSpec specs[] = {
      {"synth", "generate a synthetic activity-report dataset", false, true},
      {"prep", "validate a dataset and print corpus statistics", false, false},
      {"cv", "run cross-validation for every configured system", false, false},
      {"train", "fit one system on the full dataset and save a model artifact", false, false},
      {"predict", "apply a saved model artifact to a dataset", true, false},
      {"report", "render cross-validation artifacts as a Markdown summary", false, false},
  };

  icf::CliFlags flags;
  long long seed_value = 0;
  int n_value = 0;
  for (const auto& spec : specs) {
    CLI::App* sub = app.add_subcommand(spec.name, spec.help);
    sub->add_option("--config", flags.config_path, "configuration file (key = value lines)");
    sub->add_option("--seed", seed_value, "override the config seed")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--out", flags.out, "output path (overrides the config)");
    sub->add_option("--mode", flags.mode, "evaluation mode: all_labels or icf_only");
    if (spec.has_scores)
      sub->add_flag("--scores", flags.scores,
                    "also write per-code similarity scores (selection systems)");
    if (spec.has_n) sub->add_option("--n", n_value, "number of reports to generate");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  if (const auto* opt = sub->get_option_no_throw("--seed"); opt && opt->count() > 0)
    flags.seed = static_cast<std::uint64_t>(seed_value);
  if (const auto* opt = sub->get_option_no_throw("--n"); opt && opt->count() > 0)
    flags.n = n_value;
  return icf::run_cli(sub->get_name(), flags);
}
