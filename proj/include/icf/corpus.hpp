#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace icf {

// One short free-text activity report.  `tokens` preserves the original
// order; `action_span` is a half-open [start, end) token range marking the
// action verb phrase when an oracle span is available.  `contextual_vectors`,
// when present, holds one vector per token (sentence-context embeddings
// precomputed upstream).
struct ActivityReport {
  std::string id;
  std::vector<std::string> tokens;
  std::optional<std::pair<int, int>> action_span;
  std::string gold_label;
  std::vector<std::vector<double>> contextual_vectors;

  bool has_action_span() const { return action_span.has_value(); }
  bool has_contextual() const { return !contextual_vectors.empty(); }
};

// Closed label inventory: ICF mobility codes in a fixed order plus the
// catch-all label for out-of-scope reports.  `codes` includes `other_label`
// as its last element.
struct LabelSet {
  std::vector<std::string> codes;
  std::string other_label;

  bool contains(const std::string& label) const;
  // Index of `label` in `codes`; throws DataError if absent.
  int index_of(const std::string& label) const;
  // Codes without the catch-all, in order.
  std::vector<std::string> icf_codes() const;
};

// A code's textual definition: the primary gloss plus the glosses of its
// more specific child codes (used by the "extended definition" variants).
struct ChildDefinition {
  std::string code;
  std::string name;
  std::string definition;
};

struct CodeDefinition {
  std::string code;
  std::string name;
  std::string primary_definition;
  std::vector<ChildDefinition> child_definitions;
};

using DefinitionMap = std::map<std::string, CodeDefinition>;

struct Dataset {
  std::vector<ActivityReport> reports;
  LabelSet labels;
};

// Cross-validation plan: fold assignment per report id.  Fold i's test set is
// fold i, its development set is fold (i+1) mod k, and the remaining folds
// train.
struct FoldPlan {
  int k = 0;
  std::vector<int> fold_of_report;  // aligned with Dataset::reports

  std::vector<int> test_indices(int fold) const;
  std::vector<int> dev_indices(int fold) const;
  std::vector<int> train_indices(int fold) const;
};

// ---- I/O ----------------------------------------------------------------

// Label set JSON: {"codes": [...], "other": "..."}.
LabelSet load_label_set(const std::string& path);

// Dataset JSONL, one report per line:
//   {"id": ..., "tokens": [...], "action_span": [s, e] | null,
//    "label": ..., "contextual_vectors": [[...], ...] | omitted}
// Validates ids unique, labels in `labels`, spans in range, vector counts.
Dataset load_dataset(const std::string& path, const LabelSet& labels);
void save_dataset(const Dataset& ds, const std::string& path);

// Definitions JSON: array of {code, name, definition, children:[...]}.
// Requires a definition for every non-catch-all code in `labels`.
DefinitionMap load_definitions(const std::string& path, const LabelSet& labels);

// ---- Folds ----------------------------------------------------------------

// Seeded shuffle, then deal round-robin so fold sizes differ by at most one.
FoldPlan split_folds(const Dataset& ds, int k, std::uint64_t seed);

// ---- Synthetic data -------------------------------------------------------

// The bundled mobility label set (12 ICF codes + "Other") and the default
// label skew used by the synthetic generator, expressed as observed counts
// from a real clinical corpus of 4,527 reports.
LabelSet mobility_label_set();
const std::map<std::string, int>& default_mobility_counts();
std::map<std::string, double> default_mobility_skew();

struct SynthOptions {
  int n = 4527;
  std::map<std::string, double> skew;  // label -> probability, sums to 1
  int min_triggers = 3;
  int max_triggers = 6;
  int min_noise = 0;  // noise tokens per report
  int max_noise = 0;
  std::uint64_t seed = 1;
};

// Generates reports whose content words are sampled from trigger pools that
// are unique to each code after stemming, so a most-overlapping-definition
// oracle recovers the gold label exactly when noise is zero.  Reports for the
// catch-all label contain only noise vocabulary.  The action span covers the
// trigger tokens.
Dataset generate_synthetic(const DefinitionMap& defs, const LabelSet& labels,
                           const SynthOptions& opt);

// Trigger pools backing the generator: for each non-catch-all code, the
// surface words of its primary definition whose stems occur in no other
// code's definition text (children included).  Exposed for tests.
std::map<std::string, std::vector<std::string>> synthetic_trigger_pools(
    const DefinitionMap& defs, const LabelSet& labels);

// Noise vocabulary: fixed word list, filtered so no stem collides with any
// definition stem.
std::vector<std::string> synthetic_noise_vocabulary(const DefinitionMap& defs);

// Writes a word2vec-format text embedding table covering every token in `ds`
// and every definition word.  Words that are triggers for a code cluster
// around a per-code center, noise words cluster around a separate center, and
// the remaining words get independent random directions; all vectors are
// unit-norm before jitter.  This gives the synthetic corpus the same
// "related words lie near each other" geometry the models expect from real
// distributional vectors.
void write_synthetic_embeddings(const Dataset& ds, const DefinitionMap& defs,
                                const std::string& path, int dim,
                                std::uint64_t seed, double jitter = 0.15);

}  // namespace icf
