#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "icf/classify.hpp"
#include "icf/corpus.hpp"
#include "icf/features.hpp"
#include "icf/select.hpp"

namespace icf {

// ---- Metrics ----------------------------------------------------------------

enum class EvalMode { all_labels, icf_only };
const char* to_string(EvalMode m);
EvalMode eval_mode_from(const std::string& name);

struct PredictionRecord {
  std::string report_id;
  std::string gold;
  std::string predicted;
  int fold = -1;
  std::string system_id;
};

struct PerLabelMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int support = 0;    // gold count among scored records
  int predicted = 0;  // predicted count among scored records
  int tp = 0;
};

struct MetricsReport {
  EvalMode mode = EvalMode::all_labels;
  std::vector<std::string> labels;          // fixed label list for the mode
  std::vector<PerLabelMetrics> per_label;   // parallel to labels
  std::vector<std::vector<int>> confusion;  // rows = gold, cols = predicted
  double macro_f1 = 0.0;
  int n_scored = 0;     // records whose gold is in scope for the mode
  int n_in_matrix = 0;  // records with both gold and predicted in scope
};

// Per-label precision/recall/F1 with the 0-when-undefined convention, macro-F1
// as the unweighted mean over the mode's fixed label list, and a gold-by-
// predicted confusion matrix.  icf_only drops records whose gold is the
// catch-all; a prediction outside the mode's label list counts against its
// gold label's recall but lands in no confusion cell and no precision
// denominator.
MetricsReport compute_metrics(const std::vector<PredictionRecord>& records,
                              const LabelSet& labels, EvalMode mode);

// ---- Paired bootstrap significance -------------------------------------------

struct SignificanceResult {
  std::string system_a;
  std::string system_b;
  EvalMode mode = EvalMode::all_labels;
  double delta_observed = 0.0;
  double p_value = 1.0;
  int replicates = 0;
  std::uint64_t seed = 0;
};

// Per-replicate macro-F1 deltas (A minus B) over resamples with replacement,
// each replicate seeded independently from (seed, replicate index).
std::vector<double> bootstrap_replicate_deltas(const std::vector<PredictionRecord>& a,
                                               const std::vector<PredictionRecord>& b,
                                               const LabelSet& labels, EvalMode mode,
                                               int replicates, std::uint64_t seed);

// Paired bootstrap: p = |{i : delta_i > 2·delta_observed}| / replicates.
// Precondition: records aligned on report id and gold, and
// macroF1(a) >= macroF1(b) — the caller orients the pair; equality returns
// p = 1.0 without resampling.
SignificanceResult bootstrap_test(const std::vector<PredictionRecord>& a,
                                  const std::vector<PredictionRecord>& b,
                                  const LabelSet& labels, EvalMode mode, int replicates,
                                  std::uint64_t seed);

// ---- Systems ------------------------------------------------------------------

enum class Paradigm { classification, selection };
enum class ModelKind { knn, svm, mlp, lesk, cosine, projection };

Paradigm paradigm_of(ModelKind kind);
const char* to_string(Paradigm p);
const char* to_string(ModelKind kind);
ModelKind model_kind_from(const std::string& name);

// One grid point.  Each model kind reads only its own fields.
struct SystemHyper {
  int knn_k = 5;
  double svm_c = 1.0;
  int svm_epochs = 1000;
  int mlp_hidden = 100;
  double mlp_l2 = 1e-4;
  int mlp_max_epochs = 1000;
  bool extended_definitions = false;
  bool duplicated_definitions = false;
  int proj_hidden_layers = 1;
  int proj_epochs = 50;
  int proj_batch = 32;
  ScoreMode proj_score = ScoreMode::combined;

  // Compact "key=value,..." rendering of the fields `kind` reads.
  std::string describe(ModelKind kind) const;
};

struct SystemConfig {
  std::string id;
  ModelKind model = ModelKind::svm;
  FeatureConfig features;
  std::vector<SystemHyper> grid;  // non-empty; dev selection picks one per fold
  std::uint64_t seed = 0;
};

// A fitted system: feature pipeline (when the model consumes vectors) plus
// exactly one trained model.  Selection systems are closed-world — they never
// predict the catch-all label.
struct TrainedSystem {
  std::string system_id;
  ModelKind model = ModelKind::svm;
  LabelSet labels;
  SystemHyper hyper;
  std::optional<FeaturePipeline> pipeline;
  std::optional<KnnModel> knn;
  std::optional<LinearSvmModel> svm;
  std::optional<MlpModel> mlp;
  std::optional<LeskProfiles> lesk;
  std::string lesk_fallback;
  std::optional<CodeEmbeddingSet> codes;
  std::optional<ProjectionModel> projection;
};

// Fits one system on `train`.  Selection models drop catch-all-labeled
// training samples before any fitting (including vocabulary construction);
// the Lesk fallback is the most frequent remaining training label, ties
// toward earlier LabelSet order.  `defs` is required for selection models,
// `table` for any static-embedding feature and for cosine/projection.
TrainedSystem train_system(const SystemConfig& sys, const SystemHyper& hyper,
                           const std::vector<const ActivityReport*>& train,
                           const LabelSet& labels, const DefinitionMap* defs,
                           const EmbeddingTable* table, std::uint64_t seed);

std::string predict_system(const TrainedSystem& ts, const ActivityReport& report);

// Per-code similarity scores, aligned with labels.icf_codes(); selection
// systems only.
std::vector<double> selection_scores(const TrainedSystem& ts, const ActivityReport& report);

// ---- Cross-validation driver ----------------------------------------------------

struct FoldOutcome {
  int fold = 0;
  int grid_choice = 0;
  double dev_macro_f1 = 0.0;
  MetricsReport test_all;
  MetricsReport test_icf;
};

struct CvResult {
  std::vector<PredictionRecord> predictions;  // fold order; every report once
  std::vector<FoldOutcome> folds;
};

// Per fold: fit on train for each grid point, pick the grid point with the
// best dev macro-F1 (ties toward the first entry; classification systems are
// scored in all_labels mode, selection systems in icf_only), then predict the
// fold's test split with the winning model.  Fold seeds derive from
// (sys.seed, fold), so results are independent of scheduling.
CvResult run_cv(const Dataset& data, const LabelSet& labels, const DefinitionMap* defs,
                const EmbeddingTable* table, const FoldPlan& plan, const SystemConfig& sys);

}  // namespace icf
