#include "icf/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "icf/error.hpp"
#include "icf/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace icf {

// ---- Metrics ----------------------------------------------------------------

const char* to_string(EvalMode m) {
  return m == EvalMode::all_labels ? "all_labels" : "icf_only";
}

EvalMode eval_mode_from(const std::string& name) {
  if (name == "all_labels") return EvalMode::all_labels;
  if (name == "icf_only") return EvalMode::icf_only;
  throw DataError("unknown evaluation mode '" + name + "' (expected all_labels or icf_only)");
}

namespace {

std::vector<std::string> mode_labels(const LabelSet& labels, EvalMode mode) {
  // `codes` already carries the catch-all as its last element.
  return mode == EvalMode::all_labels ? labels.codes : labels.icf_codes();
}

struct LabelCounts {
  std::vector<int> tp, gold, pred;
  explicit LabelCounts(int n) : tp(n, 0), gold(n, 0), pred(n, 0) {}
  void clear() {
    std::fill(tp.begin(), tp.end(), 0);
    std::fill(gold.begin(), gold.end(), 0);
    std::fill(pred.begin(), pred.end(), 0);
  }
};

double macro_f1_from(const LabelCounts& c) {
  double sum = 0.0;
  for (std::size_t l = 0; l < c.tp.size(); ++l) {
    const double p = c.pred[l] > 0 ? static_cast<double>(c.tp[l]) / c.pred[l] : 0.0;
    const double r = c.gold[l] > 0 ? static_cast<double>(c.tp[l]) / c.gold[l] : 0.0;
    sum += p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  }
  return c.tp.empty() ? 0.0 : sum / static_cast<double>(c.tp.size());
}

// Records mapped to label indices within a mode's label list: gold index, or
// -1 when the record is out of scope entirely (dropped); predicted index, or
// -1 when the prediction is outside the mode's list.
struct ScopedRecords {
  std::vector<int> gold;
  std::vector<int> pred;
};

ScopedRecords scope_records(const std::vector<PredictionRecord>& records,
                            const LabelSet& labels, const std::vector<std::string>& list,
                            EvalMode mode) {
  std::map<std::string, int> index;
  for (int i = 0; i < static_cast<int>(list.size()); ++i)
    index.emplace(list[static_cast<std::size_t>(i)], i);

  ScopedRecords out;
  out.gold.reserve(records.size());
  out.pred.reserve(records.size());
  for (const auto& r : records) {
    if (!labels.contains(r.gold))
      throw DataError("prediction record " + r.report_id + ": unknown gold label " + r.gold);
    if (!labels.contains(r.predicted))
      throw DataError("prediction record " + r.report_id + ": unknown predicted label " +
                      r.predicted);
    if (mode == EvalMode::icf_only && r.gold == labels.other_label) continue;
    out.gold.push_back(index.at(r.gold));
    const auto it = index.find(r.predicted);
    out.pred.push_back(it == index.end() ? -1 : it->second);
  }
  return out;
}

}  // namespace

MetricsReport compute_metrics(const std::vector<PredictionRecord>& records,
                              const LabelSet& labels, EvalMode mode) {
  if (records.empty()) throw DataError("compute_metrics: no prediction records");

  MetricsReport rep;
  rep.mode = mode;
  rep.labels = mode_labels(labels, mode);
  const int n_labels = static_cast<int>(rep.labels.size());
  const ScopedRecords scoped = scope_records(records, labels, rep.labels, mode);

  LabelCounts counts(n_labels);
  rep.confusion.assign(static_cast<std::size_t>(n_labels),
                       std::vector<int>(static_cast<std::size_t>(n_labels), 0));
  for (std::size_t i = 0; i < scoped.gold.size(); ++i) {
    const int g = scoped.gold[i];
    const int p = scoped.pred[i];
    ++counts.gold[static_cast<std::size_t>(g)];
    if (p >= 0) {
      ++counts.pred[static_cast<std::size_t>(p)];
      if (p == g) ++counts.tp[static_cast<std::size_t>(g)];
      ++rep.confusion[static_cast<std::size_t>(g)][static_cast<std::size_t>(p)];
      ++rep.n_in_matrix;
    }
  }
  rep.n_scored = static_cast<int>(scoped.gold.size());

  rep.per_label.resize(static_cast<std::size_t>(n_labels));
  for (int l = 0; l < n_labels; ++l) {
    auto& m = rep.per_label[static_cast<std::size_t>(l)];
    m.tp = counts.tp[static_cast<std::size_t>(l)];
    m.support = counts.gold[static_cast<std::size_t>(l)];
    m.predicted = counts.pred[static_cast<std::size_t>(l)];
    m.precision = m.predicted > 0 ? static_cast<double>(m.tp) / m.predicted : 0.0;
    m.recall = m.support > 0 ? static_cast<double>(m.tp) / m.support : 0.0;
    m.f1 = m.precision + m.recall > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
  }
  rep.macro_f1 = macro_f1_from(counts);
  return rep;
}

// ---- Paired bootstrap significance -------------------------------------------

namespace {

void check_alignment(const std::vector<PredictionRecord>& a,
                     const std::vector<PredictionRecord>& b) {
  if (a.empty() || a.size() != b.size())
    throw DataError("bootstrap_test: misaligned prediction sets (sizes " +
                    std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].report_id != b[i].report_id || a[i].gold != b[i].gold)
      throw DataError("bootstrap_test: misaligned prediction sets at record " +
                      std::to_string(i) + " (" + a[i].report_id + " vs " + b[i].report_id +
                      ")");
}

}  // namespace

std::vector<double> bootstrap_replicate_deltas(const std::vector<PredictionRecord>& a,
                                               const std::vector<PredictionRecord>& b,
                                               const LabelSet& labels, EvalMode mode,
                                               int replicates, std::uint64_t seed) {
  check_alignment(a, b);
  if (replicates < 1) throw DataError("bootstrap_test: replicates must be >= 1");

  const std::vector<std::string> list = mode_labels(labels, mode);
  const int n_labels = static_cast<int>(list.size());
  const ScopedRecords sa = scope_records(a, labels, list, mode);
  const ScopedRecords sb = scope_records(b, labels, list, mode);
  const int n = static_cast<int>(sa.gold.size());
  if (n == 0) throw DataError("bootstrap_test: no scored records in this mode");

  std::vector<double> deltas(static_cast<std::size_t>(replicates), 0.0);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < replicates; ++r) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(r)));
    LabelCounts ca(n_labels), cb(n_labels);
    for (int i = 0; i < n; ++i) {
      const auto j = static_cast<std::size_t>(rng.index(n));
      const int g = sa.gold[j];
      ++ca.gold[static_cast<std::size_t>(g)];
      ++cb.gold[static_cast<std::size_t>(g)];
      if (sa.pred[j] >= 0) {
        ++ca.pred[static_cast<std::size_t>(sa.pred[j])];
        if (sa.pred[j] == g) ++ca.tp[static_cast<std::size_t>(g)];
      }
      if (sb.pred[j] >= 0) {
        ++cb.pred[static_cast<std::size_t>(sb.pred[j])];
        if (sb.pred[j] == g) ++cb.tp[static_cast<std::size_t>(g)];
      }
    }
    deltas[static_cast<std::size_t>(r)] = macro_f1_from(ca) - macro_f1_from(cb);
  }
  return deltas;
}

SignificanceResult bootstrap_test(const std::vector<PredictionRecord>& a,
                                  const std::vector<PredictionRecord>& b,
                                  const LabelSet& labels, EvalMode mode, int replicates,
                                  std::uint64_t seed) {
  check_alignment(a, b);
  if (replicates < 1) throw DataError("bootstrap_test: replicates must be >= 1");

  SignificanceResult res;
  res.system_a = a.front().system_id;
  res.system_b = b.front().system_id;
  res.mode = mode;
  res.replicates = replicates;
  res.seed = seed;

  res.delta_observed =
      compute_metrics(a, labels, mode).macro_f1 - compute_metrics(b, labels, mode).macro_f1;
  if (res.delta_observed < 0.0)
    throw DataError("bootstrap_test: negative observed delta; orient the pair so the "
                    "first system is not worse");
  if (res.delta_observed == 0.0) {
    res.p_value = 1.0;  // degenerate comparison
    return res;
  }

  const std::vector<double> deltas =
      bootstrap_replicate_deltas(a, b, labels, mode, replicates, seed);
  int exceed = 0;
  for (const double d : deltas)
    if (d > 2.0 * res.delta_observed) ++exceed;
  res.p_value = static_cast<double>(exceed) / replicates;
  return res;
}

// ---- Systems ------------------------------------------------------------------

Paradigm paradigm_of(ModelKind kind) {
  switch (kind) {
    case ModelKind::knn:
    case ModelKind::svm:
    case ModelKind::mlp:
      return Paradigm::classification;
    case ModelKind::lesk:
    case ModelKind::cosine:
    case ModelKind::projection:
      return Paradigm::selection;
  }
  throw DataError("paradigm_of: unknown model kind");
}

const char* to_string(Paradigm p) {
  return p == Paradigm::classification ? "classification" : "selection";
}

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::knn: return "knn";
    case ModelKind::svm: return "svm";
    case ModelKind::mlp: return "mlp";
    case ModelKind::lesk: return "lesk";
    case ModelKind::cosine: return "cosine";
    case ModelKind::projection: return "projection";
  }
  return "?";
}

ModelKind model_kind_from(const std::string& name) {
  if (name == "knn") return ModelKind::knn;
  if (name == "svm") return ModelKind::svm;
  if (name == "mlp") return ModelKind::mlp;
  if (name == "lesk") return ModelKind::lesk;
  if (name == "cosine") return ModelKind::cosine;
  if (name == "projection") return ModelKind::projection;
  throw DataError("unknown model kind '" + name +
                  "' (expected knn, svm, mlp, lesk, cosine, or projection)");
}

namespace {

std::string fmt_num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::string SystemHyper::describe(ModelKind kind) const {
  switch (kind) {
    case ModelKind::knn:
      return "knn.k=" + std::to_string(knn_k);
    case ModelKind::svm:
      return "svm.c=" + fmt_num(svm_c) + ",svm.epochs=" + std::to_string(svm_epochs);
    case ModelKind::mlp:
      return "mlp.hidden=" + std::to_string(mlp_hidden) + ",mlp.l2=" + fmt_num(mlp_l2) +
             ",mlp.epochs=" + std::to_string(mlp_max_epochs);
    case ModelKind::lesk:
      return std::string("lesk.extended=") + (extended_definitions ? "1" : "0");
    case ModelKind::cosine:
      return std::string("cosine.extended=") + (extended_definitions ? "1" : "0") +
             ",cosine.duplicated=" + (duplicated_definitions ? "1" : "0");
    case ModelKind::projection:
      return "proj.hidden_layers=" + std::to_string(proj_hidden_layers) +
             ",proj.epochs=" + std::to_string(proj_epochs) +
             ",proj.batch=" + std::to_string(proj_batch) +
             ",proj.score=" + to_string(proj_score) +
             ",proj.extended=" + (extended_definitions ? "1" : "0");
  }
  return "";
}

namespace {

std::string most_frequent_label(const std::vector<const ActivityReport*>& reports,
                                const LabelSet& labels) {
  std::map<std::string, int> counts;
  for (const auto* r : reports) ++counts[r->gold_label];
  std::string best;
  int best_count = -1;
  for (const auto& code : labels.icf_codes()) {
    const auto it = counts.find(code);
    const int c = it == counts.end() ? 0 : it->second;
    if (c > best_count) {
      best_count = c;
      best = code;
    }
  }
  return best;
}

}  // namespace

TrainedSystem train_system(const SystemConfig& sys, const SystemHyper& hyper,
                           const std::vector<const ActivityReport*>& train,
                           const LabelSet& labels, const DefinitionMap* defs,
                           const EmbeddingTable* table, std::uint64_t seed) {
  if (train.empty()) throw DataError("train_system: empty training set");

  TrainedSystem ts;
  ts.system_id = sys.id;
  ts.model = sys.model;
  ts.labels = labels;
  ts.hyper = hyper;

  const Paradigm par = paradigm_of(sys.model);
  std::vector<const ActivityReport*> fit_set;
  if (par == Paradigm::selection) {
    for (const auto* r : train)
      if (r->gold_label != labels.other_label) fit_set.push_back(r);
    if (fit_set.empty())
      throw DataError("train_system: no ICF-labeled training samples after dropping '" +
                      labels.other_label + "'");
  } else {
    fit_set = train;
  }

  if (par == Paradigm::selection && !defs)
    throw DataError("train_system: " + std::string(to_string(sys.model)) +
                    " requires code definitions");

  if (sys.model == ModelKind::lesk) {
    ts.lesk = build_lesk_profiles(*defs, labels, hyper.extended_definitions);
    ts.lesk_fallback = most_frequent_label(fit_set, labels);
    return ts;
  }

  ts.pipeline = FeaturePipeline::build(fit_set, sys.features, table);

  if (sys.model == ModelKind::cosine || sys.model == ModelKind::projection) {
    if (!table)
      throw DataError("train_system: definition embeddings require an embedding table");
    ts.codes = build_code_embeddings(*defs, labels, *table, hyper.extended_definitions,
                                     hyper.duplicated_definitions);
    if (ts.pipeline->dim() != ts.codes->dim())
      throw DataError(
          "train_system: report feature dimension " + std::to_string(ts.pipeline->dim()) +
          " does not match code embedding dimension " + std::to_string(ts.codes->dim()) +
          " (pair duplicated definitions with the action-oracle concatenation)");
    if (sys.model == ModelKind::cosine) return ts;
  }

  std::vector<FeatureVector> xs;
  std::vector<std::string> ys;
  xs.reserve(fit_set.size());
  ys.reserve(fit_set.size());
  for (const auto* r : fit_set) {
    xs.push_back(ts.pipeline->vectorize(*r));
    ys.push_back(r->gold_label);
  }

  switch (sys.model) {
    case ModelKind::knn:
      ts.knn = knn_fit(xs, ys, labels, hyper.knn_k);
      break;
    case ModelKind::svm: {
      SvmHyper h;
      h.c = hyper.svm_c;
      h.epochs = hyper.svm_epochs;
      h.seed = seed;
      ts.svm = svm_fit(xs, ys, labels, h);
      break;
    }
    case ModelKind::mlp: {
      MlpHyper h;
      h.hidden = hyper.mlp_hidden;
      h.l2 = hyper.mlp_l2;
      h.max_epochs = hyper.mlp_max_epochs;
      h.seed = seed;
      ts.mlp = mlp_fit(xs, ys, labels, h);
      break;
    }
    case ModelKind::projection: {
      ProjectionHyper h;
      h.hidden_layers = hyper.proj_hidden_layers;
      h.epochs = hyper.proj_epochs;
      h.batch = hyper.proj_batch;
      h.seed = seed;
      ts.projection = projection_fit(xs, ys, *ts.codes, labels, h);
      break;
    }
    default:
      throw DataError("train_system: unhandled model kind");
  }
  return ts;
}

std::string predict_system(const TrainedSystem& ts, const ActivityReport& report) {
  switch (ts.model) {
    case ModelKind::lesk:
      return lesk_select(report, *ts.lesk, ts.lesk_fallback);
    case ModelKind::knn:
      return knn_predict(*ts.knn, ts.pipeline->vectorize(report));
    case ModelKind::svm:
      return svm_predict(*ts.svm, ts.pipeline->vectorize(report));
    case ModelKind::mlp:
      return mlp_predict(*ts.mlp, ts.pipeline->vectorize(report));
    case ModelKind::cosine:
      return cosine_select(ts.pipeline->vectorize(report), *ts.codes);
    case ModelKind::projection:
      return projection_select(*ts.projection, ts.pipeline->vectorize(report), *ts.codes,
                               ts.hyper.proj_score);
  }
  throw DataError("predict_system: unhandled model kind");
}

std::vector<double> selection_scores(const TrainedSystem& ts, const ActivityReport& report) {
  switch (ts.model) {
    case ModelKind::lesk: {
      std::string text;
      for (const auto& t : report.tokens) {
        text += t;
        text += ' ';
      }
      return lesk_cosines(lesk_preprocess(text), *ts.lesk);
    }
    case ModelKind::cosine: {
      const FeatureVector v = ts.pipeline->vectorize(report);
      std::vector<double> scores(static_cast<std::size_t>(ts.codes->count()), 0.0);
      double aa = 0.0;
      for (const double x : v.values) aa += x * x;
      if (aa == 0.0) return scores;
      for (int c = 0; c < ts.codes->count(); ++c) {
        const double* b = ts.codes->vectors.row(c);
        double bb = 0.0, u = 0.0;
        for (int i = 0; i < ts.codes->dim(); ++i) {
          bb += b[i] * b[i];
          u += v.values[static_cast<std::size_t>(i)] * b[i];
        }
        scores[static_cast<std::size_t>(c)] = bb == 0.0 ? 0.0 : u / std::sqrt(aa * bb);
      }
      return scores;
    }
    case ModelKind::projection:
      return projection_forward(*ts.projection, ts.pipeline->vectorize(report), *ts.codes,
                                ts.hyper.proj_score);
    default:
      throw DataError("selection_scores: scores unavailable for classification systems");
  }
}

// ---- Cross-validation driver ----------------------------------------------------

CvResult run_cv(const Dataset& data, const LabelSet& labels, const DefinitionMap* defs,
                const EmbeddingTable* table, const FoldPlan& plan, const SystemConfig& sys) {
  if (sys.grid.empty()) throw DataError("run_cv: empty hyperparameter grid");
  if (static_cast<std::size_t>(plan.fold_of_report.size()) != data.reports.size())
    throw DataError("run_cv: fold plan does not match dataset size");

  const Paradigm par = paradigm_of(sys.model);
  const EvalMode dev_mode =
      par == Paradigm::selection ? EvalMode::icf_only : EvalMode::all_labels;
  const int k = plan.k;

  std::vector<std::vector<PredictionRecord>> fold_preds(static_cast<std::size_t>(k));
  std::vector<FoldOutcome> outcomes(static_cast<std::size_t>(k));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(k));

#pragma omp parallel for schedule(dynamic)
  for (int f = 0; f < k; ++f) {
    try {
      std::vector<const ActivityReport*> train, dev, test;
      for (const int i : plan.train_indices(f))
        train.push_back(&data.reports[static_cast<std::size_t>(i)]);
      for (const int i : plan.dev_indices(f))
        dev.push_back(&data.reports[static_cast<std::size_t>(i)]);
      for (const int i : plan.test_indices(f))
        test.push_back(&data.reports[static_cast<std::size_t>(i)]);

      const std::uint64_t fold_seed = mix_seed(sys.seed, static_cast<std::uint64_t>(f));
      int best_gi = 0;
      double best_dev = -1.0;
      std::optional<TrainedSystem> best;
      for (int gi = 0; gi < static_cast<int>(sys.grid.size()); ++gi) {
        TrainedSystem ts =
            train_system(sys, sys.grid[static_cast<std::size_t>(gi)], train, labels, defs,
                         table, mix_seed(fold_seed, static_cast<std::uint64_t>(gi)));
        std::vector<PredictionRecord> dev_records;
        dev_records.reserve(dev.size());
        for (const auto* r : dev)
          dev_records.push_back({r->id, r->gold_label, predict_system(ts, *r), f, sys.id});
        const double score = compute_metrics(dev_records, labels, dev_mode).macro_f1;
        if (score > best_dev) {
          best_dev = score;
          best_gi = gi;
          best = std::move(ts);
        }
      }

      auto& preds = fold_preds[static_cast<std::size_t>(f)];
      preds.reserve(test.size());
      for (const auto* r : test)
        preds.push_back({r->id, r->gold_label, predict_system(*best, *r), f, sys.id});

      auto& out = outcomes[static_cast<std::size_t>(f)];
      out.fold = f;
      out.grid_choice = best_gi;
      out.dev_macro_f1 = best_dev;
      out.test_all = compute_metrics(preds, labels, EvalMode::all_labels);
      out.test_icf = compute_metrics(preds, labels, EvalMode::icf_only);
    } catch (...) {
      errors[static_cast<std::size_t>(f)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  CvResult result;
  result.folds = std::move(outcomes);
  for (auto& preds : fold_preds)
    result.predictions.insert(result.predictions.end(),
                              std::make_move_iterator(preds.begin()),
                              std::make_move_iterator(preds.end()));
  return result;
}

}  // namespace icf
