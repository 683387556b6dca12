#include "icf/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "icf/error.hpp"
#include "icf/optim.hpp"
#include "icf/rng.hpp"

namespace icf {

namespace {

// Shared fit-time validation: non-empty, uniform fingerprint and dimension.
void check_training_batch(const std::vector<FeatureVector>& xs,
                          const std::vector<std::string>& ys, const LabelSet& labels,
                          const char* who) {
  if (xs.empty()) throw DataError(std::string(who) + ": empty training set");
  if (xs.size() != ys.size())
    throw DataError(std::string(who) + ": feature/label count mismatch");
  const std::uint64_t fp = xs.front().config_fingerprint;
  const int dim = xs.front().dim();
  for (const auto& x : xs) {
    if (x.config_fingerprint != fp)
      throw DataError(std::string(who) + ": feature fingerprint mismatch among training points");
    if (x.dim() != dim)
      throw DataError(std::string(who) + ": inconsistent feature dimensions");
  }
  for (const auto& y : ys)
    if (!labels.contains(y))
      throw DataError(std::string(who) + ": training label outside label set: " + y);
}

kern::Matrix pack_rows(const std::vector<FeatureVector>& xs) {
  kern::Matrix m(static_cast<int>(xs.size()), xs.front().dim());
  for (std::size_t i = 0; i < xs.size(); ++i)
    std::copy(xs[i].values.begin(), xs[i].values.end(), m.row(static_cast<int>(i)));
  return m;
}

int argmax_earliest(const std::vector<double>& scores) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(scores.size()); ++i)
    if (scores[static_cast<std::size_t>(i)] > scores[static_cast<std::size_t>(best)]) best = i;
  return best;
}

}  // namespace

// ---- KNN ---------------------------------------------------------------------

KnnModel knn_fit(const std::vector<FeatureVector>& xs, const std::vector<std::string>& ys,
                 const LabelSet& labels, int k) {
  check_training_batch(xs, ys, labels, "knn_fit");
  if (k < 1) throw DataError("knn_fit: k must be >= 1");
  if (k > static_cast<int>(xs.size()))
    throw DataError("knn_fit: k exceeds number of training points");

  KnnModel m;
  m.k = k;
  m.points = pack_rows(xs);
  m.label_order = labels.codes;
  m.point_labels.reserve(ys.size());
  for (const auto& y : ys) m.point_labels.push_back(labels.index_of(y));
  m.feature_fingerprint = xs.front().config_fingerprint;
  return m;
}

std::string knn_predict(const KnnModel& model, const FeatureVector& x) {
  if (x.dim() != model.points.cols)
    throw DataError("knn_predict: dimension mismatch");
  if (x.config_fingerprint != model.feature_fingerprint)
    throw DataError("knn_predict: feature pipeline mismatch");
  if (model.k > model.points.rows)
    throw DataError("knn_predict: k exceeds stored points");

  std::vector<double> d2;
  kern::row_sqdist(model.points, x.values.data(), d2);

  std::vector<std::pair<double, int>> order(d2.size());
  for (std::size_t i = 0; i < d2.size(); ++i)
    order[i] = {d2[i], static_cast<int>(i)};
  std::partial_sort(order.begin(), order.begin() + model.k, order.end());

  std::vector<int> votes(model.label_order.size(), 0);
  for (int i = 0; i < model.k; ++i)
    ++votes[static_cast<std::size_t>(
        model.point_labels[static_cast<std::size_t>(order[static_cast<std::size_t>(i)].second)])];

  int best = 0;
  for (int l = 1; l < static_cast<int>(votes.size()); ++l)
    if (votes[static_cast<std::size_t>(l)] > votes[static_cast<std::size_t>(best)]) best = l;
  return model.label_order[static_cast<std::size_t>(best)];
}

// ---- Linear SVM ----------------------------------------------------------------

LinearSvmModel svm_fit(const std::vector<FeatureVector>& xs,
                       const std::vector<std::string>& ys, const LabelSet& labels,
                       const SvmHyper& hyper) {
  check_training_batch(xs, ys, labels, "svm_fit");
  if (hyper.c <= 0.0) throw DataError("svm_fit: C must be positive");
  if (hyper.epochs < 1) throw DataError("svm_fit: epochs must be >= 1");
  {
    std::vector<std::string> distinct(ys);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 2) throw DataError("svm_fit: single-label training set");
  }

  const int n = static_cast<int>(xs.size());
  const int dim = xs.front().dim();
  const int n_labels = static_cast<int>(labels.codes.size());
  const double lambda = 1.0 / (hyper.c * n);

  std::vector<int> yidx(ys.size());
  for (std::size_t i = 0; i < ys.size(); ++i) yidx[i] = labels.index_of(ys[i]);

  LinearSvmModel m;
  m.weights = kern::Matrix(n_labels, dim);
  m.bias.assign(static_cast<std::size_t>(n_labels), 0.0);
  m.label_order = labels.codes;
  m.hyper = hyper;
  m.feature_fingerprint = xs.front().config_fingerprint;

  // One independent binary subproblem per label; deterministic per-label
  // RNG streams make the loop safe to parallelize.
#pragma omp parallel for schedule(dynamic)
  for (int l = 0; l < n_labels; ++l) {
    Rng rng(mix_seed(hyper.seed, static_cast<std::uint64_t>(l)));
    double* w = m.weights.row(l);
    double b = 0.0;
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

    long long t = 0;
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
      rng.shuffle(order);
      for (const int i : order) {
        ++t;
        const double eta = 1.0 / (lambda * static_cast<double>(t));
        const double* x = xs[static_cast<std::size_t>(i)].values.data();
        const double y = yidx[static_cast<std::size_t>(i)] == l ? 1.0 : -1.0;

        double score = b;
        for (int d = 0; d < dim; ++d) score += w[d] * x[d];

        // The bias is treated as a weight on a constant 1 feature, so it is
        // shrunk like any other coordinate (liblinear's augmentation).
        const double shrink = 1.0 - eta * lambda;
        if (y * score < 1.0) {
          const double step = eta * y;
          for (int d = 0; d < dim; ++d) w[d] = shrink * w[d] + step * x[d];
          b = shrink * b + step;
        } else {
          for (int d = 0; d < dim; ++d) w[d] *= shrink;
          b *= shrink;
        }
      }
    }
    m.bias[static_cast<std::size_t>(l)] = b;
  }
  return m;
}

std::vector<double> svm_decision_values(const LinearSvmModel& model, const FeatureVector& x) {
  if (x.dim() != model.weights.cols) throw DataError("svm_predict: dimension mismatch");
  if (x.config_fingerprint != model.feature_fingerprint)
    throw DataError("svm_predict: feature pipeline mismatch");
  std::vector<double> scores(model.bias.size(), 0.0);
  for (int l = 0; l < model.weights.rows; ++l) {
    const double* w = model.weights.row(l);
    double s = model.bias[static_cast<std::size_t>(l)];
    for (int d = 0; d < model.weights.cols; ++d) s += w[d] * x.values[static_cast<std::size_t>(d)];
    scores[static_cast<std::size_t>(l)] = s;
  }
  return scores;
}

std::string svm_predict(const LinearSvmModel& model, const FeatureVector& x) {
  const std::vector<double> scores = svm_decision_values(model, x);
  return model.label_order[static_cast<std::size_t>(argmax_earliest(scores))];
}

// ---- MLP ------------------------------------------------------------------------

namespace {

// Forward pass for a batch; returns hidden activations, pre-activations and
// softmax probabilities.
struct MlpForward {
  kern::Matrix z1;
  kern::Matrix h;
  kern::Matrix probs;
  double mean_ce = 0.0;
};

MlpForward mlp_forward(const MlpModel& model, const kern::Matrix& x,
                       const std::vector<int>* y) {
  MlpForward f;
  kern::matmul(x, model.w1, f.z1);
  for (int r = 0; r < f.z1.rows; ++r) {
    double* row = f.z1.row(r);
    for (int c = 0; c < f.z1.cols; ++c) row[c] += model.b1[static_cast<std::size_t>(c)];
  }
  f.h = f.z1;
  for (auto& v : f.h.data)
    if (v < 0.0) v = 0.0;

  kern::matmul(f.h, model.w2, f.probs);
  double ce_sum = 0.0;
  for (int r = 0; r < f.probs.rows; ++r) {
    double* row = f.probs.row(r);
    for (int c = 0; c < f.probs.cols; ++c) row[c] += model.b2[static_cast<std::size_t>(c)];
    double mx = row[0];
    for (int c = 1; c < f.probs.cols; ++c) mx = std::max(mx, row[c]);
    double z = 0.0;
    for (int c = 0; c < f.probs.cols; ++c) {
      row[c] = std::exp(row[c] - mx);
      z += row[c];
    }
    for (int c = 0; c < f.probs.cols; ++c) row[c] /= z;
    if (y) {
      const double p = std::max(row[(*y)[static_cast<std::size_t>(r)]], 1e-300);
      ce_sum += -std::log(p);
    }
  }
  if (y) f.mean_ce = ce_sum / f.probs.rows;
  return f;
}

double sq_norm(const kern::Matrix& m) {
  double s = 0.0;
  for (const double v : m.data) s += v * v;
  return s;
}

}  // namespace

double mlp_batch_loss(const MlpModel& model, const kern::Matrix& x, const std::vector<int>& y) {
  const MlpForward f = mlp_forward(model, x, &y);
  const double reg = model.hyper.l2 / (2.0 * x.rows) * (sq_norm(model.w1) + sq_norm(model.w2));
  return f.mean_ce + reg;
}

MlpGrads mlp_batch_gradients(const MlpModel& model, const kern::Matrix& x,
                             const std::vector<int>& y, double* loss_out) {
  const int batch = x.rows;
  MlpForward f = mlp_forward(model, x, &y);
  if (loss_out)
    *loss_out = f.mean_ce +
                model.hyper.l2 / (2.0 * batch) * (sq_norm(model.w1) + sq_norm(model.w2));

  // dZ2 = (probs - onehot) / batch
  kern::Matrix dz2 = f.probs;
  for (int r = 0; r < batch; ++r)
    dz2.at(r, y[static_cast<std::size_t>(r)]) -= 1.0;
  for (auto& v : dz2.data) v /= batch;

  MlpGrads g;
  kern::matmul_tn(f.h, dz2, g.w2);
  const double reg = model.hyper.l2 / batch;
  for (std::size_t i = 0; i < g.w2.data.size(); ++i) g.w2.data[i] += reg * model.w2.data[i];
  g.b2.assign(static_cast<std::size_t>(dz2.cols), 0.0);
  for (int r = 0; r < batch; ++r)
    for (int c = 0; c < dz2.cols; ++c) g.b2[static_cast<std::size_t>(c)] += dz2.at(r, c);

  kern::Matrix dh;
  kern::matmul_nt(dz2, model.w2, dh);
  for (std::size_t i = 0; i < dh.data.size(); ++i)
    if (f.z1.data[i] <= 0.0) dh.data[i] = 0.0;

  kern::matmul_tn(x, dh, g.w1);
  for (std::size_t i = 0; i < g.w1.data.size(); ++i) g.w1.data[i] += reg * model.w1.data[i];
  g.b1.assign(static_cast<std::size_t>(dh.cols), 0.0);
  for (int r = 0; r < batch; ++r)
    for (int c = 0; c < dh.cols; ++c) g.b1[static_cast<std::size_t>(c)] += dh.at(r, c);

  return g;
}

std::vector<double*> mlp_parameter_refs(MlpModel& model) {
  std::vector<double*> refs;
  refs.reserve(model.w1.size() + model.b1.size() + model.w2.size() + model.b2.size());
  for (auto& v : model.w1.data) refs.push_back(&v);
  for (auto& v : model.b1) refs.push_back(&v);
  for (auto& v : model.w2.data) refs.push_back(&v);
  for (auto& v : model.b2) refs.push_back(&v);
  return refs;
}

MlpModel mlp_fit(const std::vector<FeatureVector>& xs, const std::vector<std::string>& ys,
                 const LabelSet& labels, const MlpHyper& hyper) {
  check_training_batch(xs, ys, labels, "mlp_fit");
  if (hyper.hidden < 1) throw DataError("mlp_fit: hidden width must be >= 1");
  if (hyper.max_epochs < 1) throw DataError("mlp_fit: max_epochs must be >= 1");

  const int n = static_cast<int>(xs.size());
  const int dim = xs.front().dim();
  const int n_labels = static_cast<int>(labels.codes.size());
  const int batch = std::min(hyper.batch, n);

  MlpModel m;
  m.label_order = labels.codes;
  m.hyper = hyper;
  m.feature_fingerprint = xs.front().config_fingerprint;
  m.w1 = kern::Matrix(dim, hyper.hidden);
  m.b1.assign(static_cast<std::size_t>(hyper.hidden), 0.0);
  m.w2 = kern::Matrix(hyper.hidden, n_labels);
  m.b2.assign(static_cast<std::size_t>(n_labels), 0.0);

  Rng rng(mix_seed(hyper.seed, 0x6d6c70));
  const double bound1 = std::sqrt(6.0 / (dim + hyper.hidden));
  for (auto& v : m.w1.data) v = rng.real(-bound1, bound1);
  const double bound2 = std::sqrt(6.0 / (hyper.hidden + n_labels));
  for (auto& v : m.w2.data) v = rng.real(-bound2, bound2);

  const kern::Matrix all = pack_rows(xs);
  std::vector<int> yidx(ys.size());
  for (std::size_t i = 0; i < ys.size(); ++i) yidx[i] = labels.index_of(ys[i]);

  const AdamParams ap{hyper.learning_rate, hyper.beta1, hyper.beta2, hyper.epsilon};
  AdamState aw1(m.w1.size()), ab1(m.b1.size()), aw2(m.w2.size()), ab2(m.b2.size());
  long long adam_t = 0;

  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

  double best_loss = std::numeric_limits<double>::infinity();
  int no_improve = 0;

  for (int epoch = 0; epoch < hyper.max_epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (int start = 0; start < n; start += batch) {
      const int bsz = std::min(batch, n - start);
      kern::Matrix xb(bsz, dim);
      std::vector<int> yb(static_cast<std::size_t>(bsz));
      for (int r = 0; r < bsz; ++r) {
        const int src = order[static_cast<std::size_t>(start + r)];
        std::copy(all.row(src), all.row(src) + dim, xb.row(r));
        yb[static_cast<std::size_t>(r)] = yidx[static_cast<std::size_t>(src)];
      }
      double batch_loss = 0.0;
      MlpGrads g = mlp_batch_gradients(m, xb, yb, &batch_loss);
      epoch_loss += batch_loss * bsz;

      ++adam_t;
      aw1.step(m.w1.data.data(), g.w1.data.data(), m.w1.size(), ap, adam_t);
      ab1.step(m.b1.data(), g.b1.data(), m.b1.size(), ap, adam_t);
      aw2.step(m.w2.data.data(), g.w2.data.data(), m.w2.size(), ap, adam_t);
      ab2.step(m.b2.data(), g.b2.data(), m.b2.size(), ap, adam_t);
    }
    epoch_loss /= n;

    // Early stop when no epoch beats the best loss by at least tol for
    // `patience` consecutive epochs.
    if (epoch_loss > best_loss - hyper.tol) {
      if (++no_improve >= hyper.patience) break;
    } else {
      no_improve = 0;
    }
    best_loss = std::min(best_loss, epoch_loss);
  }
  return m;
}

std::vector<double> mlp_probabilities(const MlpModel& model, const FeatureVector& x) {
  if (x.dim() != model.w1.rows) throw DataError("mlp_predict: dimension mismatch");
  if (x.config_fingerprint != model.feature_fingerprint)
    throw DataError("mlp_predict: feature pipeline mismatch");
  kern::Matrix xb(1, x.dim());
  std::copy(x.values.begin(), x.values.end(), xb.row(0));
  const MlpForward f = mlp_forward(model, xb, nullptr);
  return {f.probs.row(0), f.probs.row(0) + f.probs.cols};
}

std::string mlp_predict(const MlpModel& model, const FeatureVector& x) {
  const std::vector<double> p = mlp_probabilities(model, x);
  return model.label_order[static_cast<std::size_t>(argmax_earliest(p))];
}

}  // namespace icf
