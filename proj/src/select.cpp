#include "icf/select.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "icf/error.hpp"
#include "icf/hash.hpp"
#include "icf/optim.hpp"
#include "icf/porter.hpp"
#include "icf/rng.hpp"
#include "icf/text.hpp"

namespace icf {

// ---- Adapted Lesk -------------------------------------------------------------

std::set<std::string> lesk_preprocess(std::string_view text) {
  std::set<std::string> out;
  const auto& stop = english_stopwords();
  for (const auto& w : tokenize_words(text)) {
    if (stop.count(w)) continue;
    out.insert(porter_stem(w));
  }
  return out;
}

namespace {

std::string lesk_profile_text(const CodeDefinition& def, bool extended) {
  std::string text = def.name + " " + def.primary_definition;
  if (extended)
    for (const auto& ch : def.child_definitions) text += " " + ch.name + " " + ch.definition;
  return text;
}

}  // namespace

LeskProfiles build_lesk_profiles(const DefinitionMap& defs, const LabelSet& labels,
                                 bool extended) {
  LeskProfiles p;
  p.extended = extended;
  p.codes = labels.icf_codes();

  std::vector<std::set<std::string>> word_sets;
  word_sets.reserve(p.codes.size());
  std::set<std::string> vocab;
  for (const auto& code : p.codes) {
    const auto it = defs.find(code);
    if (it == defs.end()) throw DataError("build_lesk_profiles: no definition for " + code);
    word_sets.push_back(lesk_preprocess(lesk_profile_text(it->second, extended)));
    if (word_sets.back().empty())
      throw DataError("build_lesk_profiles: empty profile for " + code);
    vocab.insert(word_sets.back().begin(), word_sets.back().end());
  }

  int idx = 0;
  for (const auto& w : vocab) p.vocabulary.emplace(w, idx++);
  for (const auto& ws : word_sets) {
    std::vector<std::uint8_t> row(vocab.size(), 0);
    for (const auto& w : ws) row[static_cast<std::size_t>(p.vocabulary.at(w))] = 1;
    p.rows.push_back(std::move(row));
  }
  return p;
}

std::vector<double> lesk_cosines(const std::set<std::string>& report_words,
                                 const LeskProfiles& profiles) {
  std::vector<double> out(profiles.codes.size(), 0.0);
  if (report_words.empty()) return out;

  // Indices of report words that appear anywhere in the profile vocabulary.
  std::vector<int> present;
  for (const auto& w : report_words) {
    const auto it = profiles.vocabulary.find(w);
    if (it != profiles.vocabulary.end()) present.push_back(it->second);
  }

  // |w_act| counts every report word, in-profile or not.
  const double act_norm = std::sqrt(static_cast<double>(report_words.size()));
  for (std::size_t c = 0; c < profiles.rows.size(); ++c) {
    const auto& row = profiles.rows[c];
    int inter = 0;
    for (const int i : present) inter += row[static_cast<std::size_t>(i)];
    if (inter == 0) continue;
    int profile_size = 0;
    for (const auto bit : row) profile_size += bit;
    out[c] = inter / (act_norm * std::sqrt(static_cast<double>(profile_size)));
  }
  return out;
}

std::string lesk_select(const ActivityReport& report, const LeskProfiles& profiles,
                        const std::string& fallback_code) {
  if (std::find(profiles.codes.begin(), profiles.codes.end(), fallback_code) ==
      profiles.codes.end())
    throw DataError("lesk_select: fallback code " + fallback_code +
                    " is not a selectable code");

  std::string text;
  for (const auto& t : report.tokens) {
    text += t;
    text += ' ';
  }
  const std::set<std::string> words = lesk_preprocess(text);
  if (words.empty()) return fallback_code;

  const std::vector<double> cos = lesk_cosines(words, profiles);
  int best = -1;
  for (int i = 0; i < static_cast<int>(cos.size()); ++i) {
    if (cos[static_cast<std::size_t>(i)] <= 0.0) continue;
    if (best < 0 || cos[static_cast<std::size_t>(i)] > cos[static_cast<std::size_t>(best)])
      best = i;
  }
  if (best < 0) return fallback_code;  // zero overlap with every profile
  return profiles.codes[static_cast<std::size_t>(best)];
}

// ---- Definition embeddings -------------------------------------------------------

CodeEmbeddingSet build_code_embeddings(const DefinitionMap& defs, const LabelSet& labels,
                                       const EmbeddingTable& table, bool extended,
                                       bool duplicated) {
  CodeEmbeddingSet s;
  s.codes = labels.icf_codes();
  s.extended = extended;
  s.duplicated = duplicated;
  const int dim = table.dim() * (duplicated ? 2 : 1);
  s.vectors = kern::Matrix(static_cast<int>(s.codes.size()), dim);

  for (std::size_t i = 0; i < s.codes.size(); ++i) {
    const auto it = defs.find(s.codes[i]);
    if (it == defs.end())
      throw DataError("build_code_embeddings: no definition for " + s.codes[i]);
    const FeatureVector v = embed_definition(it->second, table, extended, duplicated);
    double norm = 0.0;
    for (const double x : v.values) norm += x * x;
    if (norm == 0.0)
      throw DataError("build_code_embeddings: definition embedding for " + s.codes[i] +
                      " is all out-of-vocabulary");
    std::copy(v.values.begin(), v.values.end(), s.vectors.row(static_cast<int>(i)));
  }

  std::uint64_t h = fnv1a("codeset");
  h = fnv1a_u64(static_cast<std::uint64_t>(dim), h);
  h = fnv1a_u64((extended ? 2u : 0u) | (duplicated ? 1u : 0u), h);
  for (const auto& c : s.codes) h = fnv1a(c, h);
  for (const double v : s.vectors.data) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    h = fnv1a_u64(bits, h);
  }
  s.fingerprint = h;
  return s;
}

namespace {

double dot(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

std::string cosine_select(const FeatureVector& v_act, const CodeEmbeddingSet& codes) {
  if (v_act.dim() != codes.dim())
    throw DataError("cosine_select: dimension mismatch (report " + std::to_string(v_act.dim()) +
                    " vs codes " + std::to_string(codes.dim()) + ")");
  const double* a = v_act.values.data();
  const double aa = dot(a, a, v_act.dim());
  if (aa == 0.0) return codes.codes.front();  // degenerate: first code in order

  int best = 0;
  double best_cos = -2.0;
  for (int i = 0; i < codes.count(); ++i) {
    const double* b = codes.vectors.row(i);
    const double bb = dot(b, b, codes.dim());
    const double u = dot(a, b, codes.dim());
    const double c = u / std::sqrt(aa * bb);
    if (c > best_cos) {
      best_cos = c;
      best = i;
    }
  }
  return codes.codes[static_cast<std::size_t>(best)];
}

double combined_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DataError("combined_similarity: dimension mismatch");
  const int n = static_cast<int>(a.size());
  const double bb = dot(b.data(), b.data(), n);
  if (bb == 0.0) throw DataError("combined_similarity: zero code vector");
  const double aa = dot(a.data(), a.data(), n);
  if (aa == 0.0) return 0.0;
  const double u = dot(a.data(), b.data(), n);
  // cos(a,b) * |P|/|b| with |P| = |a·b|/|b|.  Written so a==b gives exactly
  // 1.0: u/sqrt(u*u) and |u|/u-like ratios collapse without rounding.
  return (u / std::sqrt(aa * bb)) * (std::abs(u) / bb);
}

// ---- Projection model --------------------------------------------------------------

const char* to_string(ScoreMode m) {
  return m == ScoreMode::combined ? "combined" : "cosine";
}

ProjectionModel projection_init(int code_dim, const CodeEmbeddingSet& codes,
                                const ProjectionHyper& hyper,
                                std::uint64_t feature_fingerprint) {
  if (hyper.hidden_layers < 1 || hyper.hidden_layers > 10)
    throw DataError("projection_init: hidden_layers must be in 1..10");
  if (code_dim != codes.dim())
    throw DataError("projection_init: dimension mismatch with code embeddings");

  ProjectionModel m;
  m.code_dim = code_dim;
  m.hyper = hyper;
  m.code_order = codes.codes;
  m.codes_fingerprint = codes.fingerprint;
  m.feature_fingerprint = feature_fingerprint;

  Rng rng(mix_seed(hyper.seed, 0x70726f6aull));
  const int n_layers = hyper.hidden_layers + 1;  // hidden... + linear output
  for (int l = 0; l < n_layers; ++l) {
    const int in = l == 0 ? 2 * code_dim : code_dim;
    const int out = code_dim;
    kern::Matrix w(in, out);
    const double bound = std::sqrt(6.0 / (in + out));
    for (auto& v : w.data) v = rng.real(-bound, bound);
    m.weights.push_back(std::move(w));
    m.biases.emplace_back(static_cast<std::size_t>(out), 0.0);
  }
  return m;
}

namespace {

struct ProjForward {
  std::vector<kern::Matrix> activations;  // a_0 = inputs, ..., a_n = outputs
};

// Stacked forward pass: one row per (sample, code) pair.
ProjForward projection_net_forward(const ProjectionModel& model, const kern::Matrix& inputs) {
  ProjForward f;
  f.activations.push_back(inputs);
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    kern::Matrix z;
    kern::matmul(f.activations.back(), model.weights[l], z);
    const auto& bias = model.biases[l];
    for (int r = 0; r < z.rows; ++r) {
      double* row = z.row(r);
      for (int c = 0; c < z.cols; ++c) row[c] += bias[static_cast<std::size_t>(c)];
    }
    if (l + 1 < model.weights.size())  // hidden layers rectify; output is linear
      for (auto& v : z.data)
        if (v < 0.0) v = 0.0;
    f.activations.push_back(std::move(z));
  }
  return f;
}

kern::Matrix stack_inputs(const ProjectionModel& model,
                          const std::vector<const FeatureVector*>& v_acts,
                          const CodeEmbeddingSet& codes) {
  const int d = model.code_dim;
  const int n_codes = codes.count();
  kern::Matrix inputs(static_cast<int>(v_acts.size()) * n_codes, 2 * d);
  for (std::size_t s = 0; s < v_acts.size(); ++s) {
    if (v_acts[s]->dim() != d)
      throw DataError("projection: report embedding dimension " +
                      std::to_string(v_acts[s]->dim()) + " != code dimension " +
                      std::to_string(d));
    for (int c = 0; c < n_codes; ++c) {
      double* row = inputs.row(static_cast<int>(s) * n_codes + c);
      std::copy(v_acts[s]->values.begin(), v_acts[s]->values.end(), row);
      const double* cv = codes.vectors.row(c);
      std::copy(cv, cv + d, row + d);
    }
  }
  return inputs;
}

void check_codes_match(const ProjectionModel& model, const CodeEmbeddingSet& codes) {
  if (model.codes_fingerprint != codes.fingerprint)
    throw DataError("projection: code embedding set differs from the one the model was built against");
}

// Combined score and its gradient w.r.t. the projected vector b.
double combined_score_and_grad(const double* a, double aa, const double* b, int n,
                               double* grad_b) {
  const double bb = dot(b, b, n);
  if (aa == 0.0 || bb == 0.0) {
    if (grad_b) std::fill(grad_b, grad_b + n, 0.0);
    return 0.0;
  }
  const double u = dot(a, b, n);
  const double na = std::sqrt(aa);
  const double r = std::sqrt(bb);
  const double r3 = r * r * r;
  const double score = (u / std::sqrt(aa * bb)) * (std::abs(u) / bb);
  if (grad_b) {
    // d/db [ u|u| / (|a| r^3) ] = 2|u| a / (|a| r^3) - 3 u|u| b / (|a| r^5)
    const double c1 = 2.0 * std::abs(u) / (na * r3);
    const double c2 = 3.0 * u * std::abs(u) / (na * r3 * r * r);
    for (int i = 0; i < n; ++i) grad_b[i] = c1 * a[i] - c2 * b[i];
  }
  return score;
}

}  // namespace

std::vector<double> projection_forward(const ProjectionModel& model, const FeatureVector& v_act,
                                       const CodeEmbeddingSet& codes, ScoreMode mode) {
  check_codes_match(model, codes);
  if (v_act.config_fingerprint != model.feature_fingerprint)
    throw DataError("projection_forward: feature pipeline mismatch");
  const std::vector<const FeatureVector*> one{&v_act};
  const kern::Matrix inputs = stack_inputs(model, one, codes);
  const ProjForward f = projection_net_forward(model, inputs);
  const kern::Matrix& out = f.activations.back();

  const double* a = v_act.values.data();
  const int d = model.code_dim;
  const double aa = dot(a, a, d);

  std::vector<double> scores(static_cast<std::size_t>(codes.count()), 0.0);
  for (int c = 0; c < codes.count(); ++c) {
    const double* b = out.row(c);
    if (mode == ScoreMode::combined) {
      scores[static_cast<std::size_t>(c)] = combined_score_and_grad(a, aa, b, d, nullptr);
    } else {
      const double bb = dot(b, b, d);
      scores[static_cast<std::size_t>(c)] =
          (aa == 0.0 || bb == 0.0) ? 0.0 : dot(a, b, d) / std::sqrt(aa * bb);
    }
  }
  return scores;
}

std::string projection_select(const ProjectionModel& model, const FeatureVector& v_act,
                              const CodeEmbeddingSet& codes, ScoreMode mode) {
  const std::vector<double> scores = projection_forward(model, v_act, codes, mode);
  int best = 0;
  for (int i = 1; i < static_cast<int>(scores.size()); ++i)
    if (scores[static_cast<std::size_t>(i)] > scores[static_cast<std::size_t>(best)]) best = i;
  return model.code_order[static_cast<std::size_t>(best)];
}

namespace {

// Shared loss/gradient core over an explicit sample subset.
double projection_backward(const ProjectionModel& model,
                           const std::vector<const FeatureVector*>& v_acts,
                           const std::vector<int>& gold, const CodeEmbeddingSet& codes,
                           ProjectionGrads* grads) {
  const int n_codes = codes.count();
  const int d = model.code_dim;
  const int n = static_cast<int>(v_acts.size());

  const kern::Matrix inputs = stack_inputs(model, v_acts, codes);
  const ProjForward f = projection_net_forward(model, inputs);
  const kern::Matrix& out = f.activations.back();

  // Scores, softmax, loss, and (optionally) the gradient flowing into the
  // projected vectors.
  kern::Matrix dout(out.rows, out.cols);
  double loss = 0.0;
  std::vector<double> scores(static_cast<std::size_t>(n_codes));
  std::vector<double> grad_b(static_cast<std::size_t>(d));
  for (int s = 0; s < n; ++s) {
    const double* a = v_acts[static_cast<std::size_t>(s)]->values.data();
    const double aa = dot(a, a, d);
    std::vector<std::vector<double>> grads_b(static_cast<std::size_t>(n_codes));
    for (int c = 0; c < n_codes; ++c) {
      const double* b = out.row(s * n_codes + c);
      if (grads) {
        scores[static_cast<std::size_t>(c)] =
            combined_score_and_grad(a, aa, b, d, grad_b.data());
        grads_b[static_cast<std::size_t>(c)] = grad_b;
      } else {
        scores[static_cast<std::size_t>(c)] = combined_score_and_grad(a, aa, b, d, nullptr);
      }
    }

    double mx = scores[0];
    for (int c = 1; c < n_codes; ++c) mx = std::max(mx, scores[static_cast<std::size_t>(c)]);
    double z = 0.0;
    std::vector<double> p(static_cast<std::size_t>(n_codes));
    for (int c = 0; c < n_codes; ++c) {
      p[static_cast<std::size_t>(c)] = std::exp(scores[static_cast<std::size_t>(c)] - mx);
      z += p[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < n_codes; ++c) p[static_cast<std::size_t>(c)] /= z;
    loss += -std::log(std::max(p[static_cast<std::size_t>(gold[static_cast<std::size_t>(s)])],
                               1e-300));

    if (grads) {
      for (int c = 0; c < n_codes; ++c) {
        const double dscore =
            (p[static_cast<std::size_t>(c)] -
             (c == gold[static_cast<std::size_t>(s)] ? 1.0 : 0.0)) /
            n;
        double* drow = dout.row(s * n_codes + c);
        const auto& gb = grads_b[static_cast<std::size_t>(c)];
        for (int i = 0; i < d; ++i) drow[i] = dscore * gb[static_cast<std::size_t>(i)];
      }
    }
  }
  loss /= n;

  if (!grads) return loss;

  // Backprop through the layers.
  grads->weights.assign(model.weights.size(), kern::Matrix());
  grads->biases.assign(model.biases.size(), {});
  kern::Matrix delta = dout;
  for (int l = static_cast<int>(model.weights.size()) - 1; l >= 0; --l) {
    const kern::Matrix& a_in = f.activations[static_cast<std::size_t>(l)];
    kern::matmul_tn(a_in, delta, grads->weights[static_cast<std::size_t>(l)]);
    auto& gb = grads->biases[static_cast<std::size_t>(l)];
    gb.assign(static_cast<std::size_t>(delta.cols), 0.0);
    for (int r = 0; r < delta.rows; ++r)
      for (int c = 0; c < delta.cols; ++c) gb[static_cast<std::size_t>(c)] += delta.at(r, c);
    if (l > 0) {
      kern::Matrix prev;
      kern::matmul_nt(delta, model.weights[static_cast<std::size_t>(l)], prev);
      // ReLU mask of the hidden activation that fed this layer.
      const kern::Matrix& act = f.activations[static_cast<std::size_t>(l)];
      for (std::size_t i = 0; i < prev.data.size(); ++i)
        if (act.data[i] <= 0.0) prev.data[i] = 0.0;
      delta = std::move(prev);
    }
  }
  return loss;
}

std::vector<const FeatureVector*> as_pointers(const std::vector<FeatureVector>& xs) {
  std::vector<const FeatureVector*> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(&x);
  return out;
}

}  // namespace

double projection_batch_loss(const ProjectionModel& model,
                             const std::vector<FeatureVector>& v_acts,
                             const std::vector<int>& gold, const CodeEmbeddingSet& codes) {
  check_codes_match(model, codes);
  if (v_acts.empty() || v_acts.size() != gold.size())
    throw DataError("projection_batch_loss: bad batch");
  return projection_backward(model, as_pointers(v_acts), gold, codes, nullptr);
}

ProjectionGrads projection_batch_gradients(const ProjectionModel& model,
                                           const std::vector<FeatureVector>& v_acts,
                                           const std::vector<int>& gold,
                                           const CodeEmbeddingSet& codes, double* loss_out) {
  check_codes_match(model, codes);
  if (v_acts.empty() || v_acts.size() != gold.size())
    throw DataError("projection_batch_gradients: bad batch");
  ProjectionGrads g;
  const double loss = projection_backward(model, as_pointers(v_acts), gold, codes, &g);
  if (loss_out) *loss_out = loss;
  return g;
}

std::vector<double*> projection_parameter_refs(ProjectionModel& model) {
  std::vector<double*> refs;
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    for (auto& v : model.weights[l].data) refs.push_back(&v);
    for (auto& v : model.biases[l]) refs.push_back(&v);
  }
  return refs;
}

ProjectionModel projection_fit(const std::vector<FeatureVector>& v_acts,
                               const std::vector<std::string>& ys,
                               const CodeEmbeddingSet& codes, const LabelSet& labels,
                               const ProjectionHyper& hyper) {
  if (v_acts.empty()) throw DataError("projection_fit: empty training set");
  if (v_acts.size() != ys.size())
    throw DataError("projection_fit: feature/label count mismatch");
  const std::uint64_t fp = v_acts.front().config_fingerprint;
  for (const auto& x : v_acts)
    if (x.config_fingerprint != fp)
      throw DataError("projection_fit: feature fingerprint mismatch among training points");

  std::vector<int> gold;
  gold.reserve(ys.size());
  for (const auto& y : ys) {
    if (y == labels.other_label)
      throw DataError("projection_fit: training sample labeled '" + y +
                      "' — the catch-all is excluded from candidate-selection training");
    const auto it = std::find(codes.codes.begin(), codes.codes.end(), y);
    if (it == codes.codes.end())
      throw DataError("projection_fit: label " + y + " not among candidate codes");
    gold.push_back(static_cast<int>(it - codes.codes.begin()));
  }

  ProjectionModel model = projection_init(codes.dim(), codes, hyper, fp);

  const AdamParams ap{hyper.learning_rate, hyper.beta1, hyper.beta2, hyper.epsilon};
  std::vector<AdamState> aw, ab;
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    aw.emplace_back(model.weights[l].size());
    ab.emplace_back(model.biases[l].size());
  }

  Rng rng(mix_seed(hyper.seed, 0x666974ull));
  const int n = static_cast<int>(v_acts.size());
  const int batch = std::max(1, std::min(hyper.batch, n));
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

  long long adam_t = 0;
  std::vector<const FeatureVector*> bx;
  std::vector<int> by;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    rng.shuffle(order);
    for (int start = 0; start < n; start += batch) {
      const int bsz = std::min(batch, n - start);
      bx.clear();
      by.clear();
      for (int i = 0; i < bsz; ++i) {
        const int src = order[static_cast<std::size_t>(start + i)];
        bx.push_back(&v_acts[static_cast<std::size_t>(src)]);
        by.push_back(gold[static_cast<std::size_t>(src)]);
      }
      ProjectionGrads g;
      projection_backward(model, bx, by, codes, &g);
      ++adam_t;
      for (std::size_t l = 0; l < model.weights.size(); ++l) {
        aw[l].step(model.weights[l].data.data(), g.weights[l].data.data(),
                   model.weights[l].size(), ap, adam_t);
        ab[l].step(model.biases[l].data(), g.biases[l].data(), model.biases[l].size(), ap,
                   adam_t);
      }
    }
  }
  return model;
}

}  // namespace icf
