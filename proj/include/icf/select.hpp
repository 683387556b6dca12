#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "icf/corpus.hpp"
#include "icf/features.hpp"
#include "icf/kernels.hpp"

namespace icf {

// ---- Adapted Lesk -------------------------------------------------------------

// Lowercase, drop stopwords, Porter-stem, deduplicate.
std::set<std::string> lesk_preprocess(std::string_view text);

// Per-code binary word-set profiles over the stemmed definition vocabulary.
struct LeskProfiles {
  std::vector<std::string> codes;                    // LabelSet order, no catch-all
  std::unordered_map<std::string, int> vocabulary;   // profile word -> index
  std::vector<std::vector<std::uint8_t>> rows;       // binary profile per code
  bool extended = false;

  const std::vector<std::uint8_t>& profile(int code_index) const {
    return rows[static_cast<std::size_t>(code_index)];
  }
};

// Profiles from definition texts only (never from reports).  With `extended`,
// child definitions contribute to the word sets as well.
LeskProfiles build_lesk_profiles(const DefinitionMap& defs, const LabelSet& labels,
                                 bool extended);

// Cosine between the report's stemmed word set and each code profile, where
// |·| is the Euclidean norm of the binary vectors (√set-size).
std::vector<double> lesk_cosines(const std::set<std::string>& report_words,
                                 const LeskProfiles& profiles);

// Argmax-cosine code; all-zero overlap (or empty report word set) falls back
// to `fallback_code`; ties break toward earlier LabelSet order.
std::string lesk_select(const ActivityReport& report, const LeskProfiles& profiles,
                        const std::string& fallback_code);

// ---- Definition embeddings ------------------------------------------------------

struct CodeEmbeddingSet {
  std::vector<std::string> codes;  // LabelSet order, no catch-all
  kern::Matrix vectors;            // one definition embedding per row
  bool extended = false;
  bool duplicated = false;         // concat(v,v) rows to match oracle report vectors
  std::uint64_t fingerprint = 0;

  int dim() const { return vectors.cols; }
  int count() const { return vectors.rows; }
};

CodeEmbeddingSet build_code_embeddings(const DefinitionMap& defs, const LabelSet& labels,
                                       const EmbeddingTable& table, bool extended,
                                       bool duplicated);

// Plain cosine selection; zero report vector falls back to the first code in
// LabelSet order; ties break toward earlier order.
std::string cosine_select(const FeatureVector& v_act, const CodeEmbeddingSet& codes);

// cos(a,b) · |a·b|/|b|²  ==  (a·b)·|a·b| / (|a|·|b|³).
// Zero `a` scores 0; zero `b` is an error.
double combined_similarity(const std::vector<double>& a, const std::vector<double>& b);

// ---- Learned projection ----------------------------------------------------------

enum class ScoreMode { combined, cosine };
const char* to_string(ScoreMode m);

struct ProjectionHyper {
  int hidden_layers = 1;  // 1..10
  int epochs = 50;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch = 32;
  std::uint64_t seed = 0;
};

// Shared feed-forward net mapping concat(v_act, v_code) -> projected code
// vector of dim(v_code).  Hidden layers have the code-embedding width and
// rectified-linear activations; the output layer is linear.  The same
// parameters are applied to every code.
struct ProjectionModel {
  std::vector<kern::Matrix> weights;            // layer l: in x out
  std::vector<std::vector<double>> biases;
  int code_dim = 0;
  ProjectionHyper hyper;
  std::vector<std::string> code_order;
  std::uint64_t codes_fingerprint = 0;
  std::uint64_t feature_fingerprint = 0;
};

struct ProjectionGrads {
  std::vector<kern::Matrix> weights;
  std::vector<std::vector<double>> biases;
};

// Freshly initialized (untrained) model; exposed so tests can set weights.
ProjectionModel projection_init(int code_dim, const CodeEmbeddingSet& codes,
                                const ProjectionHyper& hyper,
                                std::uint64_t feature_fingerprint);

// Per-code similarity scores for one report embedding.  Training always uses
// the combined score; `mode` switches the test-time scorer (see below).
// Degenerate rules: zero v_act or a projected vector that collapses to zero
// scores 0.
std::vector<double> projection_forward(const ProjectionModel& model, const FeatureVector& v_act,
                                       const CodeEmbeddingSet& codes,
                                       ScoreMode mode = ScoreMode::combined);

// Cross-entropy of the softmax over per-code combined-similarity scores.
// Exposed for finite-difference verification.
double projection_batch_loss(const ProjectionModel& model,
                             const std::vector<FeatureVector>& v_acts,
                             const std::vector<int>& gold, const CodeEmbeddingSet& codes);
ProjectionGrads projection_batch_gradients(const ProjectionModel& model,
                                           const std::vector<FeatureVector>& v_acts,
                                           const std::vector<int>& gold,
                                           const CodeEmbeddingSet& codes,
                                           double* loss_out = nullptr);
std::vector<double*> projection_parameter_refs(ProjectionModel& model);

// Trains the projection net for a fixed number of epochs (no early stop).
// Rejects samples labeled with the catch-all: the candidate-selection
// paradigm has no representation for them.
ProjectionModel projection_fit(const std::vector<FeatureVector>& v_acts,
                               const std::vector<std::string>& ys,
                               const CodeEmbeddingSet& codes, const LabelSet& labels,
                               const ProjectionHyper& hyper);

// Argmax of projection_forward scores; never returns the catch-all label.
std::string projection_select(const ProjectionModel& model, const FeatureVector& v_act,
                              const CodeEmbeddingSet& codes,
                              ScoreMode mode = ScoreMode::combined);

}  // namespace icf
