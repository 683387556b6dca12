#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "icf/corpus.hpp"
#include "icf/features.hpp"
#include "icf/kernels.hpp"

namespace icf {

// ---- K-nearest neighbors ----------------------------------------------------

struct KnnModel {
  int k = 5;
  kern::Matrix points;              // one training vector per row
  std::vector<int> point_labels;    // index into label_order
  std::vector<std::string> label_order;
  std::uint64_t feature_fingerprint = 0;
};

KnnModel knn_fit(const std::vector<FeatureVector>& xs, const std::vector<std::string>& ys,
                 const LabelSet& labels, int k = 5);

// Majority vote among the k nearest by Euclidean distance.  Distance ties
// break toward the lower training index; vote ties toward the earlier label
// in LabelSet order.
std::string knn_predict(const KnnModel& model, const FeatureVector& x);

// ---- Linear SVM (one-vs-rest, Pegasos-style subgradient descent) -------------

struct SvmHyper {
  double c = 1.0;
  int epochs = 1000;
  std::uint64_t seed = 0;
};

struct LinearSvmModel {
  kern::Matrix weights;             // one row per label
  std::vector<double> bias;
  std::vector<std::string> label_order;
  SvmHyper hyper;
  std::uint64_t feature_fingerprint = 0;
};

LinearSvmModel svm_fit(const std::vector<FeatureVector>& xs,
                       const std::vector<std::string>& ys, const LabelSet& labels,
                       const SvmHyper& hyper);

std::string svm_predict(const LinearSvmModel& model, const FeatureVector& x);
std::vector<double> svm_decision_values(const LinearSvmModel& model, const FeatureVector& x);

// ---- Feed-forward network (1 hidden layer, softmax cross-entropy, Adam) ------

struct MlpHyper {
  int hidden = 100;
  int max_epochs = 1000;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double l2 = 1e-4;        // applied to weights only
  int batch = 200;         // effective batch = min(batch, n)
  double tol = 1e-4;
  int patience = 10;
  std::uint64_t seed = 0;
};

struct MlpModel {
  kern::Matrix w1;                  // dim x hidden
  std::vector<double> b1;
  kern::Matrix w2;                  // hidden x |labels|
  std::vector<double> b2;
  std::vector<std::string> label_order;
  MlpHyper hyper;
  std::uint64_t feature_fingerprint = 0;
};

struct MlpGrads {
  kern::Matrix w1;
  std::vector<double> b1;
  kern::Matrix w2;
  std::vector<double> b2;
};

MlpModel mlp_fit(const std::vector<FeatureVector>& xs, const std::vector<std::string>& ys,
                 const LabelSet& labels, const MlpHyper& hyper);

std::string mlp_predict(const MlpModel& model, const FeatureVector& x);
std::vector<double> mlp_probabilities(const MlpModel& model, const FeatureVector& x);

// Batch objective: mean cross-entropy + (l2 / (2·B)) · Σ‖W‖².  Exposed for
// finite-difference verification; `y` holds label indices per row of `x`.
double mlp_batch_loss(const MlpModel& model, const kern::Matrix& x, const std::vector<int>& y);
MlpGrads mlp_batch_gradients(const MlpModel& model, const kern::Matrix& x,
                             const std::vector<int>& y, double* loss_out = nullptr);

// Mutable views over every parameter, in a fixed order; used by the
// finite-difference tests to perturb parameters one at a time.
std::vector<double*> mlp_parameter_refs(MlpModel& model);

}  // namespace icf
