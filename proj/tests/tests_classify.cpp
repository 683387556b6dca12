#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "icf/classify.hpp"
#include "icf/error.hpp"
#include "icf/rng.hpp"

namespace {

icf::LabelSet abc_labels() {
  icf::LabelSet ls;
  ls.codes = {"A", "B", "C", "Other"};
  ls.other_label = "Other";
  return ls;
}

icf::FeatureVector fv(std::vector<double> values, std::uint64_t fp = 42) {
  icf::FeatureVector v;
  v.values = std::move(values);
  v.config_fingerprint = fp;
  return v;
}

// Brute-force reference: sort (distance, index), take k, majority vote with
// ties toward the earlier label in LabelSet order.
std::string knn_oracle(const std::vector<icf::FeatureVector>& xs,
                       const std::vector<std::string>& ys, const icf::LabelSet& labels,
                       int k, const icf::FeatureVector& q) {
  std::vector<std::pair<double, int>> by_dist;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < q.values.size(); ++j) {
      const double diff = xs[i].values[j] - q.values[j];
      d += diff * diff;
    }
    by_dist.emplace_back(d, static_cast<int>(i));
  }
  std::stable_sort(by_dist.begin(), by_dist.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::map<std::string, int> votes;
  for (int i = 0; i < k && i < static_cast<int>(by_dist.size()); ++i)
    ++votes[ys[static_cast<std::size_t>(by_dist[static_cast<std::size_t>(i)].second)]];
  std::string best;
  int best_votes = -1;
  for (const auto& label : labels.codes) {
    const auto it = votes.find(label);
    if (it != votes.end() && it->second > best_votes) {
      best = label;
      best_votes = it->second;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("knn matches a brute-force reference on random data") {
  const auto labels = abc_labels();
  icf::Rng rng(1234);
  std::vector<icf::FeatureVector> xs;
  std::vector<std::string> ys;
  for (int i = 0; i < 60; ++i) {
    xs.push_back(fv({rng.normal(), rng.normal(), rng.normal()}));
    ys.push_back(labels.codes[static_cast<std::size_t>(rng.index(4))]);
  }
  for (int k : {1, 3, 5}) {
    const auto model = icf::knn_fit(xs, ys, labels, k);
    for (int t = 0; t < 40; ++t) {
      const auto q = fv({rng.normal(), rng.normal(), rng.normal()});
      CAPTURE(k);
      CAPTURE(t);
      CHECK(icf::knn_predict(model, q) == knn_oracle(xs, ys, labels, k, q));
    }
  }
}

TEST_CASE("knn tie-breaking is by train index then label order") {
  const auto labels = abc_labels();
  // Two points at identical distance from the query; k=1 must take the
  // earlier training index.
  {
    std::vector<icf::FeatureVector> xs{fv({1.0}), fv({-1.0})};
    std::vector<std::string> ys{"B", "A"};
    const auto model = icf::knn_fit(xs, ys, labels, 1);
    CHECK(icf::knn_predict(model, fv({0.0})) == "B");
  }
  // Vote tie: one vote each for B and A; earlier label in set order wins.
  {
    std::vector<icf::FeatureVector> xs{fv({1.0}), fv({-1.0})};
    std::vector<std::string> ys{"B", "A"};
    const auto model = icf::knn_fit(xs, ys, labels, 2);
    CHECK(icf::knn_predict(model, fv({0.2})) == "A");
  }
}

TEST_CASE("knn validates inputs") {
  const auto labels = abc_labels();
  CHECK_THROWS_AS(icf::knn_fit({}, {}, labels, 1), icf::DataError);
  CHECK_THROWS_AS(icf::knn_fit({fv({1.0})}, {"A"}, labels, 0), icf::DataError);
  CHECK_THROWS_AS(icf::knn_fit({fv({1.0})}, {"A", "B"}, labels, 1), icf::DataError);
  CHECK_THROWS_AS(icf::knn_fit({fv({1.0})}, {"notalabel"}, labels, 1), icf::DataError);
  const auto model = icf::knn_fit({fv({1.0}), fv({2.0})}, {"A", "B"}, labels, 1);
  // Dimension mismatch at predict time.
  CHECK_THROWS_AS(icf::knn_predict(model, fv({1.0, 2.0})), icf::DataError);
  // Fingerprint mismatch (features from a different pipeline).
  CHECK_THROWS_AS(icf::knn_predict(model, fv({1.0}, 43)), icf::DataError);
}

TEST_CASE("svm separates linearly separable clusters") {
  const auto labels = abc_labels();
  icf::Rng rng(77);
  std::vector<icf::FeatureVector> xs;
  std::vector<std::string> ys;
  const std::map<std::string, std::pair<double, double>> centers{
      {"A", {4.0, 0.0}}, {"B", {-4.0, 0.0}}, {"C", {0.0, 4.0}}};
  for (int i = 0; i < 90; ++i) {
    const auto& label = labels.codes[static_cast<std::size_t>(i % 3)];
    const auto [cx, cy] = centers.at(label);
    xs.push_back(fv({cx + 0.5 * rng.normal(), cy + 0.5 * rng.normal()}));
    ys.push_back(label);
  }
  icf::SvmHyper hyper;
  hyper.c = 10.0;
  hyper.epochs = 300;
  hyper.seed = 5;
  const auto model = icf::svm_fit(xs, ys, labels, hyper);
  int correct = 0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (icf::svm_predict(model, xs[i]) == ys[i]) ++correct;
  CHECK(correct == 90);

  // Decision values: one per label, argmax consistent with predict.
  const auto dv = icf::svm_decision_values(model, xs[0]);
  REQUIRE(dv.size() == labels.codes.size());
  const auto arg = std::max_element(dv.begin(), dv.end()) - dv.begin();
  CHECK(labels.codes[static_cast<std::size_t>(arg)] == icf::svm_predict(model, xs[0]));
}

TEST_CASE("svm training is deterministic in the seed") {
  const auto labels = abc_labels();
  icf::Rng rng(31);
  std::vector<icf::FeatureVector> xs;
  std::vector<std::string> ys;
  for (int i = 0; i < 40; ++i) {
    xs.push_back(fv({rng.normal(), rng.normal()}));
    ys.push_back(labels.codes[static_cast<std::size_t>(rng.index(3))]);
  }
  icf::SvmHyper hyper;
  hyper.epochs = 50;
  hyper.seed = 9;
  const auto m1 = icf::svm_fit(xs, ys, labels, hyper);
  const auto m2 = icf::svm_fit(xs, ys, labels, hyper);
  CHECK(m1.weights.data == m2.weights.data);
  CHECK(m1.bias == m2.bias);
  hyper.seed = 10;
  const auto m3 = icf::svm_fit(xs, ys, labels, hyper);
  CHECK(m1.weights.data != m3.weights.data);
}

TEST_CASE("svm handles a label absent from training; duplicates are harmless") {
  const auto labels = abc_labels();
  // Only A and B in training; model must still score all four labels and
  // never prefer the unseen ones.
  std::vector<icf::FeatureVector> xs{fv({2.0, 0.0}), fv({2.1, 0.0}), fv({-2.0, 0.0}),
                                     fv({-2.2, 0.0}), fv({2.0, 0.1}), fv({-2.0, -0.1})};
  std::vector<std::string> ys{"A", "A", "B", "B", "A", "B"};
  icf::SvmHyper hyper;
  hyper.c = 10.0;
  hyper.epochs = 200;
  hyper.seed = 3;
  const auto model = icf::svm_fit(xs, ys, labels, hyper);
  CHECK(icf::svm_predict(model, fv({3.0, 0.0})) == "A");
  CHECK(icf::svm_predict(model, fv({-3.0, 0.0})) == "B");

  // Exact duplicate rows with the same label do not break training.
  std::vector<icf::FeatureVector> dup_xs{fv({1.0}), fv({1.0}), fv({-1.0})};
  std::vector<std::string> dup_ys{"A", "A", "B"};
  const auto dup_model = icf::svm_fit(dup_xs, dup_ys, labels, hyper);
  CHECK(icf::svm_predict(dup_model, fv({1.5})) == "A");
}

TEST_CASE("mlp gradients match finite differences") {
  const auto labels = abc_labels();
  icf::Rng rng(2024);
  std::vector<icf::FeatureVector> xs;
  std::vector<std::string> ys;
  for (int i = 0; i < 12; ++i) {
    xs.push_back(fv({rng.normal(), rng.normal(), rng.normal()}));
    ys.push_back(labels.codes[static_cast<std::size_t>(rng.index(4))]);
  }
  icf::MlpHyper hyper;
  hyper.hidden = 7;
  hyper.max_epochs = 1;  // fit only to initialize shapes
  hyper.seed = 1;
  auto model = icf::mlp_fit(xs, ys, labels, hyper);

  // Batch of 5 with nonzero l2 so the regularizer's gradient is exercised.
  icf::kern::Matrix x(5, 3);
  std::vector<int> y;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 3; ++j) x.at(i, j) = xs[static_cast<std::size_t>(i)].values[static_cast<std::size_t>(j)];
    y.push_back(static_cast<int>(
        std::find(labels.codes.begin(), labels.codes.end(), ys[static_cast<std::size_t>(i)]) -
        labels.codes.begin()));
  }

  const auto grads = icf::mlp_batch_gradients(model, x, y);
  // Flattened in the same w1, b1, w2, b2 order mlp_parameter_refs uses.
  std::vector<double> analytic;
  analytic.insert(analytic.end(), grads.w1.data.begin(), grads.w1.data.end());
  analytic.insert(analytic.end(), grads.b1.begin(), grads.b1.end());
  analytic.insert(analytic.end(), grads.w2.data.begin(), grads.w2.data.end());
  analytic.insert(analytic.end(), grads.b2.begin(), grads.b2.end());
  auto params = icf::mlp_parameter_refs(model);
  REQUIRE(params.size() == analytic.size());

  const double eps = 1e-6;
  int checked = 0;
  for (std::size_t p = 0; p < params.size(); p += 3) {  // every third: keep it quick
    const double orig = *params[p];
    *params[p] = orig + eps;
    const double up = icf::mlp_batch_loss(model, x, y);
    *params[p] = orig - eps;
    const double down = icf::mlp_batch_loss(model, x, y);
    *params[p] = orig;
    const double fd = (up - down) / (2.0 * eps);
    CHECK(analytic[p] == doctest::Approx(fd).epsilon(1e-4));
    ++checked;
  }
  CHECK(checked >= 20);
}

TEST_CASE("mlp training reduces the loss and fits separable blobs") {
  const auto labels = abc_labels();
  icf::Rng rng(555);
  std::vector<icf::FeatureVector> xs;
  std::vector<std::string> ys;
  const std::map<std::string, std::pair<double, double>> centers{
      {"A", {3.0, 0.0}}, {"B", {-3.0, 0.0}}, {"C", {0.0, 3.0}}};
  for (int i = 0; i < 120; ++i) {
    const auto& label = labels.codes[static_cast<std::size_t>(i % 3)];
    const auto [cx, cy] = centers.at(label);
    xs.push_back(fv({cx + 0.6 * rng.normal(), cy + 0.6 * rng.normal()}));
    ys.push_back(label);
  }
  icf::MlpHyper hyper;
  hyper.hidden = 16;
  hyper.max_epochs = 200;
  hyper.seed = 8;
  const auto model = icf::mlp_fit(xs, ys, labels, hyper);
  int correct = 0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (icf::mlp_predict(model, xs[i]) == ys[i]) ++correct;
  CHECK(correct >= 114);  // >= 95%

  // Probabilities form a distribution, argmax agrees with predict.
  const auto probs = icf::mlp_probabilities(model, xs[0]);
  REQUIRE(probs.size() == labels.codes.size());
  double sum = 0.0;
  for (double p : probs) {
    CHECK(p >= 0.0);
    sum += p;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  const auto arg = std::max_element(probs.begin(), probs.end()) - probs.begin();
  CHECK(labels.codes[static_cast<std::size_t>(arg)] == icf::mlp_predict(model, xs[0]));
}

TEST_CASE("mlp is deterministic in the seed") {
  const auto labels = abc_labels();
  icf::Rng rng(9);
  std::vector<icf::FeatureVector> xs;
  std::vector<std::string> ys;
  for (int i = 0; i < 30; ++i) {
    xs.push_back(fv({rng.normal(), rng.normal()}));
    ys.push_back(labels.codes[static_cast<std::size_t>(rng.index(3))]);
  }
  icf::MlpHyper hyper;
  hyper.hidden = 8;
  hyper.max_epochs = 30;
  hyper.seed = 4;
  const auto m1 = icf::mlp_fit(xs, ys, labels, hyper);
  const auto m2 = icf::mlp_fit(xs, ys, labels, hyper);
  CHECK(m1.w1.data == m2.w1.data);
  CHECK(m1.w2.data == m2.w2.data);
  CHECK(m1.b1 == m2.b1);
  CHECK(m1.b2 == m2.b2);
}

TEST_CASE("mlp with zeroed output layer predicts uniform probabilities") {
  const auto labels = abc_labels();
  std::vector<icf::FeatureVector> xs{fv({1.0, 0.0}), fv({0.0, 1.0})};
  std::vector<std::string> ys{"A", "B"};
  icf::MlpHyper hyper;
  hyper.hidden = 4;
  hyper.max_epochs = 1;
  hyper.seed = 2;
  auto model = icf::mlp_fit(xs, ys, labels, hyper);
  for (auto& v : model.w2.data) v = 0.0;
  for (auto& v : model.b2) v = 0.0;
  const auto probs = icf::mlp_probabilities(model, xs[0]);
  for (double p : probs) CHECK(p == doctest::Approx(0.25).epsilon(1e-12));
}
