#include <gtest/gtest.h>

#include <cmath>

#include "actsel/errors.hpp"
#include "actsel/mlp.hpp"
#include "support.hpp"

using namespace actsel;

namespace {

std::vector<std::size_t> sizes(std::initializer_list<std::size_t> s) { return s; }

// Scalar evaluation of the network, one multiply-add at a time.
std::vector<double> scalar_logits(const MlpModel& m, std::span<const double> x) {
  std::vector<double> a(x.begin(), x.end());
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    std::vector<double> z(m.layer_sizes[l + 1]);
    for (std::size_t o = 0; o < z.size(); ++o) {
      double s = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) s += m.weights[l](o, i) * a[i];
      s += m.biases[l][o];
      z[o] = l + 1 < m.weights.size() ? 1.0 / (1.0 + std::exp(-s)) : s;
    }
    a = std::move(z);
  }
  return a;
}

double mean_loss(const MlpModel& m, const Matrix& x, std::span<const ClassId> labels) {
  return cross_entropy(forward(m, x).logits, labels);
}

}  // namespace

TEST(Mlp, RejectsBadLayouts) {
  EXPECT_THROW(MlpModel(sizes({784, 10})), InputError);
  EXPECT_THROW(MlpModel(sizes({784, 8, 8, 8, 8, 8, 8, 10})), InputError);
  EXPECT_THROW(MlpModel(sizes({784, 0, 10})), InputError);
  MlpModel ok(sizes({784, 8, 8, 8, 8, 8, 10}));
  EXPECT_EQ(ok.hidden_layers(), 5u);
}

TEST(Mlp, ShapesAndInitBounds) {
  Rng rng(4);
  const auto layout = mlp_layout(std::vector<std::size_t>{256, 64});
  EXPECT_EQ(layout, sizes({784, 256, 64, 10}));
  MlpModel m = MlpModel::initialized(layout, rng);
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    EXPECT_EQ(m.weights[l].rows(), layout[l + 1]);
    EXPECT_EQ(m.weights[l].cols(), layout[l]);
    const double bound = 1.0 / std::sqrt(static_cast<double>(layout[l]));
    for (double w : m.weights[l].values()) ASSERT_LE(std::fabs(w), bound);
    for (double b : m.biases[l]) ASSERT_LE(std::fabs(b), bound);
  }
  EXPECT_EQ(m.parameter_count(), 784u * 256 + 256 + 256 * 64 + 64 + 64 * 10 + 10);
}

TEST(Mlp, ZeroParametersGiveHalfActivationsAndUniformProbabilities) {
  MlpModel m(mlp_layout(std::vector<std::size_t>{32, 16}));
  m.capture_enabled = true;
  Rng rng(1);
  const Matrix x = test::random_matrix(5, 784, rng, 0.0, 1.0);
  const ForwardResult r = forward(m, x);
  for (const auto& h : r.hidden_activations)
    for (double v : h.values()) EXPECT_EQ(v, 0.5);
  const Matrix probs = softmax(r.logits);
  for (double p : probs.values()) EXPECT_NEAR(p, 0.1, 1e-15);
}

TEST(Mlp, BatchIndependence) {
  Rng rng(2);
  MlpModel m = MlpModel::initialized(mlp_layout(std::vector<std::size_t>{64}), rng);
  const Matrix batch = test::random_matrix(50, 784, rng, 0.0, 1.0);
  const Matrix all = forward(m, batch).logits;
  for (std::size_t r : {0u, 17u, 49u}) {
    const std::vector<std::size_t> one{r};
    const Matrix single = forward(m, gather_rows(batch, one)).logits;
    for (std::size_t c = 0; c < 10; ++c) EXPECT_NEAR(single(0, c), all(r, c), 1e-12);
  }
}

TEST(Mlp, TinyNetMatchesScalarReference) {
  Rng rng(3);
  MlpModel m = MlpModel::initialized(sizes({4, 3, 2}), rng);
  const Matrix x = test::random_matrix(6, 4, rng);
  const Matrix logits = forward(m, x).logits;
  for (std::size_t r = 0; r < 6; ++r) {
    const auto ref = scalar_logits(m, x.row(r));
    for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(logits(r, c), ref[c], 1e-12);
  }
}

TEST(Mlp, ForwardIsDeterministicAndCaptureShapes) {
  Rng r1(8), r2(8);
  MlpModel a = MlpModel::initialized(mlp_layout(std::vector<std::size_t>{20, 30}), r1);
  MlpModel b = MlpModel::initialized(mlp_layout(std::vector<std::size_t>{20, 30}), r2);
  a.capture_enabled = b.capture_enabled = true;
  Rng data(9);
  const Matrix x = test::random_matrix(7, 784, data, 0.0, 1.0);
  const auto fa = forward(a, x);
  const auto fb = forward(b, x);
  EXPECT_EQ(fa.logits, fb.logits);
  ASSERT_EQ(fa.hidden_activations.size(), 2u);
  EXPECT_EQ(fa.hidden_activations[0].rows(), 7u);
  EXPECT_EQ(fa.hidden_activations[0].cols(), 20u);
  EXPECT_EQ(fa.hidden_activations[1].cols(), 30u);
  for (const auto& h : fa.hidden_activations)
    for (double v : h.values()) {
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
    }
  const Matrix p = softmax(fa.logits);
  for (std::size_t r = 0; r < p.rows(); ++r) {
    double s = 0.0;
    for (double v : p.row(r)) s += v;
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
  a.capture_enabled = false;
  EXPECT_TRUE(forward(a, x).hidden_activations.empty());
}

TEST(Mlp, ForwardRejectsWrongWidthAndLabels) {
  MlpModel m(sizes({4, 3, 2}));
  EXPECT_THROW(forward(m, Matrix(2, 5)), ShapeError);
  const std::vector<ClassId> bad{0, 2};
  EXPECT_THROW(backward(m, Matrix(2, 4), bad), InputError);
  const std::vector<ClassId> neg{0, -1};
  EXPECT_THROW(backward(m, Matrix(2, 4), neg), InputError);
  const std::vector<ClassId> short_labels{0};
  EXPECT_THROW(backward(m, Matrix(2, 4), short_labels), InputError);
}

TEST(Mlp, CrossEntropyIsStableForHugeLogits) {
  const Matrix logits{{1e6, 0.0, -1e6}};
  const std::vector<ClassId> right{0}, wrong{1};
  EXPECT_EQ(cross_entropy(logits, right), 0.0);
  EXPECT_NEAR(cross_entropy(logits, wrong), 1e6, 1e-6);
}

TEST(Mlp, PerfectPredictionHasZeroOutputGradient) {
  MlpModel m(sizes({4, 3, 3}));
  m.biases[1] = {0.0, 1000.0, 0.0};  // softmax is exactly one-hot on class 1
  Rng rng(5);
  const Matrix x = test::random_matrix(4, 4, rng);
  const std::vector<ClassId> labels(4, 1);
  const Gradients g = backward(m, x, labels);
  for (double v : g.weights[1].values()) EXPECT_EQ(v, 0.0);
  for (double v : g.biases[1]) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(g.loss, 0.0);
}

TEST(Mlp, DuplicatedBatchGivesSameGradient) {
  Rng rng(6);
  MlpModel m = MlpModel::initialized(sizes({12, 9, 7, 10}), rng);
  const Matrix x = test::random_matrix(5, 12, rng);
  const std::vector<ClassId> labels{1, 3, 5, 7, 9};
  Matrix x2(10, 12);
  std::vector<ClassId> labels2;
  for (std::size_t r = 0; r < 10; ++r) {
    std::copy_n(x.row(r % 5).data(), 12, x2.row(r).data());
    labels2.push_back(labels[r % 5]);
  }
  const Gradients a = backward(m, x, labels);
  const Gradients b = backward(m, x2, labels2);
  const auto va = a.views();
  const auto vb = b.views();
  for (std::size_t p = 0; p < va.size(); ++p)
    for (std::size_t i = 0; i < va[p].size(); ++i) EXPECT_NEAR(va[p][i], vb[p][i], 1e-12);
}

TEST(Mlp, GradientMatchesFiniteDifferencesOnSmallNet) {
  Rng rng(7);
  MlpModel m = MlpModel::initialized(sizes({6, 5, 4, 10}), rng);
  const Matrix x = test::random_matrix(8, 6, rng);
  const std::vector<ClassId> labels{0, 1, 2, 3, 4, 5, 6, 7};
  const Gradients g = backward(m, x, labels);
  EXPECT_DOUBLE_EQ(g.loss, mean_loss(m, x, labels));
  auto params = m.parameter_views();
  const auto grads = g.views();
  const double h = 1e-5;
  for (std::size_t p = 0; p < params.size(); ++p)
    for (std::size_t i = 0; i < params[p].size(); ++i) {
      const double saved = params[p][i];
      params[p][i] = saved + h;
      const double up = mean_loss(m, x, labels);
      params[p][i] = saved - h;
      const double down = mean_loss(m, x, labels);
      params[p][i] = saved;
      EXPECT_NEAR(grads[p][i], (up - down) / (2 * h), 1e-8);
    }
}

TEST(Accuracy, Examples) {
  // Uniform predictions: every tie goes to class 0.
  MlpModel m(sizes({4, 3, 10}));
  Dataset zeros;
  zeros.images = Matrix(5, 4, 0.3);
  zeros.labels.assign(5, 0);
  EXPECT_EQ(accuracy(m, zeros), 1.0);
  zeros.labels[2] = 4;
  EXPECT_EQ(accuracy(m, zeros), 0.8);

  // Contrived logits: output bias picks the label directly from the input.
  MlpModel c(sizes({2, 2, 10}));
  c.weights[0] = Matrix{{100, 0}, {0, 100}};
  c.weights[1] = Matrix(10, 2);
  c.weights[1](3, 0) = 50;
  c.weights[1](8, 1) = 50;
  Dataset d;
  d.images = Matrix{{1, 0}, {0, 1}, {1, 0}};
  d.labels = {3, 8, 3};
  EXPECT_EQ(accuracy(c, d), 1.0);

  Dataset empty;
  EXPECT_THROW(accuracy(m, empty), InputError);
}

TEST(Accuracy, MatchesPerSampleCount) {
  Rng rng(10);
  MlpModel m = MlpModel::initialized(sizes({5, 4, 10}), rng);
  Dataset d;
  d.images = test::random_matrix(20, 5, rng);
  for (int i = 0; i < 20; ++i) d.labels.push_back(static_cast<ClassId>(rng.below(10)));
  int hits = 0;
  for (std::size_t r = 0; r < 20; ++r) {
    const auto logits = scalar_logits(m, d.images.row(r));
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.size(); ++c)
      if (logits[c] > logits[best]) best = c;
    hits += static_cast<int>(best) == d.labels[r];
  }
  EXPECT_DOUBLE_EQ(accuracy(m, d), hits / 20.0);
}

TEST(Evaluate, ChunkingDoesNotChangeResults) {
  Rng rng(11);
  MlpModel m = MlpModel::initialized(mlp_layout(std::vector<std::size_t>{16}, 30), rng);
  Dataset d = test::synthetic_dataset(7, 30, 3);
  const Evaluation a = evaluate(m, d, true, 1000);
  const Evaluation b = evaluate(m, d, true, 3);
  EXPECT_EQ(a.accuracy, b.accuracy);
  EXPECT_NEAR(a.loss, b.loss, 1e-12);
  ASSERT_EQ(a.trace.layers.size(), 1u);
  EXPECT_EQ(a.trace.layers[0], b.trace.layers[0]);
  EXPECT_EQ(a.trace.labels, d.labels);
  EXPECT_EQ(a.trace.layers[0].rows(), d.size());
  EXPECT_TRUE(evaluate(m, d, false).trace.layers.empty());
}
