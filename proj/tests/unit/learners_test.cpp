#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "json.hpp"
#include "xlink/gbdt.hpp"
#include "xlink/linear.hpp"
#include "xlink/metrics.hpp"

namespace xlink {
namespace {

FeatureMatrix matrix(std::size_t dim, const std::vector<std::vector<double>>& rows, const std::vector<int>& labels) {
  FeatureMatrix m;
  m.dim = dim;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    m.pairs.emplace_back("a" + std::to_string(r), "b" + std::to_string(r));
    m.values.insert(m.values.end(), rows[r].begin(), rows[r].end());
  }
  m.labels = labels;
  return m;
}

FeatureMatrix random_matrix(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x(dim);
    for (auto& v : x) v = g(rng);
    double s = x[0] - 0.5 * x[1] + 0.8 * g(rng);
    rows.push_back(x);
    labels.push_back(s > 0 ? 1 : 0);
  }
  return matrix(dim, rows, labels);
}

// Four noisy corners, labels by XOR of the quadrant signs.
FeatureMatrix xor_data() {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> jitter(-0.3, 0.3);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (int i = 0; i < 400; ++i) {
    int a = i % 2, b = (i / 2) % 2;
    rows.push_back({a + jitter(rng), b + jitter(rng)});
    labels.push_back(a ^ b);
  }
  return matrix(2, rows, labels);
}

double train_auc(const FeatureMatrix& m, auto&& score) {
  std::vector<double> pos, neg;
  for (std::size_t r = 0; r < m.rows(); ++r) (m.labels[r] ? pos : neg).push_back(score(m.row(r)));
  return auc(pos, neg);
}

TEST(Sigmoid, Values) {
  EXPECT_NEAR(sigmoid(2.0), 0.88080, 5e-6);
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_GT(sigmoid(30.0), 0.9999);
  EXPECT_GT(sigmoid(-30.0), 0.0);
  EXPECT_LT(sigmoid(-30.0), 1e-12);
  EXPECT_TRUE(std::isfinite(sigmoid(-800.0)));
  EXPECT_EQ(sigmoid(800.0), 1.0);
}

TEST(PredictLr, HandModels) {
  LinearModel m;
  m.weights = {0.0};
  m.mean = {0.0};
  m.stddev = {1.0};
  std::vector<double> x{2.0};
  EXPECT_EQ(predict_lr(m, x), 0.5);
  m.bias = 30.0;
  EXPECT_GT(predict_lr(m, x), 0.9999);
  m.bias = 0.0;
  m.weights = {1.0};
  EXPECT_NEAR(predict_lr(m, x), 0.88080, 5e-6);
  m.mean = {1.0};
  m.stddev = {0.5};  // standardized input is still 2
  EXPECT_NEAR(predict_lr(m, x), sigmoid(2.0), 1e-15);
  std::vector<double> wrong{1.0, 2.0};
  EXPECT_THROW(predict_lr(m, wrong), Error);
}

TEST(TrainLr, SeparableOneDimensional) {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (int i = 0; i < 40; ++i) {
    rows.push_back({i < 20 ? -1.0 - i * 0.1 : 1.0 + i * 0.1});
    labels.push_back(i < 20 ? 0 : 1);
  }
  auto m = train_lr(matrix(1, rows, labels));
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(predict_lr(m, rows[i]) > 0.5, labels[i] == 1) << i;
}

TEST(TrainLr, ZeroFeatureGetsNoWeight) {
  auto m = random_matrix(200, 3, 4);
  for (std::size_t r = 0; r < m.rows(); ++r) m.row(r)[2] = 0.0;
  auto lr = train_lr(m);
  EXPECT_LE(std::abs(lr.weights[2]), 1e-8);
  EXPECT_EQ(lr.stddev[2], 1.0);
}

TEST(TrainLr, LossNeverIncreases) {
  auto m = random_matrix(100, 5, 9);
  auto lr = train_lr(m, LrConfig{1e-4, 50, 0.1, 0});
  ASSERT_EQ(lr.loss_trace.size(), 51u);
  for (std::size_t i = 1; i < lr.loss_trace.size(); ++i) EXPECT_LE(lr.loss_trace[i], lr.loss_trace[i - 1]) << i;
  EXPECT_LT(lr.loss_trace.back(), lr.loss_trace.front());
}

TEST(TrainLr, Rejections) {
  auto one_class = matrix(1, {{1.0}, {2.0}}, {1, 1});
  EXPECT_THROW(train_lr(one_class), Error);
  EXPECT_THROW(train_lr(matrix(1, {}, {})), Error);
  EXPECT_THROW(train_lr(matrix(1, {{1.0}, {2.0}}, {0, 2})), Error);
}

TEST(LogisticObjective, GradientMatchesFiniteDifferences) {
  auto m = random_matrix(60, 4, 21);
  LogisticObjective obj(m.values, m.dim, m.labels, 1e-2);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    std::vector<double> p(5), grad(5);
    for (auto& v : p) v = g(rng);
    obj.loss_and_gradient(p, grad);
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double h = 1e-5;
      auto hi = p, lo = p;
      hi[k] += h;
      lo[k] -= h;
      double num = (obj.loss(hi) - obj.loss(lo)) / (2 * h);
      worst = std::max(worst, std::abs(num - grad[k]) / std::max(1e-8, std::abs(num) + std::abs(grad[k])));
    }
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(LrJson, RoundTripAndVersionGate) {
  auto lr = train_lr(random_matrix(80, 3, 2));
  auto text = lr_to_json(lr);
  auto back = lr_from_json(text);
  EXPECT_EQ(back.weights, lr.weights);
  EXPECT_EQ(back.bias, lr.bias);
  EXPECT_EQ(lr_to_json(back), text);
  auto j = nlohmann::json::parse(text);
  j["version"] = 99;
  EXPECT_THROW(lr_from_json(j.dump()), Error);
}

TEST(Gbdt, ZeroTreesPredictPrior) {
  auto m = random_matrix(50, 2, 1);
  double prior = 0;
  for (int y : m.labels) prior += y;
  prior /= m.rows();
  GbdtConfig cfg;
  cfg.n_trees = 0;
  auto model = train_gbdt(m, cfg);
  EXPECT_TRUE(model.trees.empty());
  for (std::size_t r = 0; r < m.rows(); ++r) EXPECT_NEAR(model.predict(m.row(r)), prior, 1e-12);
}

TEST(Gbdt, SeparatesXorWhereLrCannot) {
  auto data = xor_data();
  GbdtConfig cfg;
  cfg.max_depth = 2;
  auto g = train_gbdt(data, cfg);
  auto lr = train_lr(data);
  EXPECT_EQ(train_auc(data, [&](auto x) { return g.predict(x); }), 1.0);
  EXPECT_LE(train_auc(data, [&](auto x) { return predict_lr(lr, x); }), 0.75);
}

TEST(Gbdt, LossNeverIncreases) {
  auto m = random_matrix(500, 6, 12);
  GbdtConfig cfg;
  cfg.n_trees = 40;
  auto g = train_gbdt(m, cfg);
  ASSERT_EQ(g.loss_trace.size(), 41u);
  for (std::size_t i = 1; i < g.loss_trace.size(); ++i) EXPECT_LE(g.loss_trace[i], g.loss_trace[i - 1] + 1e-15) << i;
}

TEST(Gbdt, StructuralInvariants) {
  auto m = random_matrix(400, 5, 13);
  GbdtConfig cfg;
  cfg.n_trees = 20;
  cfg.max_depth = 3;
  cfg.min_leaf = 10;
  auto g = train_gbdt(m, cfg);
  for (const auto& t : g.trees) {
    EXPECT_LE(t.depth(), 3);
    for (const auto& n : t.nodes)
      if (n.feature >= 0) EXPECT_LT(static_cast<std::size_t>(n.feature), m.dim);
  }
}

TEST(Gbdt, ThreadCountDoesNotMatter) {
  auto m = random_matrix(300, 8, 14);
  GbdtConfig cfg;
  cfg.n_trees = 15;
  EXPECT_EQ(gbdt_to_json(train_gbdt(m, cfg, 1)), gbdt_to_json(train_gbdt(m, cfg, 4)));
}

TEST(Gbdt, SerializationIsBitExact) {
  auto m = random_matrix(300, 4, 15);
  GbdtConfig cfg;
  cfg.n_trees = 25;
  auto g = train_gbdt(m, cfg);
  auto back = gbdt_from_json(gbdt_to_json(g));
  std::mt19937_64 rng(16);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> x(4);
    for (auto& v : x) v = n(rng);
    ASSERT_EQ(back.predict(x), g.predict(x));
  }
  auto j = nlohmann::json::parse(gbdt_to_json(g));
  j["version"] = 0;
  EXPECT_THROW(gbdt_from_json(j.dump()), Error);
}

TEST(Gbdt, SingleClassRejected) {
  EXPECT_THROW(train_gbdt(matrix(1, {{1.0}, {2.0}}, {0, 0})), Error);
}

TEST(Importance, MaxNormalized) {
  auto m = random_matrix(400, 4, 17);
  for (std::size_t r = 0; r < m.rows(); ++r) m.row(r)[3] = 0.0;
  GbdtConfig cfg;
  cfg.n_trees = 20;
  auto g = train_gbdt(m, cfg);
  g.feature_names = {"x0", "x1", "x2", "dead"};
  auto imp = feature_importance(g);
  ASSERT_EQ(imp.size(), 4u);
  double top = 0;
  for (const auto& [k, v] : imp) top = std::max(top, v);
  EXPECT_EQ(top, 1.0);
  EXPECT_EQ(imp.at("x0"), 1.0);
  EXPECT_EQ(imp.at("dead"), 0.0);
}

TEST(Importance, SingleSplit) {
  GbdtModel g;
  g.dimension = 3;
  g.feature_names = {"a", "b", "c"};
  RegressionTree t;
  t.nodes = {TreeNode{1, 0.5, 1, 2, 0.0, 4.2}, TreeNode{-1, 0, -1, -1, -0.1, 0}, TreeNode{-1, 0, -1, -1, 0.1, 0}};
  g.trees.push_back(t);
  auto imp = feature_importance(g);
  EXPECT_EQ(imp, (std::map<std::string, double>{{"a", 0.0}, {"b", 1.0}, {"c", 0.0}}));
}

TEST(Auc, Examples) {
  std::vector<double> pos{0.9, 0.4}, neg{0.5, 0.1};
  EXPECT_DOUBLE_EQ(auc(pos, neg), 0.75);
  std::vector<double> hi{3, 4}, lo{1, 2};
  EXPECT_EQ(auc(hi, lo), 1.0);
  std::vector<double> same{1, 1, 1};
  EXPECT_EQ(auc(same, same), 0.5);
  EXPECT_THROW(auc(hi, {}), Error);
}

TEST(Auc, MonotoneTransformInvariant) {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> pos(30), neg(40);
    for (auto& v : pos) v = std::round(u(rng) * 4) / 4 + 0.3;
    for (auto& v : neg) v = std::round(u(rng) * 4) / 4;
    auto tp = pos, tn = neg;
    for (auto* s : {&tp, &tn})
      for (auto& v : *s) v = std::exp(2 * v) + 5;
    EXPECT_EQ(auc(pos, neg), auc(tp, tn));
  }
}

TEST(Prf1, HandCases) {
  MatchPairs truth, pred;
  for (auto [a, b] : {std::pair{"a", "b"}, {"c", "d"}, {"e", "f"}, {"g", "h"}}) add_match(truth, a, b);
  add_match(pred, "b", "a");
  add_match(pred, "d", "c");
  add_match(pred, "x", "y");
  auto m = prf1(pred, truth);
  EXPECT_DOUBLE_EQ(m.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.recall, 0.5);
  EXPECT_NEAR(m.f1, 4.0 / 7.0, 1e-15);
  EXPECT_EQ(m.correct, 2u);
  EXPECT_EQ(prf1(truth, truth).f1, 1.0);
  MatchPairs wrong;
  add_match(wrong, "a", "c");
  EXPECT_EQ(prf1(wrong, truth).f1, 0.0);
  EXPECT_EQ(prf1({}, truth).precision, 0.0);
  EXPECT_EQ(f1_score(0.0, 0.0), 0.0);
}

TEST(Metrics, JsonShape) {
  Metrics m;
  m.f1 = 1.0;
  auto j = nlohmann::json::parse(metrics_to_json(m, false));
  EXPECT_EQ(j.at("f1").get<double>(), 1.0);
  EXPECT_FALSE(j.contains("auc"));
  EXPECT_TRUE(nlohmann::json::parse(metrics_to_json(m, true)).contains("auc"));
}

}  // namespace
}  // namespace xlink
