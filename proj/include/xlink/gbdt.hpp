#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xlink/features.hpp"

namespace xlink {

struct GbdtConfig {
  int n_trees = 200;
  int max_depth = 6;
  double step = 0.1;
  int min_leaf = 20;
  double lambda = 1.0;
  std::uint64_t seed = 0;
};

/// Internal node when feature >= 0 (x[feature] < threshold goes left), leaf otherwise.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output, already scaled by the learning rate
  double gain = 0.0;   // split gain for internal nodes
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> x) const;
  int depth() const;
};

struct GbdtModel {
  std::vector<RegressionTree> trees;
  double learning_rate = 0.1;
  double base_score = 0.0;  // prior log-odds
  std::size_t dimension = 0;
  std::vector<std::string> feature_names;
  GbdtConfig config;
  std::vector<double> loss_trace;  // mean log-loss at the prior, then after each tree

  double margin(std::span<const double> x) const;
  double predict(std::span<const double> x) const;
};

/// Binary log-loss boosting: Newton leaves -step * G / (H + lambda), exact greedy splits.
/// Split search may use `threads` workers; the result is identical for every thread count.
GbdtModel train_gbdt(const FeatureMatrix& data, const GbdtConfig& config = {}, int threads = 1);

/// Total split gain per feature, divided by the largest total. Every feature gets an entry.
std::map<std::string, double> feature_importance(const GbdtModel& model);

std::string gbdt_to_json(const GbdtModel& model);
GbdtModel gbdt_from_json(std::string_view text);

}  // namespace xlink
