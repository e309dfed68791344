#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xlink/features.hpp"

namespace xlink {

struct LrConfig {
  double l2 = 1e-4;
  int epochs = 50;
  double step = 0.1;
  std::uint64_t seed = 0;
};

/// Logistic regression over standardized features.
struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<double> mean;
  std::vector<double> stddev;  // zero-variance columns carry 1
  std::vector<std::string> feature_names;
  LrConfig config;
  std::vector<double> loss_trace;  // objective before training, then after every epoch

  std::size_t dimension() const { return weights.size(); }
  double margin(std::span<const double> x) const;
};

/// Mean log-loss plus (l2 / 2) * |w|^2 over a standardized design matrix.
/// Parameters are laid out as [w_0 .. w_{D-1}, bias].
class LogisticObjective {
 public:
  LogisticObjective(std::span<const double> standardized, std::size_t dim, std::span<const int> labels, double l2);

  double loss(std::span<const double> params) const;
  /// Returns the loss and writes the analytic gradient into `grad`.
  double loss_and_gradient(std::span<const double> params, std::span<double> grad) const;

 private:
  std::span<const double> z_;
  std::size_t dim_;
  std::span<const int> y_;
  double l2_;
};

LinearModel train_lr(const FeatureMatrix& data, const LrConfig& config = {});
/// sigmoid(w . standardize(x) + b)
double predict_lr(const LinearModel& model, std::span<const double> x);

double sigmoid(double z);

std::string lr_to_json(const LinearModel& model);
LinearModel lr_from_json(std::string_view text);

}  // namespace xlink
