#include "xlink/linear.hpp"

#include <cmath>

#include "json.hpp"

namespace xlink {

namespace {

constexpr int kLrFormatVersion = 1;

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

void check_labels(const FeatureMatrix& data) {
  if (data.rows() == 0) throw Error("training set is empty");
  bool pos = false, neg = false;
  for (int y : data.labels) {
    if (y == 1) {
      pos = true;
    } else if (y == 0) {
      neg = true;
    } else {
      throw Error("training labels must be 0 or 1");
    }
  }
  if (!pos || !neg) throw Error("training labels contain a single class");
}

}  // namespace

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

double LinearModel::margin(std::span<const double> x) const {
  if (x.size() != weights.size()) throw Error("LR input has dimension " + std::to_string(x.size()) + ", model expects " +
                                              std::to_string(weights.size()));
  double z = bias;
  for (std::size_t k = 0; k < x.size(); ++k) z += weights[k] * ((x[k] - mean[k]) / stddev[k]);
  return z;
}

double predict_lr(const LinearModel& model, std::span<const double> x) { return sigmoid(model.margin(x)); }

LogisticObjective::LogisticObjective(std::span<const double> standardized, std::size_t dim,
                                     std::span<const int> labels, double l2)
    : z_(standardized), dim_(dim), y_(labels), l2_(l2) {}

double LogisticObjective::loss(std::span<const double> params) const {
  const std::size_t n = y_.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double m = params[dim_];
    const double* row = z_.data() + i * dim_;
    for (std::size_t k = 0; k < dim_; ++k) m += params[k] * row[k];
    total += softplus(m) - (y_[i] == 1 ? m : 0.0);
  }
  double reg = 0.0;
  for (std::size_t k = 0; k < dim_; ++k) reg += params[k] * params[k];
  return total / static_cast<double>(n) + 0.5 * l2_ * reg;
}

double LogisticObjective::loss_and_gradient(std::span<const double> params, std::span<double> grad) const {
  const std::size_t n = y_.size();
  std::fill(grad.begin(), grad.end(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double m = params[dim_];
    const double* row = z_.data() + i * dim_;
    for (std::size_t k = 0; k < dim_; ++k) m += params[k] * row[k];
    total += softplus(m) - (y_[i] == 1 ? m : 0.0);
    double r = sigmoid(m) - (y_[i] == 1 ? 1.0 : 0.0);
    for (std::size_t k = 0; k < dim_; ++k) grad[k] += r * row[k];
    grad[dim_] += r;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  double reg = 0.0;
  for (std::size_t k = 0; k < dim_; ++k) {
    grad[k] = grad[k] * inv_n + l2_ * params[k];
    reg += params[k] * params[k];
  }
  grad[dim_] *= inv_n;
  return total * inv_n + 0.5 * l2_ * reg;
}

LinearModel train_lr(const FeatureMatrix& data, const LrConfig& config) {
  check_labels(data);
  if (config.epochs < 0 || config.step <= 0.0 || config.l2 < 0.0) throw Error("invalid LR configuration");
  const std::size_t n = data.rows(), d = data.dim;

  LinearModel model;
  model.config = config;
  model.mean.assign(d, 0.0);
  model.stddev.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d; ++k) model.mean[k] += data.values[i * d + k];
  for (auto& m : model.mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d; ++k) {
      double dx = data.values[i * d + k] - model.mean[k];
      model.stddev[k] += dx * dx;
    }
  for (auto& s : model.stddev) {
    s = std::sqrt(s / static_cast<double>(n));
    if (!(s > 0.0)) s = 1.0;
  }

  std::vector<double> z(n * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d; ++k) z[i * d + k] = (data.values[i * d + k] - model.mean[k]) / model.stddev[k];

  LogisticObjective objective(z, d, data.labels, config.l2);
  std::vector<double> params(d + 1, 0.0), grad(d + 1), trial(d + 1);
  double loss = objective.loss_and_gradient(params, grad);
  model.loss_trace.push_back(loss);
  double step = config.step;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // Full-batch step; halve the step whenever it would raise the objective.
    double trial_loss = loss;
    for (int attempt = 0; attempt < 60; ++attempt) {
      for (std::size_t k = 0; k <= d; ++k) trial[k] = params[k] - step * grad[k];
      trial_loss = objective.loss(trial);
      if (trial_loss <= loss) break;
      step *= 0.5;
    }
    if (trial_loss > loss) {
      model.loss_trace.push_back(loss);
      continue;
    }
    params.swap(trial);
    loss = objective.loss_and_gradient(params, grad);
    model.loss_trace.push_back(loss);
  }
  model.weights.assign(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(d));
  model.bias = params[d];
  return model;
}

std::string lr_to_json(const LinearModel& model) {
  nlohmann::ordered_json j;
  j["format"] = "xlink-lr";
  j["version"] = kLrFormatVersion;
  j["dimension"] = model.weights.size();
  j["config"] = {{"l2", model.config.l2}, {"epochs", model.config.epochs}, {"step", model.config.step},
                 {"seed", model.config.seed}};
  j["feature_names"] = model.feature_names;
  j["bias"] = model.bias;
  j["weights"] = model.weights;
  j["mean"] = model.mean;
  j["stddev"] = model.stddev;
  j["loss_trace"] = model.loss_trace;
  return j.dump() + "\n";
}

LinearModel lr_from_json(std::string_view text) {
  LinearModel m;
  try {
    auto j = nlohmann::json::parse(text);
    if (j.at("format") != "xlink-lr") throw Error("not an LR model file");
    if (j.at("version").get<int>() != kLrFormatVersion)
      throw Error("unsupported LR model version " + j.at("version").dump());
    const auto& c = j.at("config");
    m.config = LrConfig{c.at("l2").get<double>(), c.at("epochs").get<int>(), c.at("step").get<double>(),
                        c.at("seed").get<std::uint64_t>()};
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.bias = j.at("bias").get<double>();
    m.weights = j.at("weights").get<std::vector<double>>();
    m.mean = j.at("mean").get<std::vector<double>>();
    m.stddev = j.at("stddev").get<std::vector<double>>();
    m.loss_trace = j.at("loss_trace").get<std::vector<double>>();
    auto d = j.at("dimension").get<std::size_t>();
    if (m.weights.size() != d || m.mean.size() != d || m.stddev.size() != d)
      throw Error("LR model arrays disagree with its dimension");
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed LR model: ") + e.what());
  }
  return m;
}

}  // namespace xlink
