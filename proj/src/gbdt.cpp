#include "xlink/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "json.hpp"
#include "xlink/linear.hpp"

namespace xlink {

namespace {

constexpr int kGbdtFormatVersion = 1;

struct Stats {
  double g = 0.0;
  double h = 0.0;
  std::int64_t n = 0;
};

struct Candidate {
  bool valid = false;
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;

  // Higher gain wins; ties go to the lower feature index, then the lower threshold.
  bool beaten_by(double g, int f, double t) const {
    if (!valid) return true;
    if (g != gain) return g > gain;
    if (f != feature) return f < feature;
    return t < threshold;
  }
};

// Nonzero entries of one column sorted by (value, row); the first `negatives` are < 0.
struct Column {
  std::vector<double> values;
  std::vector<std::uint32_t> rows;
  std::size_t negatives = 0;
};

double midpoint(double lo, double hi) {
  double m = lo + (hi - lo) / 2.0;
  return m > lo ? m : hi;
}

double log_loss(std::span<const double> margin, std::span<const int> y) {
  double total = 0.0;
  for (std::size_t i = 0; i < margin.size(); ++i) {
    double m = margin[i];
    double sp = m > 0.0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
    total += sp - (y[i] == 1 ? m : 0.0);
  }
  return total / static_cast<double>(margin.size());
}

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& data, const std::vector<Column>& columns, const GbdtConfig& cfg, int threads)
      : data_(data), columns_(columns), cfg_(cfg), threads_(std::max(1, threads)) {}

  RegressionTree build(std::span<const double> grad, std::span<const double> hess) {
    const std::size_t n = data_.rows();
    RegressionTree tree;
    tree.nodes.emplace_back();
    std::vector<int> active{0};  // tree node id per slot
    std::vector<Stats> totals(1);
    slot_.assign(n, 0);
    for (std::size_t r = 0; r < n; ++r) {
      totals[0].g += grad[r];
      totals[0].h += hess[r];
      totals[0].n += 1;
    }

    for (int depth = 0; !active.empty(); ++depth) {
      std::vector<Candidate> best(active.size());
      if (depth < cfg_.max_depth) best = find_splits(grad, hess, totals);

      std::vector<int> next_active;
      std::vector<Stats> next_totals;
      std::vector<int> left_slot(active.size(), -1);
      for (std::size_t s = 0; s < active.size(); ++s) {
        auto& node = tree.nodes[static_cast<std::size_t>(active[s])];
        if (!best[s].valid) {
          node.value = -cfg_.step * totals[s].g / (totals[s].h + cfg_.lambda);
          continue;
        }
        node.feature = best[s].feature;
        node.threshold = best[s].threshold;
        node.gain = best[s].gain;
        node.left = static_cast<int>(tree.nodes.size());
        node.right = node.left + 1;
        left_slot[s] = static_cast<int>(next_active.size());
        next_active.push_back(node.left);
        next_active.push_back(node.right);
        next_totals.resize(next_active.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
      }
      for (std::size_t r = 0; r < n; ++r) {
        int s = slot_[r];
        if (s < 0) continue;
        int ls = left_slot[static_cast<std::size_t>(s)];
        if (ls < 0) {
          slot_[r] = -1;
          continue;
        }
        const auto& cand = best[static_cast<std::size_t>(s)];
        int child = data_.values[r * data_.dim + static_cast<std::size_t>(cand.feature)] < cand.threshold ? ls : ls + 1;
        slot_[r] = child;
        auto& st = next_totals[static_cast<std::size_t>(child)];
        st.g += grad[r];
        st.h += hess[r];
        st.n += 1;
      }
      active.swap(next_active);
      totals.swap(next_totals);
    }
    return tree;
  }

 private:
  std::vector<Candidate> find_splits(std::span<const double> grad, std::span<const double> hess,
                                     const std::vector<Stats>& totals) {
    const std::size_t slots = totals.size();
    const std::size_t dim = data_.dim;
    std::vector<std::vector<Candidate>> per_worker(static_cast<std::size_t>(threads_),
                                                   std::vector<Candidate>(slots));
    parallel_chunks(dim, threads_, [&](std::size_t begin, std::size_t end, int w) {
      auto& best = per_worker[static_cast<std::size_t>(w)];
      std::vector<Stats> acc(slots);
      std::vector<double> last(slots);
      for (std::size_t f = begin; f < end; ++f) scan_feature(static_cast<int>(f), grad, hess, totals, acc, last, best);
    });
    std::vector<Candidate> best(slots);
    for (const auto& part : per_worker)
      for (std::size_t s = 0; s < slots; ++s)
        if (part[s].valid && best[s].beaten_by(part[s].gain, part[s].feature, part[s].threshold)) best[s] = part[s];
    return best;
  }

  void consider(Candidate& best, const Stats& total, double gl, double hl, std::int64_t nl, int f, double thr) const {
    std::int64_t nr = total.n - nl;
    if (nl < cfg_.min_leaf || nr < cfg_.min_leaf) return;
    double gr = total.g - gl, hr = total.h - hl;
    double gain = 0.5 * (gl * gl / (hl + cfg_.lambda) + gr * gr / (hr + cfg_.lambda) -
                         total.g * total.g / (total.h + cfg_.lambda));
    if (gain > 0.0 && best.beaten_by(gain, f, thr)) best = Candidate{true, gain, f, thr};
  }

  // Negative values are scanned upward accumulating the left side, positive values downward
  // accumulating the right side; zeros sit implicitly between the two runs.
  void scan_feature(int f, std::span<const double> grad, std::span<const double> hess,
                    const std::vector<Stats>& totals, std::vector<Stats>& acc, std::vector<double>& last,
                    std::vector<Candidate>& best) const {
    const auto& col = columns_[static_cast<std::size_t>(f)];
    const std::size_t slots = totals.size();

    if (col.negatives > 0) {
      std::fill(acc.begin(), acc.end(), Stats{});
      for (std::size_t k = 0; k < col.negatives; ++k) {
        int s = slot_[col.rows[k]];
        if (s < 0) continue;
        auto& a = acc[static_cast<std::size_t>(s)];
        double v = col.values[k];
        if (a.n > 0 && v != last[static_cast<std::size_t>(s)])
          consider(best[static_cast<std::size_t>(s)], totals[static_cast<std::size_t>(s)], a.g, a.h, a.n, f,
                   midpoint(last[static_cast<std::size_t>(s)], v));
        a.g += grad[col.rows[k]];
        a.h += hess[col.rows[k]];
        a.n += 1;
        last[static_cast<std::size_t>(s)] = v;
      }
      for (std::size_t s = 0; s < slots; ++s)
        if (acc[s].n > 0 && acc[s].n < totals[s].n)
          consider(best[s], totals[s], acc[s].g, acc[s].h, acc[s].n, f, midpoint(last[s], 0.0));
    }

    if (col.values.size() > col.negatives) {
      std::fill(acc.begin(), acc.end(), Stats{});
      for (std::size_t k = col.values.size(); k-- > col.negatives;) {
        int s = slot_[col.rows[k]];
        if (s < 0) continue;
        auto& a = acc[static_cast<std::size_t>(s)];
        const auto& t = totals[static_cast<std::size_t>(s)];
        double v = col.values[k];
        if (a.n > 0 && v != last[static_cast<std::size_t>(s)])
          consider(best[static_cast<std::size_t>(s)], t, t.g - a.g, t.h - a.h, t.n - a.n, f,
                   midpoint(v, last[static_cast<std::size_t>(s)]));
        a.g += grad[col.rows[k]];
        a.h += hess[col.rows[k]];
        a.n += 1;
        last[static_cast<std::size_t>(s)] = v;
      }
      for (std::size_t s = 0; s < slots; ++s)
        if (acc[s].n > 0 && acc[s].n < totals[s].n)
          consider(best[s], totals[s], totals[s].g - acc[s].g, totals[s].h - acc[s].h, totals[s].n - acc[s].n, f,
                   midpoint(0.0, last[s]));
    }
  }

  const FeatureMatrix& data_;
  const std::vector<Column>& columns_;
  const GbdtConfig& cfg_;
  int threads_;
  std::vector<int> slot_;  // active slot per row, -1 once the row sits in a finished leaf
};

std::vector<Column> build_columns(const FeatureMatrix& data, int threads) {
  std::vector<Column> cols(data.dim);
  parallel_for(data.dim, threads, [&](std::size_t f) {
    std::vector<std::pair<double, std::uint32_t>> entries;
    for (std::size_t r = 0; r < data.rows(); ++r) {
      double v = data.values[r * data.dim + f];
      if (v != 0.0) entries.emplace_back(v, static_cast<std::uint32_t>(r));
    }
    std::sort(entries.begin(), entries.end());
    auto& c = cols[f];
    c.values.reserve(entries.size());
    c.rows.reserve(entries.size());
    for (const auto& [v, r] : entries) {
      c.values.push_back(v);
      c.rows.push_back(r);
      if (v < 0.0) c.negatives++;
    }
  });
  return cols;
}

}  // namespace

double RegressionTree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right);
  }
  return nodes[i].value;
}

int RegressionTree::depth() const {
  std::vector<std::pair<int, int>> stack{{0, 0}};
  int deepest = 0;
  while (!stack.empty()) {
    auto [id, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    const auto& n = nodes[static_cast<std::size_t>(id)];
    if (n.feature >= 0) {
      stack.emplace_back(n.left, d + 1);
      stack.emplace_back(n.right, d + 1);
    }
  }
  return deepest;
}

double GbdtModel::margin(std::span<const double> x) const {
  if (x.size() != dimension)
    throw Error("GBDT input has dimension " + std::to_string(x.size()) + ", model expects " +
                std::to_string(dimension));
  double m = base_score;
  for (const auto& t : trees) m += t.predict(x);
  return m;
}

double GbdtModel::predict(std::span<const double> x) const { return sigmoid(margin(x)); }

GbdtModel train_gbdt(const FeatureMatrix& data, const GbdtConfig& config, int threads) {
  const std::size_t n = data.rows();
  if (n == 0) throw Error("training set is empty");
  if (config.n_trees < 0 || config.max_depth < 0 || config.step <= 0.0 || config.min_leaf < 1 || config.lambda < 0.0)
    throw Error("invalid GBDT configuration");
  std::size_t positives = 0;
  for (int y : data.labels) {
    if (y != 0 && y != 1) throw Error("training labels must be 0 or 1");
    positives += static_cast<std::size_t>(y);
  }
  if (positives == 0 || positives == n) throw Error("training labels contain a single class");

  GbdtModel model;
  model.config = config;
  model.learning_rate = config.step;
  model.dimension = data.dim;
  double prior = static_cast<double>(positives) / static_cast<double>(n);
  model.base_score = std::log(prior / (1.0 - prior));

  auto columns = build_columns(data, threads);
  std::vector<double> margin(n, model.base_score), grad(n), hess(n);
  model.loss_trace.push_back(log_loss(margin, data.labels));
  TreeBuilder builder(data, columns, config, threads);
  for (int t = 0; t < config.n_trees; ++t) {
    for (std::size_t r = 0; r < n; ++r) {
      double p = sigmoid(margin[r]);
      grad[r] = p - static_cast<double>(data.labels[r]);
      hess[r] = p * (1.0 - p);
    }
    auto tree = builder.build(grad, hess);
    for (std::size_t r = 0; r < n; ++r) margin[r] += tree.predict(data.row(r));
    model.trees.push_back(std::move(tree));
    model.loss_trace.push_back(log_loss(margin, data.labels));
  }
  return model;
}

std::map<std::string, double> feature_importance(const GbdtModel& model) {
  std::vector<double> total(model.dimension, 0.0);
  for (const auto& t : model.trees)
    for (const auto& n : t.nodes)
      if (n.feature >= 0) total[static_cast<std::size_t>(n.feature)] += n.gain;
  double top = total.empty() ? 0.0 : *std::max_element(total.begin(), total.end());
  std::map<std::string, double> out;
  for (std::size_t f = 0; f < total.size(); ++f) {
    auto name = f < model.feature_names.size() ? model.feature_names[f] : "f" + std::to_string(f);
    out[name] = top > 0.0 ? total[f] / top : 0.0;
  }
  return out;
}

std::string gbdt_to_json(const GbdtModel& model) {
  nlohmann::ordered_json j;
  j["format"] = "xlink-gbdt";
  j["version"] = kGbdtFormatVersion;
  j["dimension"] = model.dimension;
  j["config"] = {{"n_trees", model.config.n_trees}, {"max_depth", model.config.max_depth},
                 {"step", model.config.step},       {"min_leaf", model.config.min_leaf},
                 {"lambda", model.config.lambda},   {"seed", model.config.seed}};
  j["feature_names"] = model.feature_names;
  j["learning_rate"] = model.learning_rate;
  j["base_score"] = model.base_score;
  j["loss_trace"] = model.loss_trace;
  auto trees = nlohmann::ordered_json::array();
  for (const auto& t : model.trees) {
    std::vector<int> feature, left, right;
    std::vector<double> threshold, value, gain;
    for (const auto& n : t.nodes) {
      feature.push_back(n.feature);
      left.push_back(n.left);
      right.push_back(n.right);
      threshold.push_back(n.threshold);
      value.push_back(n.value);
      gain.push_back(n.gain);
    }
    nlohmann::ordered_json jt;
    jt["feature"] = feature;
    jt["threshold"] = threshold;
    jt["left"] = left;
    jt["right"] = right;
    jt["value"] = value;
    jt["gain"] = gain;
    trees.push_back(std::move(jt));
  }
  j["trees"] = std::move(trees);
  return j.dump() + "\n";
}

GbdtModel gbdt_from_json(std::string_view text) {
  GbdtModel m;
  try {
    auto j = nlohmann::json::parse(text);
    if (j.at("format") != "xlink-gbdt") throw Error("not a GBDT model file");
    if (j.at("version").get<int>() != kGbdtFormatVersion)
      throw Error("unsupported GBDT model version " + j.at("version").dump());
    const auto& c = j.at("config");
    m.config = GbdtConfig{c.at("n_trees").get<int>(), c.at("max_depth").get<int>(), c.at("step").get<double>(),
                          c.at("min_leaf").get<int>(), c.at("lambda").get<double>(),
                          c.at("seed").get<std::uint64_t>()};
    m.dimension = j.at("dimension").get<std::size_t>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.learning_rate = j.at("learning_rate").get<double>();
    m.base_score = j.at("base_score").get<double>();
    m.loss_trace = j.at("loss_trace").get<std::vector<double>>();
    for (const auto& jt : j.at("trees")) {
      auto feature = jt.at("feature").get<std::vector<int>>();
      auto threshold = jt.at("threshold").get<std::vector<double>>();
      auto left = jt.at("left").get<std::vector<int>>();
      auto right = jt.at("right").get<std::vector<int>>();
      auto value = jt.at("value").get<std::vector<double>>();
      auto gain = jt.at("gain").get<std::vector<double>>();
      const auto count = feature.size();
      if (threshold.size() != count || left.size() != count || right.size() != count || value.size() != count ||
          gain.size() != count || count == 0)
        throw Error("GBDT tree arrays disagree in length");
      RegressionTree t;
      for (std::size_t i = 0; i < count; ++i) {
        TreeNode node{feature[i], threshold[i], left[i], right[i], value[i], gain[i]};
        if (node.feature >= 0) {
          if (static_cast<std::size_t>(node.feature) >= m.dimension) throw Error("GBDT node feature out of range");
          if (node.left <= 0 || node.right <= 0 || static_cast<std::size_t>(node.left) >= count ||
              static_cast<std::size_t>(node.right) >= count)
            throw Error("GBDT node child out of range");
        }
        t.nodes.push_back(node);
      }
      m.trees.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed GBDT model: ") + e.what());
  }
  return m;
}

}  // namespace xlink
