#include "xlink/metrics.hpp"

#include <algorithm>
#include <vector>

#include "json.hpp"

namespace xlink {

double f1_score(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

double auc(std::span<const double> scores_pos, std::span<const double> scores_neg) {
  if (scores_pos.empty() || scores_neg.empty()) throw Error("AUC needs at least one positive and one negative");
  std::vector<std::pair<double, int>> all;
  all.reserve(scores_pos.size() + scores_neg.size());
  for (double s : scores_pos) all.emplace_back(s, 1);
  for (double s : scores_neg) all.emplace_back(s, 0);
  std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  // Sum over tie groups: each positive beats all lower negatives and half-beats tied ones.
  double wins = 0.0;
  double neg_below = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    double pos = 0.0, neg = 0.0;
    while (j < all.size() && all[j].first == all[i].first) {
      (all[j].second ? pos : neg) += 1.0;
      ++j;
    }
    wins += pos * (neg_below + 0.5 * neg);
    neg_below += neg;
    i = j;
  }
  return wins / (static_cast<double>(scores_pos.size()) * static_cast<double>(scores_neg.size()));
}

Metrics prf1(const MatchPairs& predicted, const MatchPairs& truth) {
  Metrics m;
  m.predicted = predicted.size();
  m.truth = truth.size();
  for (const auto& p : predicted)
    if (truth.count(p)) ++m.correct;
  m.precision = m.predicted ? static_cast<double>(m.correct) / static_cast<double>(m.predicted) : 0.0;
  m.recall = m.truth ? static_cast<double>(m.correct) / static_cast<double>(m.truth) : 0.0;
  m.f1 = f1_score(m.precision, m.recall);
  return m;
}

std::string metrics_to_json(const Metrics& m, bool with_auc) {
  nlohmann::ordered_json j;
  if (with_auc) j["auc"] = m.auc;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["f1"] = m.f1;
  j["predicted"] = m.predicted;
  j["truth"] = m.truth;
  j["correct"] = m.correct;
  return j.dump(2) + "\n";
}

}  // namespace xlink
