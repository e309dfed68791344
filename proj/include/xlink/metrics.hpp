#pragma once

#include <span>
#include <string>

#include "xlink/corpus.hpp"

namespace xlink {

struct Metrics {
  double auc = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t predicted = 0;
  std::size_t truth = 0;
  std::size_t correct = 0;
};

/// 2PR / (P + R), 0 when P + R == 0.
double f1_score(double precision, double recall);

/// Mann-Whitney statistic: fraction of (pos, neg) pairs ranked correctly, ties counted 0.5.
double auc(std::span<const double> scores_pos, std::span<const double> scores_neg);

/// Set precision/recall/F1 of predicted pairs against truth (auc left at 0).
Metrics prf1(const MatchPairs& predicted, const MatchPairs& truth);

std::string metrics_to_json(const Metrics& m, bool with_auc);

}  // namespace xlink
