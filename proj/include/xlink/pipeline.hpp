#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xlink/corpus.hpp"
#include "xlink/features.hpp"
#include "xlink/gbdt.hpp"
#include "xlink/linear.hpp"
#include "xlink/metrics.hpp"

namespace xlink {

struct BlockingConfig {
  int level = 2;
  std::size_t cap = 5000;
};

struct CandidateEntry {
  std::string uid;
  double score = 0.0;
};

/// Candidate partners per query uid, best first (score desc, then uid asc).
struct CandidateSet {
  std::vector<std::string> queries;                  // ascending
  std::vector<std::vector<CandidateEntry>> lists;    // parallel to queries

  std::size_t total() const;
  /// Distinct canonical pairs reachable from any list.
  std::vector<UidPair> unique_pairs() const;
};

struct ScoredPair {
  UidPair pair;
  double score = 0.0;
};

/// Pairs by score desc, ties in canonical pair order.
using ScoredPairs = std::vector<ScoredPair>;

struct SubmissionConfig {
  std::size_t n = 1;  // global top cutoff
  int k = 2;          // per-user depth
  double r = 2.0;     // rank slack multiplier
};

/// Users sharing at least one URL prefix at `level` or one fid. Both ends come from `universe`;
/// the blocking score is the number of shared items.
CandidateSet block_candidates(std::span<const std::string> queries, std::span<const std::string> universe,
                              const ProfileStore& store, const BlockingConfig& config, int threads = 1);

/// Keeps the `top` candidates per query with the highest LR probability.
CandidateSet lr_filter(const CandidateSet& candidates, const LinearModel& model, const FeatureExtractor& extractor,
                       std::size_t top = 100, int threads = 1);

/// Scores every distinct pair once with the GBDT and sorts the result.
ScoredPairs gbdt_score(const CandidateSet& candidates, const GbdtModel& model, const FeatureExtractor& extractor,
                       int threads = 1);

/// Applies the score-desc / canonical-pair order.
void sort_scored(ScoredPairs& pairs);

/// Top-n pairs plus, for each user, its best k partners whose global rank is below n * r.
MatchPairs select_submission(const ScoredPairs& scored, const SubmissionConfig& config);

/// Precision/recall/F1 of `predicted`; AUC over `scored` when it holds both classes.
Metrics evaluate(const MatchPairs& predicted, const MatchPairs& truth, const ScoredPairs* scored = nullptr);

struct SweepRow {
  std::size_t n;
  Metrics metrics;
};
std::vector<SweepRow> sweep_n(const ScoredPairs& scored, const MatchPairs& truth, std::span<const std::size_t> grid,
                              const SubmissionConfig& base);

/// Fraction of truth pairs present in any candidate list (in either direction).
double candidate_recall(const CandidateSet& candidates, const MatchPairs& truth);

std::string format_candidates(const CandidateSet& c);
CandidateSet parse_candidates(std::string_view text);
std::string format_scores(const ScoredPairs& s);
ScoredPairs parse_scores(std::string_view text);

}  // namespace xlink
