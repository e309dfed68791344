#include "xlink/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

namespace xlink {

namespace {

void sort_candidates(std::vector<CandidateEntry>& list) {
  std::sort(list.begin(), list.end(), [](const CandidateEntry& x, const CandidateEntry& y) {
    if (x.score != y.score) return x.score > y.score;
    return x.uid < y.uid;
  });
}

double clamp_probability(double p) {
  return std::clamp(p, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

// Scores the distinct pairs of `pairs` with `fn(features)`, in parallel, one result per pair.
template <typename F>
std::vector<double> score_pairs(const std::vector<UidPair>& pairs, const FeatureExtractor& extractor, int threads,
                                F&& fn) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> idx(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p)
    idx[p] = {extractor.store().index_of(pairs[p].a), extractor.store().index_of(pairs[p].b)};
  std::vector<double> scores(pairs.size());
  parallel_chunks(pairs.size(), threads, [&](std::size_t begin, std::size_t end, int) {
    std::vector<double> buf(kFeatureDim);
    for (std::size_t p = begin; p < end; ++p) {
      extractor.extract(idx[p].first, idx[p].second, buf);
      scores[p] = fn(std::span<const double>(buf));
    }
  });
  return scores;
}

}  // namespace

std::size_t CandidateSet::total() const {
  std::size_t n = 0;
  for (const auto& l : lists) n += l.size();
  return n;
}

std::vector<UidPair> CandidateSet::unique_pairs() const {
  std::vector<UidPair> out;
  out.reserve(total());
  for (std::size_t q = 0; q < queries.size(); ++q)
    for (const auto& c : lists[q]) out.emplace_back(queries[q], c.uid);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

CandidateSet block_candidates(std::span<const std::string> queries, std::span<const std::string> universe,
                              const ProfileStore& store, const BlockingConfig& config, int threads) {
  if (config.level < 1 || config.level > kUrlLevels) throw Error("blocking level must be in 1..4");
  std::vector<std::uint32_t> members;
  for (const auto& u : universe) members.push_back(store.index_of(u));
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());

  // Inverted index over URL prefixes (ids [0, n_urls)) and fids (offset by n_urls).
  const std::size_t n_urls = store.url_dictionary(config.level).size();
  const std::size_t n_items = n_urls + store.dictionary(Channel::Fid).size();
  std::vector<std::vector<std::uint32_t>> postings(n_items);
  for (std::uint32_t m = 0; m < members.size(); ++m) {
    const auto& p = store.profile(members[m]);
    for (auto id : p.url_set(config.level)) postings[id].push_back(m);
    for (auto id : p.fid_set()) postings[n_urls + id].push_back(m);
  }

  CandidateSet out;
  out.queries.assign(queries.begin(), queries.end());
  std::sort(out.queries.begin(), out.queries.end());
  out.queries.erase(std::unique(out.queries.begin(), out.queries.end()), out.queries.end());
  out.lists.resize(out.queries.size());
  std::vector<std::uint32_t> query_idx;
  for (const auto& q : out.queries) query_idx.push_back(store.index_of(q));

  parallel_chunks(out.queries.size(), threads, [&](std::size_t begin, std::size_t end, int) {
    std::vector<std::uint32_t> counts(members.size(), 0);
    std::vector<std::uint32_t> touched;
    for (std::size_t q = begin; q < end; ++q) {
      const auto& p = store.profile(query_idx[q]);
      auto visit = [&](const std::vector<std::uint32_t>& list) {
        for (auto m : list) {
          if (counts[m]++ == 0) touched.push_back(m);
        }
      };
      for (auto id : p.url_set(config.level)) visit(postings[id]);
      for (auto id : p.fid_set()) visit(postings[n_urls + id]);
      auto& list = out.lists[q];
      for (auto m : touched) {
        if (members[m] != query_idx[q]) list.push_back({store.profile(members[m]).uid, static_cast<double>(counts[m])});
        counts[m] = 0;
      }
      touched.clear();
      sort_candidates(list);
      if (list.size() > config.cap) list.resize(config.cap);
    }
  });
  return out;
}

CandidateSet lr_filter(const CandidateSet& candidates, const LinearModel& model, const FeatureExtractor& extractor,
                       std::size_t top, int threads) {
  if (model.dimension() != extractor.schema().dimension())
    throw Error("LR model dimension " + std::to_string(model.dimension()) + " does not match the feature schema (" +
                std::to_string(extractor.schema().dimension()) + ")");
  auto pairs = candidates.unique_pairs();
  auto scores = score_pairs(pairs, extractor, threads, [&](std::span<const double> x) { return predict_lr(model, x); });

  CandidateSet out;
  out.queries = candidates.queries;
  out.lists.resize(candidates.lists.size());
  for (std::size_t q = 0; q < candidates.queries.size(); ++q) {
    auto& list = out.lists[q];
    for (const auto& c : candidates.lists[q]) {
      UidPair key(candidates.queries[q], c.uid);
      auto it = std::lower_bound(pairs.begin(), pairs.end(), key);
      list.push_back({c.uid, scores[static_cast<std::size_t>(it - pairs.begin())]});
    }
    sort_candidates(list);
    if (list.size() > top) list.resize(top);
  }
  return out;
}

void sort_scored(ScoredPairs& pairs) {
  std::sort(pairs.begin(), pairs.end(), [](const ScoredPair& x, const ScoredPair& y) {
    if (x.score != y.score) return x.score > y.score;
    return x.pair < y.pair;
  });
}

ScoredPairs gbdt_score(const CandidateSet& candidates, const GbdtModel& model, const FeatureExtractor& extractor,
                       int threads) {
  const auto& schema = extractor.schema();
  if (model.dimension != schema.dimension() || (!model.feature_names.empty() && model.feature_names != schema.names()))
    throw Error("GBDT model was trained on a different feature schema (" + std::to_string(model.dimension) +
                " features, extractor has " + std::to_string(schema.dimension()) + ")");
  auto pairs = candidates.unique_pairs();
  auto scores = score_pairs(pairs, extractor, threads,
                            [&](std::span<const double> x) { return clamp_probability(model.predict(x)); });
  ScoredPairs out;
  out.reserve(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) out.push_back({std::move(pairs[p]), scores[p]});
  sort_scored(out);
  return out;
}

MatchPairs select_submission(const ScoredPairs& scored, const SubmissionConfig& config) {
  if (config.n < 1 || config.k < 0 || config.r < 1.0) throw Error("submission needs n >= 1, k >= 0, r >= 1");
  MatchPairs chosen;
  const std::size_t top = std::min(config.n, scored.size());
  for (std::size_t i = 0; i < top; ++i) chosen.insert(scored[i].pair);
  if (config.k == 0) return chosen;

  // 1-based global ranks of each user's partners, best first.
  std::unordered_map<std::string_view, std::vector<std::size_t>> by_user;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    auto& la = by_user[scored[i].pair.a];
    if (la.size() < static_cast<std::size_t>(config.k)) la.push_back(i + 1);
    auto& lb = by_user[scored[i].pair.b];
    if (lb.size() < static_cast<std::size_t>(config.k)) lb.push_back(i + 1);
  }
  const double limit = static_cast<double>(config.n) * config.r;
  for (const auto& [user, ranks] : by_user)
    for (auto rank : ranks)
      if (static_cast<double>(rank) < limit) chosen.insert(scored[rank - 1].pair);
  return chosen;
}

Metrics evaluate(const MatchPairs& predicted, const MatchPairs& truth, const ScoredPairs* scored) {
  if (truth.empty()) throw Error("evaluation needs a non-empty truth set");
  auto m = prf1(predicted, truth);
  if (scored) {
    std::vector<double> pos, neg;
    for (const auto& s : *scored) (truth.count(s.pair) ? pos : neg).push_back(s.score);
    if (!pos.empty() && !neg.empty()) m.auc = auc(pos, neg);
  }
  return m;
}

std::vector<SweepRow> sweep_n(const ScoredPairs& scored, const MatchPairs& truth, std::span<const std::size_t> grid,
                              const SubmissionConfig& base) {
  std::vector<SweepRow> rows;
  for (auto n : grid) {
    auto cfg = base;
    cfg.n = n;
    rows.push_back({n, evaluate(select_submission(scored, cfg), truth)});
  }
  return rows;
}

double candidate_recall(const CandidateSet& candidates, const MatchPairs& truth) {
  if (truth.empty()) return 0.0;
  auto pairs = candidates.unique_pairs();
  std::size_t hit = 0;
  for (const auto& t : truth)
    if (std::binary_search(pairs.begin(), pairs.end(), t)) ++hit;
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

std::string format_candidates(const CandidateSet& c) {
  std::string out;
  for (std::size_t q = 0; q < c.queries.size(); ++q)
    for (const auto& e : c.lists[q]) {
      out += c.queries[q];
      out += '\t';
      out += e.uid;
      out += '\t';
      out += format_double(e.score);
      out += '\n';
    }
  return out;
}

CandidateSet parse_candidates(std::string_view text) {
  std::map<std::string, std::vector<CandidateEntry>> lists;
  std::size_t lineno = 0;
  for (auto line : split(text, '\n')) {
    ++lineno;
    if (line.empty()) continue;
    auto cols = split(line, '\t');
    if (cols.size() != 3) throw Error("candidates line " + std::to_string(lineno) + ": expected 3 columns");
    lists[std::string(cols[0])].push_back({std::string(cols[1]), parse_double(cols[2], "candidates score")});
  }
  CandidateSet c;
  for (auto& [q, l] : lists) {
    c.queries.push_back(q);
    sort_candidates(l);
    c.lists.push_back(std::move(l));
  }
  return c;
}

std::string format_scores(const ScoredPairs& s) {
  std::string out;
  for (const auto& p : s) {
    out += p.pair.a;
    out += '\t';
    out += p.pair.b;
    out += '\t';
    out += format_double(p.score);
    out += '\n';
  }
  return out;
}

ScoredPairs parse_scores(std::string_view text) {
  ScoredPairs s;
  std::size_t lineno = 0;
  for (auto line : split(text, '\n')) {
    ++lineno;
    if (line.empty()) continue;
    auto cols = split(line, '\t');
    if (cols.size() != 3) throw Error("scores line " + std::to_string(lineno) + ": expected 3 columns");
    s.push_back({UidPair(std::string(cols[0]), std::string(cols[1])), parse_double(cols[2], "scores")});
  }
  return s;
}

}  // namespace xlink
