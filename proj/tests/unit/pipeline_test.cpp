#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "fixtures.hpp"
#include "xlink/pipeline.hpp"
#include "xlink/sampling.hpp"

namespace xlink {
namespace {

using testing::at;
using testing::CorpusBuilder;
using testing::world;

struct Models {
  LinearModel lr;
  GbdtModel gbdt;
};

const Models& models() {
  static const Models m = [] {
    const auto& w = world();
    SamplerConfig cfg;
    cfg.k = 1;
    auto s = iterative_negative_sample(w.train_users, w.corpus.train_pairs, cfg,
                                       make_lr_trainer(*w.extractor, LrConfig{}), *w.extractor);
    auto x = sample_features(s, *w.extractor);
    GbdtConfig g;
    g.n_trees = 40;
    return Models{train_lr(x), train_gbdt(x, g)};
  }();
  return m;
}

ScoredPairs scored(std::initializer_list<std::tuple<const char*, const char*, double>> rows) {
  ScoredPairs out;
  for (auto [a, b, s] : rows) out.push_back({UidPair(a, b), s});
  return out;
}

MatchPairs pairs(std::initializer_list<std::pair<const char*, const char*>> rows) {
  MatchPairs out;
  for (auto [a, b] : rows) add_match(out, a, b);
  return out;
}

TEST(Blocking, SharedFidListsBothWays) {
  CorpusBuilder b;
  b.fid("shared", "x.site/a").fid("p", "p.site/a").fid("q", "q.site/a").fid("r", "r.site/b");
  b.visit("u", "shared", at(0, 0)).visit("u", "p", at(0, 1));
  b.visit("v", "shared", at(0, 2)).visit("v", "q", at(0, 3));
  b.visit("w", "r", at(0, 4)).visit("w", "r", at(0, 5));
  auto st = build_profiles(b.corpus());
  std::vector<std::string> uids{"u", "v", "w"};
  auto c = block_candidates(uids, uids, st, BlockingConfig{});
  ASSERT_EQ(c.queries, uids);
  ASSERT_EQ(c.lists[0].size(), 1u);
  EXPECT_EQ(c.lists[0][0].uid, "v");
  EXPECT_EQ(c.lists[0][0].score, 2.0);  // the fid and its level-2 URL
  EXPECT_EQ(c.lists[1][0].uid, "u");
  EXPECT_TRUE(c.lists[2].empty());
}

TEST(Blocking, RecallOnSyntheticCorpus) {
  const auto& w = world();
  auto c = block_candidates(w.test_users, w.test_users, w.store, BlockingConfig{});
  EXPECT_GE(candidate_recall(c, w.synth.test_truth), 0.95);
  for (std::size_t q = 0; q < c.queries.size(); ++q) {
    const auto& list = c.lists[q];
    for (std::size_t i = 0; i < list.size(); ++i) {
      EXPECT_NE(list[i].uid, c.queries[q]);
      if (i)
        EXPECT_TRUE(list[i - 1].score > list[i].score ||
                    (list[i - 1].score == list[i].score && list[i - 1].uid < list[i].uid));
    }
  }
}

TEST(Blocking, CapAndThreads) {
  const auto& w = world();
  BlockingConfig cfg{2, 7};
  auto one = block_candidates(w.test_users, w.test_users, w.store, cfg, 1);
  auto four = block_candidates(w.test_users, w.test_users, w.store, cfg, 4);
  EXPECT_EQ(format_candidates(one), format_candidates(four));
  for (const auto& l : one.lists) EXPECT_LE(l.size(), 7u);
}

CandidateSet one_query(const std::string& q, std::size_t n) {
  const auto& w = world();
  CandidateSet c;
  c.queries = {q};
  c.lists.emplace_back();
  for (const auto& u : w.train_users) {
    if (c.lists[0].size() == n) break;
    if (u != q) c.lists[0].push_back({u, 1.0});
  }
  return c;
}

TEST(LrFilter, ShortListsKeepTheirMembers) {
  const auto& w = world();
  auto c = one_query(w.train_users[0], 60);
  auto f = lr_filter(c, models().lr, *w.extractor, 100);
  std::set<std::string> before, after;
  for (const auto& e : c.lists[0]) before.insert(e.uid);
  for (const auto& e : f.lists[0]) after.insert(e.uid);
  EXPECT_EQ(before, after);
}

TEST(LrFilter, KeepsTopByProbability) {
  const auto& w = world();
  const auto& q = w.train_users[1];
  auto c = one_query(q, 150);
  ASSERT_EQ(c.lists[0].size(), 150u);
  auto f = lr_filter(c, models().lr, *w.extractor, 100, 3);
  ASSERT_EQ(f.lists[0].size(), 100u);
  std::set<std::string> kept;
  double worst_kept = 1.0;
  for (const auto& e : f.lists[0]) {
    kept.insert(e.uid);
    double p = predict_lr(models().lr, w.extractor->extract_pair(q, e.uid).values);
    EXPECT_NEAR(e.score, p, 1e-12);
    worst_kept = std::min(worst_kept, p);
  }
  for (const auto& e : c.lists[0])
    if (!kept.count(e.uid)) EXPECT_LE(predict_lr(models().lr, w.extractor->extract_pair(q, e.uid).values), worst_kept);
}

TEST(LrFilter, FilteredRecallBeatsBlockingOrder) {
  const auto& w = world();
  auto blocked = block_candidates(w.test_users, w.test_users, w.store, BlockingConfig{});
  auto filtered = lr_filter(blocked, models().lr, *w.extractor, 20);
  auto top_blocked = blocked;
  for (auto& l : top_blocked.lists)
    if (l.size() > 20) l.resize(20);
  EXPECT_GE(candidate_recall(filtered, w.synth.test_truth), candidate_recall(top_blocked, w.synth.test_truth));
}

TEST(GbdtScore, EmptyAndDedup) {
  const auto& w = world();
  EXPECT_TRUE(gbdt_score(CandidateSet{}, models().gbdt, *w.extractor).empty());
  const auto& a = w.test_users[0];
  const auto& b = w.test_users[1];
  CandidateSet c;
  c.queries = {std::min(a, b), std::max(a, b)};
  c.lists = {{{std::max(a, b), 1.0}}, {{std::min(a, b), 1.0}}};
  auto s = gbdt_score(c, models().gbdt, *w.extractor);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].pair, UidPair(a, b));
  EXPECT_GT(s[0].score, 0.0);
  EXPECT_LT(s[0].score, 1.0);
}

TEST(GbdtScore, OrderMatchesIndependentSort) {
  const auto& w = world();
  auto blocked = block_candidates(w.test_users, w.test_users, w.store, BlockingConfig{2, 15});
  auto s = gbdt_score(blocked, models().gbdt, *w.extractor, 3);
  ASSERT_FALSE(s.empty());
  auto ref = s;
  std::mt19937 rng(4);
  std::shuffle(ref.begin(), ref.end(), rng);
  std::stable_sort(ref.begin(), ref.end(), [](const auto& x, const auto& y) {
    return x.score != y.score ? x.score > y.score : x.pair < y.pair;
  });
  ASSERT_EQ(ref.size(), s.size());
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(s[i].pair, ref[i].pair);
  EXPECT_EQ(format_scores(parse_scores(format_scores(s))), format_scores(s));
}

TEST(Submission, HandTrace) {
  auto t = scored({{"a", "b", .9}, {"c", "d", .8}, {"a", "e", .7}, {"c", "f", .6}, {"g", "h", .5}});
  EXPECT_EQ(select_submission(t, {2, 1, 2.0}), pairs({{"a", "b"}, {"c", "d"}, {"a", "e"}}));
}

TEST(Submission, ZeroDepthIsTopN) {
  auto t = scored({{"a", "b", .9}, {"c", "d", .8}, {"a", "e", .7}, {"c", "f", .6}, {"g", "h", .5}});
  EXPECT_EQ(select_submission(t, {3, 0, 2.0}), pairs({{"a", "b"}, {"c", "d"}, {"a", "e"}}));
}

TEST(Submission, Saturation) {
  auto t = scored({{"a", "b", .9}, {"c", "d", .8}, {"a", "e", .7}});
  MatchPairs all;
  for (const auto& p : t) all.insert(p.pair);
  for (std::size_t n : {3, 10})
    for (int k : {0, 1, 3}) EXPECT_EQ(select_submission(t, {n, k, 1.5}), all);
}

TEST(Submission, StrictRankSlack) {
  // n*r = 4: rank 4 is not admitted
  auto t = scored({{"a", "b", .9}, {"c", "d", .8}, {"e", "f", .7}, {"g", "h", .6}});
  EXPECT_EQ(select_submission(t, {2, 1, 2.0}), pairs({{"a", "b"}, {"c", "d"}, {"e", "f"}}));
}

TEST(Submission, RandomizedInvariants) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    ScoredPairs t;
    std::set<UidPair> seen;
    std::set<std::string> uids;
    while (t.size() < 60) {
      UidPair p("u" + std::to_string(rng() % 30), "u" + std::to_string(rng() % 30));
      if (p.a == p.b || !seen.insert(p).second) continue;
      t.push_back({p, static_cast<double>(rng() % 10) / 10.0});  // many ties
      uids.insert(p.a);
      uids.insert(p.b);
    }
    sort_scored(t);
    SubmissionConfig cfg{1 + rng() % 20, static_cast<int>(rng() % 3), 1.0 + (rng() % 3)};
    auto chosen = select_submission(t, cfg);
    for (std::size_t i = 0; i < cfg.n; ++i) EXPECT_TRUE(chosen.count(t[i].pair));
    EXPECT_LE(chosen.size(), cfg.n + cfg.k * uids.size());
    auto shuffled = t;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    sort_scored(shuffled);
    EXPECT_EQ(select_submission(shuffled, cfg), chosen);
  }
}

TEST(Submission, BadConfig) {
  auto t = scored({{"a", "b", .9}});
  EXPECT_THROW(select_submission(t, {0, 1, 2.0}), Error);
  EXPECT_THROW(select_submission(t, {1, -1, 2.0}), Error);
  EXPECT_THROW(select_submission(t, {1, 1, 0.5}), Error);
}

TEST(Evaluate, TruthGivesPerfectF1) {
  auto truth = pairs({{"a", "b"}, {"c", "d"}});
  EXPECT_EQ(evaluate(truth, truth).f1, 1.0);
  EXPECT_THROW(evaluate(truth, {}), Error);
  auto t = scored({{"a", "b", .9}, {"c", "d", .6}, {"a", "c", .5}});
  EXPECT_EQ(evaluate(truth, truth, &t).auc, 1.0);
}

TEST(Evaluate, SingleValueSweepEqualsEvaluate) {
  auto t = scored({{"a", "b", .9}, {"c", "d", .8}, {"a", "e", .7}, {"c", "f", .6}, {"g", "h", .5}});
  auto truth = pairs({{"a", "b"}, {"g", "h"}, {"x", "y"}});
  SubmissionConfig base{1, 2, 2.0};
  std::vector<std::size_t> grid{2};
  auto rows = sweep_n(t, truth, grid, base);
  ASSERT_EQ(rows.size(), 1u);
  auto direct = evaluate(select_submission(t, {2, 2, 2.0}), truth, &t);
  EXPECT_EQ(rows[0].n, 2u);
  EXPECT_EQ(rows[0].metrics.f1, direct.f1);
  EXPECT_EQ(rows[0].metrics.precision, direct.precision);
}

TEST(Candidates, FileRoundTrip) {
  const auto& w = world();
  auto c = block_candidates(w.test_users, w.test_users, w.store, BlockingConfig{2, 5});
  auto text = format_candidates(c);
  auto back = parse_candidates(text);
  EXPECT_EQ(format_candidates(back), text);
  EXPECT_EQ(back.unique_pairs(), c.unique_pairs());
  EXPECT_THROW(parse_candidates("just-one-column\n"), Error);
}

}  // namespace
}  // namespace xlink
