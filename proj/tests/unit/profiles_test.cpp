#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>

#include "fixtures.hpp"
#include "xlink/profiles.hpp"

namespace xlink {
namespace {

using testing::at;
using testing::CorpusBuilder;

double weight_of(const ProfileStore& st, const std::string& uid, Channel ch, const std::string& term) {
  auto id = st.dictionary(ch).find(term);
  if (!id) return -1.0;
  const auto& v = ch == Channel::Doc ? st.at(uid).doc : st.at(uid).fid;
  for (std::size_t i = 0; i < v.ids.size(); ++i)
    if (v.ids[i] == *id) return v.weights[i];
  return 0.0;
}

SparseVector vec(std::map<std::uint32_t, double> m) {
  std::vector<std::uint32_t> ids;
  std::vector<double> w;
  for (auto [k, x] : m) {
    ids.push_back(k);
    w.push_back(x);
  }
  return SparseVector::from(std::move(ids), std::move(w));
}

TEST(TimeParts, UtcCalendar) {
  auto t = time_parts(testing::kMonday + 17 * 3600 + 59);
  EXPECT_EQ(t.hour, 17);
  EXPECT_EQ(t.weekday, 0);
  EXPECT_EQ(t.month, 0);
  EXPECT_EQ(t.day, 16804);
  EXPECT_EQ(time_parts(0).weekday, 3);  // 1970-01-01 was a Thursday
  EXPECT_EQ(time_parts(at(6, 23)).weekday, 6);
  EXPECT_EQ(time_parts(1456790400).month, 2);  // 2016-03-01
}

TEST(BuildProfiles, TfIdfHandValue) {
  CorpusBuilder b;
  b.fid("f1", "s/x", {"a", "a"}).fid("f2", "s/y", {"b"}).fid("f3", "t/z", {"b"});
  b.visit("u1", "f1", at(0, 1)).visit("u1", "f2", at(0, 2));
  b.visit("u2", "f3", at(1, 1)).visit("u2", "f3", at(1, 2));
  auto st = build_profiles(b.corpus());
  EXPECT_NEAR(weight_of(st, "u1", Channel::Doc, "a"), 2.0 / 3.0 * std::log(2.0), 1e-12);
  EXPECT_NEAR(weight_of(st, "u1", Channel::Doc, "a"), 0.46210, 5e-6);
  EXPECT_EQ(weight_of(st, "u1", Channel::Doc, "b"), 0.0);  // in every user: ln 1
  // repeat visits count toward TF; f3 is u2's only fid so TF 1, df 1
  EXPECT_NEAR(weight_of(st, "u2", Channel::Fid, "f3"), std::log(2.0), 1e-12);
}

TEST(BuildProfiles, HourHistogram) {
  CorpusBuilder b;
  b.fid("f", "s");
  b.visit("u", "f", at(0, 3)).visit("u", "f", at(2, 3, 30)).visit("u", "f", at(5, 17));
  auto st = build_profiles(b.corpus());
  const auto& p = st.at("u");
  for (int h = 0; h < 24; ++h) EXPECT_EQ(p.hour_hist[h], h == 3 ? 2 : h == 17 ? 1 : 0) << h;
  EXPECT_EQ(p.dow_hist[0], 1);
  EXPECT_EQ(p.dow_hist[2], 1);
  EXPECT_EQ(p.dow_hist[5], 1);
  EXPECT_EQ(p.event_count, 3);
  EXPECT_EQ(p.lifespan_days(), 6);
  EXPECT_EQ(p.active_days.size(), 3u);
}

TEST(BuildProfiles, UrlLevelsAndSets) {
  CorpusBuilder b;
  b.fid("f1", "d/p/q").fid("f2", "d/r").fid("f3", "e");
  b.visit("u", "f1", at(0, 0)).visit("u", "f2", at(0, 1)).visit("v", "f3", at(0, 2)).visit("v", "f1", at(0, 3));
  auto st = build_profiles(b.corpus());
  EXPECT_EQ(st.at("u").url_set(1).size(), 1u);  // d
  EXPECT_EQ(st.at("u").url_set(2).size(), 2u);  // d/p, d/r
  EXPECT_EQ(st.at("u").url_set(3).size(), 2u);  // d/p/q, d/r
  EXPECT_EQ(st.at("v").url_set(1).size(), 2u);
  EXPECT_EQ(st.at("u").fid_set().size(), 2u);
}

TEST(BuildProfiles, EmptyTitleChannelIsEmptyVector) {
  CorpusBuilder b;
  b.fid("f", "s");
  b.visit("u", "f", at(0, 0)).visit("u", "f", at(0, 1));
  auto st = build_profiles(b.corpus());
  EXPECT_TRUE(st.at("u").doc.empty());
  EXPECT_EQ(st.at("u").doc.norm, 0.0);
}

TEST(BuildProfiles, UnknownUidNamed) {
  CorpusBuilder b;
  b.fid("f", "s").visit("u", "f", 0).visit("u", "f", 1);
  auto st = build_profiles(b.corpus());
  try {
    st.index_of("ghost");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("ghost"), std::string::npos);
  }
}

TEST(BuildProfiles, SyntheticTotalsAndInvariants) {
  auto synth = generate_corpus(testing::small_synth());
  auto corpus = testing::as_corpus(synth);
  auto st = build_profiles(corpus, 3);
  std::int64_t total = 0;
  for (const auto& [uid, log] : corpus.logs) total += static_cast<std::int64_t>(log.events.size());
  std::int64_t summed = 0;
  for (const auto& p : st.profiles()) {
    summed += p.event_count;
    auto sum = [](const auto& h) { return std::accumulate(h.begin(), h.end(), std::int64_t{0}); };
    EXPECT_EQ(sum(p.hour_hist), p.event_count);
    EXPECT_EQ(sum(p.dow_hist), p.event_count);
    EXPECT_EQ(sum(p.month_hist), p.event_count);
    EXPECT_LE(p.first_day, p.last_day);
    for (double w : p.doc.weights) EXPECT_GE(w, 0.0);
    for (const auto& u : p.url)
      for (double w : u.weights) EXPECT_GE(w, 0.0);
  }
  EXPECT_EQ(summed, total);
  EXPECT_EQ(st.size(), corpus.logs.size());
}

TEST(BuildProfiles, ThreadCountDoesNotMatter) {
  auto corpus = testing::as_corpus(generate_corpus(testing::small_synth(3)));
  auto a = build_profiles(corpus, 1);
  auto b = build_profiles(corpus, 4);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.profile(i).doc.weights, b.profile(i).doc.weights);
    EXPECT_EQ(a.profile(i).url[1].ids, b.profile(i).url[1].ids);
  }
}

TEST(Cosine, Examples) {
  auto ab = vec({{0, 1.0}, {1, 1.0}});
  auto a = vec({{0, 1.0}});
  EXPECT_NEAR(cosine(ab, ab), 1.0, 1e-15);
  EXPECT_EQ(cosine(a, vec({{5, 2.0}})), 0.0);
  EXPECT_NEAR(cosine(ab, a), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(cosine(ab, a), 0.70711, 5e-6);
  EXPECT_EQ(cosine(ab, SparseVector{}), 0.0);
}

TEST(Cosine, SymmetricScaleInvariantAndMatchesDense) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> w(0.0, 3.0);
  std::vector<SparseVector> vs;
  std::vector<std::vector<double>> dense;
  for (int i = 0; i < 50; ++i) {
    std::map<std::uint32_t, double> m;
    std::vector<double> d(40, 0.0);
    int nnz = static_cast<int>(rng() % 12);
    for (int k = 0; k < nnz; ++k) {
      auto id = static_cast<std::uint32_t>(rng() % 40);
      m[id] = d[id] = w(rng);
    }
    vs.push_back(vec(m));
    dense.push_back(d);
  }
  for (std::size_t i = 0; i < vs.size(); ++i)
    for (std::size_t j = 0; j < vs.size(); ++j) {
      double dot = 0, na = 0, nb = 0;
      for (int k = 0; k < 40; ++k) {
        dot += dense[i][k] * dense[j][k];
        na += dense[i][k] * dense[i][k];
        nb += dense[j][k] * dense[j][k];
      }
      double ref = na > 0 && nb > 0 ? dot / std::sqrt(na * nb) : 0.0;
      EXPECT_NEAR(cosine(vs[i], vs[j]), ref, 1e-9);
      EXPECT_EQ(cosine(vs[i], vs[j]), cosine(vs[j], vs[i]));
      auto scaled = vs[i];
      for (auto& x : scaled.weights) x *= 3.7;
      scaled = SparseVector::from(scaled.ids, scaled.weights);
      EXPECT_NEAR(cosine(scaled, vs[j]), cosine(vs[i], vs[j]), 1e-12);
    }
}

TEST(Overlap, CommonCount) {
  auto a = vec({{1, 1.0}, {3, 1.0}, {7, 2.0}});
  auto b = vec({{3, 5.0}, {7, 1.0}, {9, 1.0}});
  EXPECT_EQ(overlap(a, b).common, 2u);
  EXPECT_EQ(common_count(a.ids, b.ids), 2u);
  EXPECT_NEAR(overlap(a, b).cosine, cosine(a, b), 1e-15);
}

TEST(ProfileCache, RoundTripAndInvalidation) {
  auto corpus = testing::as_corpus(generate_corpus(testing::small_synth(2)));
  auto st = build_profiles(corpus);
  st.set_corpus_checksum(1234);
  auto dir = testing::scratch_dir("cache");
  save_profile_cache(st, dir / "p.bin");
  auto back = load_profile_cache(dir / "p.bin", 1234);
  ASSERT_TRUE(back.has_value());
  ASSERT_EQ(back->size(), st.size());
  for (std::size_t i = 0; i < st.size(); ++i) {
    EXPECT_EQ(back->profile(i).uid, st.profile(i).uid);
    EXPECT_EQ(back->profile(i).fid.weights, st.profile(i).fid.weights);
    EXPECT_EQ(back->profile(i).hour_hist, st.profile(i).hour_hist);
  }
  EXPECT_EQ(back->idf(Channel::Url2), st.idf(Channel::Url2));
  EXPECT_FALSE(load_profile_cache(dir / "p.bin", 999).has_value());
  EXPECT_FALSE(load_profile_cache(dir / "missing.bin", 1234).has_value());
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace xlink
