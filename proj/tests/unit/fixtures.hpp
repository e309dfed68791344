#pragma once

#include <unistd.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "xlink/corpus.hpp"
#include "xlink/features.hpp"
#include "xlink/keyurl.hpp"
#include "xlink/profiles.hpp"
#include "xlink/synthgen.hpp"

namespace xlink::testing {

inline std::filesystem::path data_dir() { return XLINK_TEST_DATA; }

// 2016-01-04 is a Monday.
inline constexpr std::int64_t kMonday = 1451865600;

inline std::int64_t at(int day, int hour, int minute = 0) {
  return kMonday + day * kSecondsPerDay + hour * 3600 + minute * 60;
}

/// Hand-built corpora. Every fid gets a URL; titles are optional.
class CorpusBuilder {
 public:
  CorpusBuilder& fid(const std::string& f, const std::string& url, std::vector<std::string> tokens = {}) {
    c_.maps.fid_to_url[f] = url;
    c_.maps.fid_to_tokens[f] = std::move(tokens);
    return *this;
  }
  CorpusBuilder& visit(const std::string& uid, const std::string& f, std::int64_t ts) {
    auto& log = c_.logs[uid];
    log.uid = uid;
    log.events.push_back({f, ts});
    std::sort(log.events.begin(), log.events.end());
    return *this;
  }
  CorpusBuilder& match(const std::string& a, const std::string& b) {
    add_match(c_.train_pairs, a, b);
    return *this;
  }
  CorpusBuilder& test_uid(const std::string& u) {
    c_.test_uids.insert(u);
    return *this;
  }
  const Corpus& corpus() const { return c_; }

 private:
  Corpus c_;
};

/// A few hundred persons: enough structure for the statistical checks, fast to build.
inline SynthConfig small_synth(std::uint64_t seed = 7) {
  SynthConfig s;
  s.n_persons = 150;
  s.n_background_urls = 3000;
  s.n_niche_urls = 120;
  s.events_mu = 4.0;
  s.seed = seed;
  return s;
}

inline Corpus as_corpus(const SynthCorpus& s) {
  Corpus c;
  c.logs = s.logs;
  c.maps = s.maps;
  c.train_pairs = s.train_pairs;
  c.test_uids = s.test_uids;
  return c;
}

/// One small generated corpus with profiles, lift table and extractor, built on first use.
struct World {
  SynthCorpus synth;
  Corpus corpus;
  ProfileStore store;
  LiftTable lift;
  std::unique_ptr<FeatureExtractor> extractor;
  std::vector<std::string> train_users;
  std::vector<std::string> test_users;
};

inline const World& world() {
  static const std::unique_ptr<World> w = [] {
    auto w = std::make_unique<World>();
    w->synth = generate_corpus(small_synth(5));
    w->corpus = as_corpus(w->synth);
    w->store = build_profiles(w->corpus);
    for (const auto& [uid, log] : w->corpus.logs)
      (w->corpus.test_uids.count(uid) ? w->test_users : w->train_users).push_back(uid);
    auto randoms = sample_random_pairs(w->train_users, w->corpus.train_pairs, 5000, 1);
    w->lift = compute_lift(w->corpus.train_pairs, randoms.pairs, w->store, 1, 1.0);
    w->extractor = std::make_unique<FeatureExtractor>(w->store, KeyUrlIndex(w->lift, w->store));
    return w;
  }();
  return *w;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("xlink_unit_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace xlink::testing
