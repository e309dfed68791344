#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "xlink/corpus.hpp"
#include "xlink/profiles.hpp"

namespace xlink {

/// Lift-rank group edges: ranks 1-100 -> 0, 101-1000 -> 1, ..., 4001-5000 -> 5, beyond -> 6.
inline constexpr std::array<std::int64_t, 6> kGroupBoundaries{100, 1000, 2000, 3000, 4000, 5000};
inline constexpr int kKeyUrlGroups = 7;
inline constexpr std::int64_t kBucketSize = 100;
inline constexpr int kKeyUrlBuckets = 40;
inline constexpr int kTopUrlHits = 500;

int group_of(std::int64_t rank);
/// Bucket 0..39 for ranks 1..4000, nullopt past the bucketed range.
std::optional<int> bucket_of(std::int64_t rank);

struct LiftEntry {
  std::string url;
  double lift = 0.0;
  std::int64_t rank = 0;  // 1-based, by lift desc then url asc
  std::int64_t match_count = 0;
  std::int64_t random_count = 0;
};

struct LiftTable {
  int level = 1;
  double alpha = 1.0;
  std::size_t match_pairs = 0;
  std::size_t random_pairs = 0;
  std::vector<LiftEntry> entries;  // sorted by rank
};

struct RandomPairSet {
  std::vector<UidPair> pairs;  // canonical, sorted
  std::uint64_t seed = 0;
};

/// Uniform sample without replacement of unordered pairs over `uids`, excluding `matches`.
RandomPairSet sample_random_pairs(const std::vector<std::string>& uids, const MatchPairs& matches,
                                  std::size_t count, std::uint64_t seed);

/// ((c_M + alpha) / (|M| + alpha)) / ((c_R + alpha) / (|R| + alpha)).
double lift_ratio(double match_count, double n_match, double random_count, double n_random, double alpha);

/// Lift of every URL at `level`. With alpha == 0 only URLs seen in at least one pair are listed,
/// and URLs absent from every random pair get +infinity.
LiftTable compute_lift(const MatchPairs& matches, const std::vector<UidPair>& randoms, const ProfileStore& store,
                       int level, double alpha, int threads = 1);

std::string format_lift_table(const LiftTable& table);
LiftTable parse_lift_table(std::string_view text, int level, double alpha);

/// Rank lookup keyed by the store's URL ids at the table's level; 0 means unranked.
class KeyUrlIndex {
 public:
  KeyUrlIndex() = default;
  KeyUrlIndex(const LiftTable& table, const ProfileStore& store);

  int level() const { return level_; }
  std::int64_t rank(std::uint32_t url_id) const {
    return url_id < rank_by_id_.size() ? rank_by_id_[url_id] : 0;
  }

 private:
  int level_ = 1;
  std::vector<std::int64_t> rank_by_id_;
};

}  // namespace xlink
