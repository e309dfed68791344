#include "xlink/keyurl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <unordered_set>

namespace xlink {

int group_of(std::int64_t rank) {
  if (rank < 1) throw Error("rank must be >= 1, got " + std::to_string(rank));
  for (std::size_t g = 0; g < kGroupBoundaries.size(); ++g)
    if (rank <= kGroupBoundaries[g]) return static_cast<int>(g);
  return static_cast<int>(kGroupBoundaries.size());
}

std::optional<int> bucket_of(std::int64_t rank) {
  if (rank < 1) throw Error("rank must be >= 1, got " + std::to_string(rank));
  if (rank > kBucketSize * kKeyUrlBuckets) return std::nullopt;
  return static_cast<int>((rank - 1) / kBucketSize);
}

RandomPairSet sample_random_pairs(const std::vector<std::string>& uids, const MatchPairs& matches,
                                  std::size_t count, std::uint64_t seed) {
  std::vector<std::string> pool(uids);
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  const std::uint64_t n = pool.size();
  const std::uint64_t total = n * (n - (n > 0 ? 1 : 0)) / 2;

  std::unordered_set<std::uint64_t> excluded;
  for (const auto& m : matches) {
    auto ia = std::lower_bound(pool.begin(), pool.end(), m.a);
    auto ib = std::lower_bound(pool.begin(), pool.end(), m.b);
    if (ia == pool.end() || *ia != m.a || ib == pool.end() || *ib != m.b) continue;
    excluded.insert(pair_key(static_cast<std::uint32_t>(ia - pool.begin()), static_cast<std::uint32_t>(ib - pool.begin())));
  }
  const std::uint64_t available = total - excluded.size();
  if (count > available)
    throw Error("cannot draw " + std::to_string(count) + " random pairs: only " + std::to_string(available) +
                " non-matching pairs exist");

  std::mt19937_64 rng(seed);
  std::vector<std::uint64_t> chosen;
  chosen.reserve(count);
  if (count * 2 > available) {
    // Dense regime: enumerate and shuffle.
    std::vector<std::uint64_t> all;
    all.reserve(available);
    for (std::uint32_t i = 0; i < n; ++i)
      for (std::uint32_t j = i + 1; j < n; ++j)
        if (!excluded.count(pair_key(i, j))) all.push_back(pair_key(i, j));
    std::shuffle(all.begin(), all.end(), rng);
    chosen.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(count));
  } else {
    std::unordered_set<std::uint64_t> seen;
    std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(n - 1));
    while (chosen.size() < count) {
      auto i = pick(rng);
      auto j = pick(rng);
      if (i == j) continue;
      auto key = pair_key(i, j);
      if (excluded.count(key) || !seen.insert(key).second) continue;
      chosen.push_back(key);
    }
  }
  RandomPairSet out;
  out.seed = seed;
  out.pairs.reserve(count);
  for (auto key : chosen) out.pairs.emplace_back(pool[pair_key_first(key)], pool[pair_key_second(key)]);
  std::sort(out.pairs.begin(), out.pairs.end());
  return out;
}

double lift_ratio(double match_count, double n_match, double random_count, double n_random, double alpha) {
  double num = (match_count + alpha) / (n_match + alpha);
  double den = (random_count + alpha) / (n_random + alpha);
  if (den == 0.0) return std::numeric_limits<double>::infinity();
  return num / den;
}

namespace {

std::vector<std::int64_t> count_pairs(const std::vector<std::pair<std::uint32_t, std::uint32_t>>& pairs,
                                      const ProfileStore& store, int level, std::size_t n_urls, int threads) {
  int workers = std::max(1, threads);
  std::vector<std::vector<std::int64_t>> partial(static_cast<std::size_t>(workers));
  parallel_chunks(pairs.size(), workers, [&](std::size_t begin, std::size_t end, int w) {
    auto& counts = partial[static_cast<std::size_t>(w)];
    counts.assign(n_urls, 0);
    for (std::size_t p = begin; p < end; ++p) {
      auto a = store.profile(pairs[p].first).url_set(level);
      auto b = store.profile(pairs[p].second).url_set(level);
      std::size_t i = 0, j = 0;
      while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) {
          ++i;
        } else if (b[j] < a[i]) {
          ++j;
        } else {
          counts[a[i]]++;
          ++i;
          ++j;
        }
      }
    }
  });
  std::vector<std::int64_t> total(n_urls, 0);
  for (const auto& part : partial)
    for (std::size_t k = 0; k < part.size(); ++k) total[k] += part[k];
  return total;
}

template <typename Range>
std::vector<std::pair<std::uint32_t, std::uint32_t>> resolve(const Range& pairs, const ProfileStore& store) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  for (const auto& p : pairs) out.emplace_back(store.index_of(p.a), store.index_of(p.b));
  return out;
}

}  // namespace

LiftTable compute_lift(const MatchPairs& matches, const std::vector<UidPair>& randoms, const ProfileStore& store,
                       int level, double alpha, int threads) {
  if (matches.empty()) throw Error("lift needs at least one matching pair");
  if (level < 1 || level > kUrlLevels) throw Error("url level must be in 1..4");
  if (alpha < 0.0) throw Error("lift smoothing alpha must be >= 0");
  if (randoms.empty() && alpha == 0.0) throw Error("lift needs random pairs when alpha is 0");

  const auto& dict = store.url_dictionary(level);
  auto c_m = count_pairs(resolve(matches, store), store, level, dict.size(), threads);
  auto c_r = count_pairs(resolve(randoms, store), store, level, dict.size(), threads);

  LiftTable table;
  table.level = level;
  table.alpha = alpha;
  table.match_pairs = matches.size();
  table.random_pairs = randoms.size();
  for (std::uint32_t id = 0; id < dict.size(); ++id) {
    if (alpha == 0.0 && c_m[id] == 0 && c_r[id] == 0) continue;
    LiftEntry e;
    e.url = dict.term(id);
    e.match_count = c_m[id];
    e.random_count = c_r[id];
    e.lift = lift_ratio(static_cast<double>(c_m[id]), static_cast<double>(matches.size()),
                        static_cast<double>(c_r[id]), static_cast<double>(randoms.size()), alpha);
    table.entries.push_back(std::move(e));
  }
  std::sort(table.entries.begin(), table.entries.end(), [](const LiftEntry& x, const LiftEntry& y) {
    if (x.lift != y.lift) return x.lift > y.lift;
    return x.url < y.url;
  });
  for (std::size_t r = 0; r < table.entries.size(); ++r) table.entries[r].rank = static_cast<std::int64_t>(r + 1);
  return table;
}

std::string format_lift_table(const LiftTable& table) {
  std::string out = "rank\turl\tlift\tgroup\tbucket\n";
  for (const auto& e : table.entries) {
    auto bucket = bucket_of(e.rank);
    out += std::to_string(e.rank);
    out += '\t';
    out += e.url;
    out += '\t';
    out += format_double(e.lift);
    out += '\t';
    out += std::to_string(group_of(e.rank));
    out += '\t';
    out += bucket ? std::to_string(*bucket) : "-";
    out += '\n';
  }
  return out;
}

LiftTable parse_lift_table(std::string_view text, int level, double alpha) {
  LiftTable table;
  table.level = level;
  table.alpha = alpha;
  std::size_t lineno = 0;
  for (auto line : split(text, '\n')) {
    ++lineno;
    if (line.empty() || (lineno == 1 && line.starts_with("rank\t"))) continue;
    auto cols = split(line, '\t');
    if (cols.size() != 5) throw Error("lift table line " + std::to_string(lineno) + ": expected 5 columns");
    LiftEntry e;
    e.rank = parse_int(cols[0], "lift table rank");
    e.url = std::string(cols[1]);
    e.lift = parse_double(cols[2], "lift table lift");
    if (e.rank != static_cast<std::int64_t>(table.entries.size() + 1))
      throw Error("lift table line " + std::to_string(lineno) + ": ranks must be 1..N in order");
    table.entries.push_back(std::move(e));
  }
  return table;
}

KeyUrlIndex::KeyUrlIndex(const LiftTable& table, const ProfileStore& store) : level_(table.level) {
  const auto& dict = store.url_dictionary(table.level);
  rank_by_id_.assign(dict.size(), 0);
  for (const auto& e : table.entries)
    if (auto id = dict.find(e.url)) rank_by_id_[*id] = e.rank;
}

}  // namespace xlink
