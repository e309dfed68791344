#include "xlink/sampling.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <random>
#include <unordered_set>

namespace xlink {

std::size_t SampleSet::positives() const {
  return static_cast<std::size_t>(
      std::count_if(instances.begin(), instances.end(), [](const auto& s) { return s.label == 1; }));
}

std::size_t SampleSet::negatives() const { return instances.size() - positives(); }

namespace {

// Draws `want` distinct entries of [0, n) not in `excluded`, in draw order.
std::vector<std::uint32_t> draw_distinct(std::mt19937_64& rng, std::uint32_t n, std::size_t want,
                                         std::unordered_set<std::uint32_t>& excluded) {
  std::vector<std::uint32_t> out;
  const std::size_t free = n - std::min<std::size_t>(n, excluded.size());
  if (want >= free) {
    for (std::uint32_t i = 0; i < n; ++i)
      if (!excluded.count(i)) out.push_back(i);
    std::shuffle(out.begin(), out.end(), rng);
    for (auto i : out) excluded.insert(i);
    return out;
  }
  std::uniform_int_distribution<std::uint32_t> pick(0, n - 1);
  while (out.size() < want) {
    auto i = pick(rng);
    if (excluded.insert(i).second) out.push_back(i);
  }
  return out;
}

}  // namespace

SampleSet iterative_negative_sample(const std::vector<std::string>& users, const MatchPairs& matches,
                                    const SamplerConfig& config, const SampleTrainer& trainer,
                                    const FeatureExtractor& extractor, int threads, SamplingTrace* trace) {
  if (config.n < 2 || config.n % 2 != 0) throw Error("sampler n must be even and >= 2");
  if (config.k < 1) throw Error("sampler k must be >= 1");

  std::vector<std::string> pool_uids(users);
  std::sort(pool_uids.begin(), pool_uids.end());
  pool_uids.erase(std::unique(pool_uids.begin(), pool_uids.end()), pool_uids.end());
  const auto n_users = static_cast<std::uint32_t>(pool_uids.size());
  std::map<std::string_view, std::uint32_t> local;
  std::vector<std::uint32_t> store_idx(n_users);
  for (std::uint32_t i = 0; i < n_users; ++i) {
    local.emplace(pool_uids[i], i);
    store_idx[i] = extractor.store().index_of(pool_uids[i]);
  }
  std::vector<std::vector<std::uint32_t>> partners(n_users);
  for (const auto& m : matches) {
    auto ia = local.find(m.a), ib = local.find(m.b);
    if (ia == local.end() || ib == local.end()) continue;
    partners[ia->second].push_back(ib->second);
    partners[ib->second].push_back(ia->second);
  }
  for (std::uint32_t u = 0; u < n_users; ++u) {
    std::size_t available = n_users - 1 - partners[u].size();
    if (available < static_cast<std::size_t>(config.n))
      throw Error("user '" + pool_uids[u] + "' has only " + std::to_string(available) +
                  " non-matching users to sample from (n = " + std::to_string(config.n) + ")");
  }

  const std::size_t half = static_cast<std::size_t>(config.n) / 2;
  std::optional<LinearModel> model;
  SampleSet result;
  for (int round = 0; round < config.k; ++round) {
    // picks[u] = (partner, hard) in selection order
    std::vector<std::vector<std::pair<std::uint32_t, bool>>> picks(n_users);
    parallel_chunks(n_users, threads, [&](std::size_t begin, std::size_t end, int) {
      std::vector<double> buf(kFeatureDim);
      for (std::size_t u = begin; u < end; ++u) {
        std::seed_seq seq{static_cast<std::uint64_t>(config.seed), static_cast<std::uint64_t>(round),
                          static_cast<std::uint64_t>(u)};
        std::mt19937_64 rng(seq);
        std::unordered_set<std::uint32_t> excluded(partners[u].begin(), partners[u].end());
        excluded.insert(static_cast<std::uint32_t>(u));
        auto& out = picks[u];
        if (!model) {
          for (auto v : draw_distinct(rng, n_users, static_cast<std::size_t>(config.n), excluded))
            out.emplace_back(v, false);
          continue;
        }
        std::unordered_set<std::uint32_t> pool_excl(excluded);
        std::size_t pool_want = config.pool_size == 0 ? n_users : config.pool_size;
        auto pool = draw_distinct(rng, n_users, pool_want, pool_excl);
        std::vector<std::pair<double, std::uint32_t>> scored;
        scored.reserve(pool.size());
        for (auto v : pool) {
          extractor.extract(store_idx[u], store_idx[v], buf);
          scored.emplace_back(model->margin(buf), v);
        }
        // Highest score first; equal scores fall back to uid order (local ids are uid-sorted).
        std::sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
          if (x.first != y.first) return x.first > y.first;
          return x.second < y.second;
        });
        for (std::size_t t = 0; t < half && t < scored.size(); ++t) {
          out.emplace_back(scored[t].second, true);
          excluded.insert(scored[t].second);
        }
        for (auto v : draw_distinct(rng, n_users, static_cast<std::size_t>(config.n) - out.size(), excluded))
          out.emplace_back(v, false);
      }
    });

    std::map<std::uint64_t, SampleInstance> collected;  // first insertion wins
    for (std::uint32_t u = 0; u < n_users; ++u)
      for (auto [v, hard] : picks[u])
        collected.try_emplace(pair_key(u, v), SampleInstance{UidPair(pool_uids[u], pool_uids[v]), 0, round, hard});
    SampleSet s;
    s.instances.reserve(collected.size() + matches.size());
    for (auto& [key, inst] : collected) s.instances.push_back(std::move(inst));
    for (const auto& m : matches) s.instances.push_back(SampleInstance{m, 1, round, false});
    std::sort(s.instances.begin(), s.instances.end(),
              [](const auto& x, const auto& y) { return x.pair < y.pair; });

    if (round + 1 < config.k) {
      model = trainer(s);
      if (trace) trace->models.push_back(*model);
    }
    if (trace) trace->rounds.push_back(s);
    result = std::move(s);
  }
  return result;
}

FeatureMatrix sample_features(const SampleSet& samples, const FeatureExtractor& extractor, int threads) {
  std::vector<UidPair> pairs;
  std::vector<int> labels;
  pairs.reserve(samples.instances.size());
  labels.reserve(samples.instances.size());
  for (const auto& s : samples.instances) {
    pairs.push_back(s.pair);
    labels.push_back(s.label);
  }
  return extractor.extract_batch(pairs, labels, threads);
}

SampleTrainer make_lr_trainer(const FeatureExtractor& extractor, const LrConfig& config, int threads) {
  return [&extractor, config, threads](const SampleSet& s) {
    auto m = train_lr(sample_features(s, extractor, threads), config);
    m.feature_names = extractor.schema().names();
    return m;
  };
}

std::string format_samples(const SampleSet& samples) {
  std::string out;
  for (const auto& s : samples.instances) {
    out += s.pair.a;
    out += '\t';
    out += s.pair.b;
    out += '\t';
    out += std::to_string(s.label);
    out += '\t';
    out += std::to_string(s.iteration);
    out += '\n';
  }
  return out;
}

SampleSet parse_samples(std::string_view text) {
  SampleSet s;
  std::size_t lineno = 0;
  for (auto line : split(text, '\n')) {
    ++lineno;
    if (line.empty()) continue;
    auto cols = split(line, '\t');
    if (cols.size() != 4) throw Error("samples line " + std::to_string(lineno) + ": expected 4 columns");
    SampleInstance inst;
    inst.pair = UidPair(std::string(cols[0]), std::string(cols[1]));
    inst.label = static_cast<int>(parse_int(cols[2], "samples label"));
    inst.iteration = static_cast<int>(parse_int(cols[3], "samples iteration"));
    if (inst.label != 0 && inst.label != 1) throw Error("samples line " + std::to_string(lineno) + ": bad label");
    s.instances.push_back(std::move(inst));
  }
  return s;
}

}  // namespace xlink
