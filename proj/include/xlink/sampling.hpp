#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "xlink/corpus.hpp"
#include "xlink/features.hpp"
#include "xlink/linear.hpp"

namespace xlink {

struct SamplerConfig {
  int n = 10;                   // negatives per user; even
  int k = 2;                    // rounds
  std::size_t pool_size = 1000;  // candidates scored per user in hard rounds; 0 scores every user
  std::uint64_t seed = 0;
};

struct SampleInstance {
  UidPair pair;
  int label = 0;
  int iteration = 0;  // round that produced the instance
  bool hard = false;  // chosen by model score rather than at random
};

struct SampleSet {
  std::vector<SampleInstance> instances;  // sorted by pair

  std::size_t positives() const;
  std::size_t negatives() const;
};

/// Builds a LinearModel from the current sample set.
using SampleTrainer = std::function<LinearModel(const SampleSet&)>;

/// Per-round sample sets and the models retrained on them (models[i] is fit on rounds[i]).
struct SamplingTrace {
  std::vector<SampleSet> rounds;
  std::vector<LinearModel> models;
};

/// Iterative negative sampling. Round 0 draws n random non-matching partners per user; later rounds
/// take the n/2 best-scoring pool candidates under the previous round's model plus n/2 random ones.
/// S is rebuilt every round and the final round's S (with every match as a positive) is returned.
SampleSet iterative_negative_sample(const std::vector<std::string>& users, const MatchPairs& matches,
                                    const SamplerConfig& config, const SampleTrainer& trainer,
                                    const FeatureExtractor& extractor, int threads = 1,
                                    SamplingTrace* trace = nullptr);

/// Trainer that extracts features for the sample set and fits logistic regression.
SampleTrainer make_lr_trainer(const FeatureExtractor& extractor, const LrConfig& config, int threads = 1);

FeatureMatrix sample_features(const SampleSet& samples, const FeatureExtractor& extractor, int threads = 1);

std::string format_samples(const SampleSet& samples);
SampleSet parse_samples(std::string_view text);

}  // namespace xlink
