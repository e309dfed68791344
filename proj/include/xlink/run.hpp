#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "xlink/corpus.hpp"
#include "xlink/features.hpp"
#include "xlink/gbdt.hpp"
#include "xlink/keyurl.hpp"
#include "xlink/linear.hpp"
#include "xlink/pipeline.hpp"
#include "xlink/profiles.hpp"
#include "xlink/sampling.hpp"
#include "xlink/synthgen.hpp"

namespace xlink {

/// Everything a run needs. The single `seed` feeds every randomized stage; module configs keep
/// their own seed fields only so the library can be driven directly.
struct RunConfig {
  std::filesystem::path work_dir;    // empty: $XLINK_WORKDIR, else ./xlink-work
  std::filesystem::path corpus_dir;  // empty: <work_dir>/corpus
  std::filesystem::path truth;       // empty: <corpus_dir>/test_truth.tsv
  std::uint64_t seed = 1;

  SynthConfig synth;
  std::size_t max_events_per_user = 2000;

  int lift_level = 1;
  double lift_alpha = 1.0;
  std::size_t random_pairs = 0;  // 0: max(|M|, 100000)

  SamplerConfig sampler;
  LrConfig lr;
  GbdtConfig gbdt;

  BlockingConfig blocking;
  bool lr_filter = true;
  std::size_t filter_top = 100;

  SubmissionConfig submission{0, 2, 2.0};  // n = 0: half the distinct uids among scored pairs
};

/// Parses a JSON config; unknown keys anywhere are errors.
RunConfig run_config_from_json(std::string_view text);
std::string run_config_to_json(const RunConfig& config);
/// Fills the empty paths and pushes the global seed into the module configs.
RunConfig resolve(RunConfig config);

/// Artifact names inside the work dir.
namespace artifacts {
inline constexpr std::string_view kConfig = "config.effective.json";
inline constexpr std::string_view kProfiles = "profiles.bin";
inline constexpr std::string_view kLiftTable = "lift_table.tsv";
inline constexpr std::string_view kLiftMeta = "lift_meta.json";
inline constexpr std::string_view kSamples = "samples.tsv";
inline constexpr std::string_view kFeatures = "features.csv";
inline constexpr std::string_view kSchema = "features_schema.json";
inline constexpr std::string_view kLrModel = "model.lr.json";
inline constexpr std::string_view kGbdtModel = "model.gbdt.json";
inline constexpr std::string_view kImportance = "importance.tsv";
inline constexpr std::string_view kCandidates = "candidates.tsv";
inline constexpr std::string_view kScores = "scores.tsv";
inline constexpr std::string_view kSubmission = "submission.tsv";
inline constexpr std::string_view kMetrics = "metrics.json";
}  // namespace artifacts

/// Runs stages against one work dir. Loaded inputs are memoized, so run_all reads each artifact
/// at most once while single stages still work from files alone.
class Runner {
 public:
  Runner(RunConfig config, int threads);
  ~Runner();

  const RunConfig& config() const { return config_; }

  void synth();
  void profiles();
  void lift();
  void sample();
  void extract();
  void train_lr();
  void train_gbdt();
  void filter();
  void score();
  void submit();
  /// Writes metrics.json and returns its text. Explicit paths override the work-dir defaults.
  std::string eval(const std::filesystem::path& predicted = {}, const std::filesystem::path& scores = {});
  void run_all();

 private:
  struct State;

  std::filesystem::path work(std::string_view name) const;
  /// Path of a predecessor artifact; throws naming the file and its producing stage when absent.
  std::filesystem::path need(const std::filesystem::path& path, std::string_view stage) const;
  void echo_config() const;

  const Corpus& corpus();
  const ProfileStore& store();
  const LiftTable& lift_table();
  const FeatureExtractor& extractor();
  const SampleSet& samples();
  const FeatureMatrix& features();
  const LinearModel& lr_model();
  const GbdtModel& gbdt_model();
  const CandidateSet& candidates();
  const ScoredPairs& scores();

  RunConfig config_;
  int threads_;
  std::unique_ptr<State> s_;
};

}  // namespace xlink
