#include <chrono>
#include <cstdio>
#include <set>

#include "json.hpp"
#include "xlink/metrics.hpp"
#include "xlink/run.hpp"

namespace xlink {

struct Runner::State {
  std::optional<Corpus> corpus;
  std::optional<ProfileStore> store;
  std::optional<LiftTable> lift;
  std::unique_ptr<FeatureExtractor> extractor;
  std::optional<SampleSet> samples;
  std::optional<FeatureMatrix> features;
  std::optional<LinearModel> lr;
  std::optional<GbdtModel> gbdt;
  std::optional<CandidateSet> candidates;
  std::optional<ScoredPairs> scores;
};

namespace {

const auto kStart = std::chrono::steady_clock::now();

void log_line(const std::string& msg) {
  std::chrono::duration<double> t = std::chrono::steady_clock::now() - kStart;
  std::fprintf(stderr, "[xlink %7.1fs] %s\n", t.count(), msg.c_str());
}

std::vector<std::string> training_users(const Corpus& c) {
  std::vector<std::string> out;
  for (const auto& [uid, log] : c.logs)
    if (!c.test_uids.count(uid)) out.push_back(uid);
  return out;
}

}  // namespace

Runner::Runner(RunConfig config, int threads)
    : config_(resolve(std::move(config))), threads_(std::max(1, threads)), s_(std::make_unique<State>()) {}

Runner::~Runner() = default;

std::filesystem::path Runner::work(std::string_view name) const { return config_.work_dir / name; }

std::filesystem::path Runner::need(const std::filesystem::path& path, std::string_view stage) const {
  if (!std::filesystem::exists(path))
    throw Error("missing " + path.string() + " (produced by the '" + std::string(stage) + "' stage)");
  return path;
}

void Runner::echo_config() const {
  std::filesystem::create_directories(config_.work_dir);
  write_file(work(artifacts::kConfig), run_config_to_json(config_));
}

const Corpus& Runner::corpus() {
  if (!s_->corpus) {
    need(config_.corpus_dir / files::kFacts, "synth");
    s_->corpus = load_corpus(config_.corpus_dir, LoadOptions{config_.max_events_per_user});
  }
  return *s_->corpus;
}

const ProfileStore& Runner::store() {
  if (!s_->store) {
    auto path = need(work(artifacts::kProfiles), "profiles");
    auto cached = load_profile_cache(path, corpus_checksum(config_.corpus_dir));
    if (!cached) throw Error(path.string() + " is stale or unreadable; rerun the 'profiles' stage");
    s_->store = std::move(*cached);
  }
  return *s_->store;
}

const LiftTable& Runner::lift_table() {
  if (!s_->lift) {
    auto meta_text = read_file(need(work(artifacts::kLiftMeta), "lift"));
    auto meta = nlohmann::json::parse(meta_text);
    auto t = parse_lift_table(read_file(need(work(artifacts::kLiftTable), "lift")), meta.at("level").get<int>(),
                              meta.at("alpha").get<double>());
    t.match_pairs = meta.at("match_pairs").get<std::size_t>();
    t.random_pairs = meta.at("random_pairs").get<std::size_t>();
    s_->lift = std::move(t);
  }
  return *s_->lift;
}

const FeatureExtractor& Runner::extractor() {
  if (!s_->extractor) {
    const auto& st = store();
    s_->extractor = std::make_unique<FeatureExtractor>(st, KeyUrlIndex(lift_table(), st));
  }
  return *s_->extractor;
}

const SampleSet& Runner::samples() {
  if (!s_->samples) s_->samples = parse_samples(read_file(need(work(artifacts::kSamples), "sample")));
  return *s_->samples;
}

const FeatureMatrix& Runner::features() {
  if (!s_->features) {
    auto schema = FeatureSchema::from_json(read_file(need(work(artifacts::kSchema), "extract")));
    auto m = parse_features_csv(read_file(need(work(artifacts::kFeatures), "extract")));
    if (schema.dimension() != m.dim) throw Error("features.csv does not match features_schema.json");
    s_->features = std::move(m);
  }
  return *s_->features;
}

const LinearModel& Runner::lr_model() {
  if (!s_->lr) s_->lr = lr_from_json(read_file(need(work(artifacts::kLrModel), "train-lr")));
  return *s_->lr;
}

const GbdtModel& Runner::gbdt_model() {
  if (!s_->gbdt) s_->gbdt = gbdt_from_json(read_file(need(work(artifacts::kGbdtModel), "train-gbdt")));
  return *s_->gbdt;
}

const CandidateSet& Runner::candidates() {
  if (!s_->candidates) s_->candidates = parse_candidates(read_file(need(work(artifacts::kCandidates), "filter")));
  return *s_->candidates;
}

const ScoredPairs& Runner::scores() {
  if (!s_->scores) s_->scores = parse_scores(read_file(need(work(artifacts::kScores), "score")));
  return *s_->scores;
}

void Runner::synth() {
  echo_config();
  auto c = generate(config_.synth, config_.corpus_dir);
  log_line("synth: " + std::to_string(c.logs.size()) + " devices, " + std::to_string(c.train_pairs.size()) +
           " train pairs, " + std::to_string(c.test_truth.size()) + " held-out pairs -> " + config_.corpus_dir.string());
  *s_ = State{};
}

void Runner::profiles() {
  echo_config();
  auto st = build_profiles(corpus(), threads_);
  st.set_corpus_checksum(corpus_checksum(config_.corpus_dir));
  save_profile_cache(st, work(artifacts::kProfiles));
  log_line("profiles: " + std::to_string(st.size()) + " users");
  s_->store = std::move(st);
  s_->extractor.reset();
}

void Runner::lift() {
  echo_config();
  const auto& c = corpus();
  const auto& st = store();
  if (c.train_pairs.empty()) throw Error("lift needs at least one training pair in pairs.tsv");
  std::size_t count = config_.random_pairs ? config_.random_pairs : std::max<std::size_t>(c.train_pairs.size(), 100000);
  auto users = training_users(c);
  auto randoms = sample_random_pairs(users, c.train_pairs, count, config_.seed);
  auto table = compute_lift(c.train_pairs, randoms.pairs, st, config_.lift_level, config_.lift_alpha, threads_);
  write_file(work(artifacts::kLiftTable), format_lift_table(table));
  nlohmann::ordered_json meta{{"level", table.level},
                              {"alpha", table.alpha},
                              {"match_pairs", table.match_pairs},
                              {"random_pairs", table.random_pairs},
                              {"random_seed", randoms.seed},
                              {"urls", table.entries.size()}};
  write_file(work(artifacts::kLiftMeta), meta.dump(2) + "\n");
  log_line("lift: " + std::to_string(table.entries.size()) + " URLs at level " + std::to_string(table.level));
  s_->lift = std::move(table);
  s_->extractor.reset();
}

void Runner::sample() {
  echo_config();
  const auto& c = corpus();
  const auto& ex = extractor();
  auto trainer = make_lr_trainer(ex, config_.lr, threads_);
  auto s = iterative_negative_sample(training_users(c), c.train_pairs, config_.sampler, trainer, ex, threads_);
  write_file(work(artifacts::kSamples), format_samples(s));
  log_line("sample: " + std::to_string(s.positives()) + " positives, " + std::to_string(s.negatives()) +
           " negatives");
  s_->samples = std::move(s);
  s_->features.reset();
}

void Runner::extract() {
  echo_config();
  const auto& ex = extractor();
  auto m = sample_features(samples(), ex, threads_);
  write_file(work(artifacts::kFeatures), format_features_csv(m));
  write_file(work(artifacts::kSchema), ex.schema().to_json());
  log_line("extract: " + std::to_string(m.rows()) + " rows x " + std::to_string(m.dim) + " features");
  s_->features = std::move(m);
}

void Runner::train_lr() {
  echo_config();
  auto schema = FeatureSchema::from_json(read_file(need(work(artifacts::kSchema), "extract")));
  auto m = xlink::train_lr(features(), config_.lr);
  m.feature_names = schema.names();
  write_file(work(artifacts::kLrModel), lr_to_json(m));
  log_line("train-lr: final objective " + format_double(m.loss_trace.back()));
  s_->lr = std::move(m);
}

void Runner::train_gbdt() {
  echo_config();
  auto schema = FeatureSchema::from_json(read_file(need(work(artifacts::kSchema), "extract")));
  auto m = xlink::train_gbdt(features(), config_.gbdt, threads_);
  m.feature_names = schema.names();
  write_file(work(artifacts::kGbdtModel), gbdt_to_json(m));
  auto imp = feature_importance(m);
  std::vector<std::pair<std::string, double>> rows(imp.begin(), imp.end());
  std::stable_sort(rows.begin(), rows.end(), [](const auto& x, const auto& y) { return x.second > y.second; });
  std::string text = "feature\timportance\n";
  for (const auto& [name, v] : rows) text += name + "\t" + format_double(v) + "\n";
  write_file(work(artifacts::kImportance), text);
  log_line("train-gbdt: " + std::to_string(m.trees.size()) + " trees, final loss " + format_double(m.loss_trace.back()));
  s_->gbdt = std::move(m);
}

void Runner::filter() {
  echo_config();
  const auto& c = corpus();
  const auto& ex = extractor();
  std::vector<std::string> tests(c.test_uids.begin(), c.test_uids.end());
  auto blocked = block_candidates(tests, tests, store(), config_.blocking, threads_);
  log_line("filter: blocking kept " + std::to_string(blocked.unique_pairs().size()) + " pairs");
  CandidateSet out = config_.lr_filter ? lr_filter(blocked, lr_model(), ex, config_.filter_top, threads_)
                                       : std::move(blocked);
  write_file(work(artifacts::kCandidates), format_candidates(out));
  log_line("filter: " + std::to_string(out.unique_pairs().size()) + " candidate pairs");
  s_->candidates = std::move(out);
}

void Runner::score() {
  echo_config();
  const auto& model = gbdt_model();  // checked first: its absence is the usual mistake
  auto s = gbdt_score(candidates(), model, extractor(), threads_);
  write_file(work(artifacts::kScores), format_scores(s));
  log_line("score: " + std::to_string(s.size()) + " scored pairs");
  s_->scores = std::move(s);
}

void Runner::submit() {
  echo_config();
  const auto& s = scores();
  auto cfg = config_.submission;
  if (cfg.n == 0) {
    std::set<std::string_view> uids;
    for (const auto& p : s) {
      uids.insert(p.pair.a);
      uids.insert(p.pair.b);
    }
    cfg.n = std::max<std::size_t>(1, uids.size() / 2);
  }
  auto chosen = select_submission(s, cfg);
  write_file(work(artifacts::kSubmission), format_pairs(chosen));
  log_line("submit: n = " + std::to_string(cfg.n) + ", " + std::to_string(chosen.size()) + " pairs");
}

std::string Runner::eval(const std::filesystem::path& predicted, const std::filesystem::path& scores_path) {
  auto pred_path = predicted.empty() ? need(work(artifacts::kSubmission), "submit") : predicted;
  auto pred = parse_pairs(need(pred_path, "submit"));
  auto truth = parse_pairs(need(config_.truth, "synth"));
  std::optional<ScoredPairs> scored;
  auto sp = scores_path.empty() ? work(artifacts::kScores) : scores_path;
  if (std::filesystem::exists(sp)) scored = parse_scores(read_file(sp));
  auto m = evaluate(pred, truth, scored ? &*scored : nullptr);
  auto text = metrics_to_json(m, scored.has_value());
  std::filesystem::create_directories(config_.work_dir);
  write_file(work(artifacts::kMetrics), text);
  return text;
}

void Runner::run_all() {
  synth();
  profiles();
  lift();
  sample();
  extract();
  train_lr();
  train_gbdt();
  filter();
  score();
  submit();
  std::fputs(eval().c_str(), stdout);
}

}  // namespace xlink
