#include <cstdlib>
#include <set>

#include "json.hpp"
#include "xlink/run.hpp"

namespace xlink {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Reads fields from one JSON object and rejects whatever it did not ask for.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw Error("config section '" + name_ + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw Error("config key '" + where(key) + "': " + e.what());
    }
  }

  void path(const char* key, std::filesystem::path& out) {
    std::string s;
    get(key, s);
    if (!s.empty()) out = s;
  }

  const json* sub(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [key, v] : j_.items())
      if (!seen_.count(key)) throw Error("unknown config key '" + where(key) + "'");
  }

 private:
  std::string where(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

}  // namespace

RunConfig run_config_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("malformed config: ") + e.what());
  }
  RunConfig c;
  Section top(j, "");
  top.path("work_dir", c.work_dir);
  top.path("corpus_dir", c.corpus_dir);
  top.path("truth", c.truth);
  top.get("seed", c.seed);
  if (const auto* s = top.sub("synth")) {
    if (s->is_object() && s->contains("seed")) throw Error("config key 'synth.seed': use the top-level seed");
    c.synth = synth_config_from_json(s->dump());
  }
  if (const auto* s = top.sub("corpus")) {
    Section sec(*s, "corpus");
    sec.get("max_events_per_user", c.max_events_per_user);
    sec.finish();
  }
  if (const auto* s = top.sub("lift")) {
    Section sec(*s, "lift");
    sec.get("level", c.lift_level);
    sec.get("alpha", c.lift_alpha);
    sec.get("random_pairs", c.random_pairs);
    sec.finish();
  }
  if (const auto* s = top.sub("sample")) {
    Section sec(*s, "sample");
    sec.get("n", c.sampler.n);
    sec.get("k", c.sampler.k);
    sec.get("pool_size", c.sampler.pool_size);
    sec.finish();
  }
  if (const auto* s = top.sub("lr")) {
    Section sec(*s, "lr");
    sec.get("l2", c.lr.l2);
    sec.get("epochs", c.lr.epochs);
    sec.get("step", c.lr.step);
    sec.finish();
  }
  if (const auto* s = top.sub("gbdt")) {
    Section sec(*s, "gbdt");
    sec.get("n_trees", c.gbdt.n_trees);
    sec.get("max_depth", c.gbdt.max_depth);
    sec.get("step", c.gbdt.step);
    sec.get("min_leaf", c.gbdt.min_leaf);
    sec.get("lambda", c.gbdt.lambda);
    sec.finish();
  }
  if (const auto* s = top.sub("blocking")) {
    Section sec(*s, "blocking");
    sec.get("level", c.blocking.level);
    sec.get("cap", c.blocking.cap);
    sec.finish();
  }
  if (const auto* s = top.sub("filter")) {
    Section sec(*s, "filter");
    sec.get("enabled", c.lr_filter);
    sec.get("top", c.filter_top);
    sec.finish();
  }
  if (const auto* s = top.sub("submit")) {
    Section sec(*s, "submit");
    sec.get("n", c.submission.n);
    sec.get("k", c.submission.k);
    sec.get("r", c.submission.r);
    sec.finish();
  }
  top.finish();
  return c;
}

std::string run_config_to_json(const RunConfig& c) {
  ordered_json j;
  j["work_dir"] = c.work_dir.string();
  j["corpus_dir"] = c.corpus_dir.string();
  j["truth"] = c.truth.string();
  j["seed"] = c.seed;
  auto synth = ordered_json::parse(synth_config_to_json(c.synth));
  synth.erase("seed");
  j["synth"] = synth;
  j["corpus"] = {{"max_events_per_user", c.max_events_per_user}};
  j["lift"] = {{"level", c.lift_level}, {"alpha", c.lift_alpha}, {"random_pairs", c.random_pairs}};
  j["sample"] = {{"n", c.sampler.n}, {"k", c.sampler.k}, {"pool_size", c.sampler.pool_size}};
  j["lr"] = {{"l2", c.lr.l2}, {"epochs", c.lr.epochs}, {"step", c.lr.step}};
  j["gbdt"] = {{"n_trees", c.gbdt.n_trees},
               {"max_depth", c.gbdt.max_depth},
               {"step", c.gbdt.step},
               {"min_leaf", c.gbdt.min_leaf},
               {"lambda", c.gbdt.lambda}};
  j["blocking"] = {{"level", c.blocking.level}, {"cap", c.blocking.cap}};
  j["filter"] = {{"enabled", c.lr_filter}, {"top", c.filter_top}};
  j["submit"] = {{"n", c.submission.n}, {"k", c.submission.k}, {"r", c.submission.r}};
  return j.dump(2) + "\n";
}

RunConfig resolve(RunConfig c) {
  if (c.work_dir.empty()) {
    const char* env = std::getenv("XLINK_WORKDIR");
    c.work_dir = env && *env ? env : "xlink-work";
  }
  if (c.corpus_dir.empty()) c.corpus_dir = c.work_dir / "corpus";
  if (c.truth.empty()) c.truth = c.corpus_dir / files::kTestTruth;
  c.synth.seed = c.seed;
  c.sampler.seed = c.seed;
  c.lr.seed = c.seed;
  c.gbdt.seed = c.seed;
  if (c.lift_level < 1 || c.lift_level > kUrlLevels) throw Error("lift.level must be in 1..4");
  if (c.lift_alpha < 0.0) throw Error("lift.alpha must be nonnegative");
  if (c.filter_top == 0) throw Error("filter.top must be positive");
  return c;
}

}  // namespace xlink
