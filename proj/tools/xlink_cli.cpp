// Command-line front end: one subcommand per pipeline stage, plus run-all.
#include <cstdio>
#include <functional>
#include <memory>

#include "CLI11.hpp"
#include "xlink/run.hpp"

namespace {

using xlink::RunConfig;

struct Binding {
  CLI::Option* option;
  std::function<void(RunConfig&)> apply;
};

struct Command {
  CLI::App* app = nullptr;
  std::vector<Binding> bindings;
  std::string config_file;
  int threads = 1;
  std::function<void(xlink::Runner&)> action;
};

RunConfig defaults_holder{};

// Registers a flag whose value overrides the config file only when given.
template <typename T, typename Get>
void bind(Command& cmd, const std::string& name, Get get, const std::string& desc) {
  auto holder = std::make_shared<T>(get(defaults_holder));
  auto* opt = cmd.app->add_option(name, *holder, desc)->capture_default_str();
  cmd.bindings.push_back({opt, [holder, get](RunConfig& c) { get(c) = *holder; }});
}

void bind_path(Command& cmd, const std::string& name, std::filesystem::path RunConfig::*member,
               const std::string& desc) {
  auto holder = std::make_shared<std::string>();
  auto* opt = cmd.app->add_option(name, *holder, desc);
  cmd.bindings.push_back({opt, [holder, member](RunConfig& c) { c.*member = *holder; }});
}

void common_flags(Command& cmd) {
  cmd.app->add_option("--config", cmd.config_file, "JSON run config; flags override its values");
  bind_path(cmd, "--workdir", &RunConfig::work_dir, "Work dir for artifacts (default: $XLINK_WORKDIR or ./xlink-work)");
  bind_path(cmd, "--corpus", &RunConfig::corpus_dir, "Corpus dir (default: <workdir>/corpus)");
  bind<std::uint64_t>(cmd, "--seed", [](RunConfig& c) -> auto& { return c.seed; }, "Global seed");
  cmd.app->add_option("--threads", cmd.threads, "Worker threads; output is identical for any value")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

void synth_flags(Command& cmd) {
  bind<int>(cmd, "--persons", [](RunConfig& c) -> auto& { return c.synth.n_persons; }, "Persons to generate");
  bind<int>(cmd, "--background-urls", [](RunConfig& c) -> auto& { return c.synth.n_background_urls; },
            "Background domains");
  bind<int>(cmd, "--niche-urls", [](RunConfig& c) -> auto& { return c.synth.n_niche_urls; }, "Niche sites");
  bind<int>(cmd, "--personal-urls", [](RunConfig& c) -> auto& { return c.synth.personal_urls_per_person; },
            "Niche sites owned per person");
  bind<double>(cmd, "--train-fraction", [](RunConfig& c) -> auto& { return c.synth.train_fraction; },
               "Share of persons in the training split");
  bind<std::string>(cmd, "--start-date", [](RunConfig& c) -> auto& { return c.synth.start_date; }, "First log date");
  bind<std::string>(cmd, "--end-date", [](RunConfig& c) -> auto& { return c.synth.end_date; }, "Last log date");
}

void profile_flags(Command& cmd) {
  bind<std::size_t>(cmd, "--max-events", [](RunConfig& c) -> auto& { return c.max_events_per_user; },
                    "Largest accepted event count per user");
}

void lift_flags(Command& cmd) {
  bind<int>(cmd, "--lift-level", [](RunConfig& c) -> auto& { return c.lift_level; }, "URL level for lift (1-4)");
  bind<double>(cmd, "--lift-alpha", [](RunConfig& c) -> auto& { return c.lift_alpha; }, "Lift smoothing");
  bind<std::size_t>(cmd, "--random-pairs", [](RunConfig& c) -> auto& { return c.random_pairs; },
                    "Random pairs for lift (0: max(|matches|, 100000))");
}

void lr_flags(Command& cmd) {
  bind<double>(cmd, "--lr-l2", [](RunConfig& c) -> auto& { return c.lr.l2; }, "LR L2 penalty");
  bind<int>(cmd, "--lr-epochs", [](RunConfig& c) -> auto& { return c.lr.epochs; }, "LR gradient steps");
  bind<double>(cmd, "--lr-step", [](RunConfig& c) -> auto& { return c.lr.step; }, "LR step size");
}

void sample_flags(Command& cmd) {
  bind<int>(cmd, "--sample-n", [](RunConfig& c) -> auto& { return c.sampler.n; }, "Negatives per user (even)");
  bind<int>(cmd, "--sample-k", [](RunConfig& c) -> auto& { return c.sampler.k; }, "Sampling rounds");
  bind<std::size_t>(cmd, "--pool-size", [](RunConfig& c) -> auto& { return c.sampler.pool_size; },
                    "Users scored per user in hard rounds (0: all)");
}

void gbdt_flags(Command& cmd) {
  bind<int>(cmd, "--gbdt-trees", [](RunConfig& c) -> auto& { return c.gbdt.n_trees; }, "Boosting rounds");
  bind<int>(cmd, "--gbdt-depth", [](RunConfig& c) -> auto& { return c.gbdt.max_depth; }, "Max tree depth");
  bind<double>(cmd, "--gbdt-step", [](RunConfig& c) -> auto& { return c.gbdt.step; }, "Learning rate");
  bind<int>(cmd, "--gbdt-min-leaf", [](RunConfig& c) -> auto& { return c.gbdt.min_leaf; }, "Min rows per leaf");
  bind<double>(cmd, "--gbdt-lambda", [](RunConfig& c) -> auto& { return c.gbdt.lambda; }, "Leaf L2 penalty");
}

void filter_flags(Command& cmd) {
  bind<int>(cmd, "--block-level", [](RunConfig& c) -> auto& { return c.blocking.level; }, "URL level for blocking");
  bind<std::size_t>(cmd, "--block-cap", [](RunConfig& c) -> auto& { return c.blocking.cap; },
                    "Candidates kept per user by blocking");
  bind<std::size_t>(cmd, "--filter-top", [](RunConfig& c) -> auto& { return c.filter_top; },
                    "Candidates kept per user by the LR filter");
  auto holder = std::make_shared<bool>(false);
  auto* opt = cmd.app->add_flag("--no-lr-filter", *holder, "Score blocked candidates without the LR filter");
  cmd.bindings.push_back({opt, [holder](RunConfig& c) { c.lr_filter = !*holder; }});
}

void submit_flags(Command& cmd) {
  bind<std::size_t>(cmd, "--submit-n", [](RunConfig& c) -> auto& { return c.submission.n; },
                    "Global top-n (0: half the distinct scored uids)");
  bind<int>(cmd, "--submit-k", [](RunConfig& c) -> auto& { return c.submission.k; }, "Partners per user");
  bind<double>(cmd, "--submit-r", [](RunConfig& c) -> auto& { return c.submission.r; }, "Rank slack multiplier");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-device user linking pipeline"};
  app.require_subcommand(1);
  app.get_formatter()->column_width(40);

  std::vector<std::unique_ptr<Command>> commands;
  auto add = [&](const std::string& name, const std::string& desc, std::vector<void (*)(Command&)> flags,
                 std::function<void(xlink::Runner&)> action) -> Command& {
    auto cmd = std::make_unique<Command>();
    cmd->app = app.add_subcommand(name, desc);
    common_flags(*cmd);
    for (auto f : flags) f(*cmd);
    cmd->action = std::move(action);
    commands.push_back(std::move(cmd));
    return *commands.back();
  };

  add("synth", "Generate a synthetic corpus with ground truth", {synth_flags}, [](auto& r) { r.synth(); });
  add("profiles", "Build user profiles and cache them", {profile_flags}, [](auto& r) { r.profiles(); });
  add("lift", "Rank URLs by lift over matching vs random pairs", {lift_flags}, [](auto& r) { r.lift(); });
  add("sample", "Iterative negative sampling of training pairs", {sample_flags, lr_flags},
      [](auto& r) { r.sample(); });
  add("extract", "Extract pair features for the sampled pairs", {}, [](auto& r) { r.extract(); });
  add("train-lr", "Train the logistic regression filter", {lr_flags}, [](auto& r) { r.train_lr(); });
  add("train-gbdt", "Train the boosted tree scorer", {gbdt_flags}, [](auto& r) { r.train_gbdt(); });
  add("filter", "Block test users and keep the LR top candidates", {filter_flags}, [](auto& r) { r.filter(); });
  add("score", "Score candidate pairs with the boosted trees", {}, [](auto& r) { r.score(); });
  add("submit", "Select the submitted pair set", {submit_flags}, [](auto& r) { r.submit(); });

  std::string pred, scores;
  auto& eval = add("eval", "Compare a submission with the truth and print metrics", {}, [&](auto& r) {
    std::fputs(r.eval(pred, scores).c_str(), stdout);
  });
  eval.app->add_option("--pred", pred, "Predicted pairs (default: <workdir>/submission.tsv)");
  eval.app->add_option("--scores", scores, "Scored pairs for AUC (default: <workdir>/scores.tsv when present)");
  bind_path(eval, "--truth", &RunConfig::truth, "Truth pairs (default: <corpus>/test_truth.tsv)");

  add("run-all", "Run every stage in order",
      {synth_flags, profile_flags, lift_flags, sample_flags, lr_flags, gbdt_flags, filter_flags, submit_flags},
      [](auto& r) { r.run_all(); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    for (auto& cmd : commands) {
      if (!cmd->app->parsed()) continue;
      RunConfig config;
      if (!cmd->config_file.empty()) config = xlink::run_config_from_json(xlink::read_file(cmd->config_file));
      for (const auto& b : cmd->bindings)
        if (b.option->count() > 0) b.apply(config);
      xlink::Runner runner(config, cmd->threads);
      cmd->action(runner);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "xlink: error: %s\n", e.what());
    return 1;
  }
  return 0;
}
