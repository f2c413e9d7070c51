// Command-line front end: train | test | compare | sweep | hil-demo.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "chansel/app/commands.hpp"

namespace {

struct CommonFlags {
  std::optional<std::string> config_path;
  chansel::app::Overrides overrides;
};

void add_common(CLI::App* sub, CommonFlags& f) {
  auto& o = f.overrides;
  sub->add_option("--config", f.config_path, "JSON run configuration")->envname("CHANSEL_CONFIG");
  sub->add_option("--seed", o.seed, "master seed")->envname("CHANSEL_SEED");
  sub->add_option("--episodes", o.episodes, "training episodes N")->envname("CHANSEL_EPISODES");
  sub->add_option("--steps", o.steps, "transmissions per episode T")->envname("CHANSEL_STEPS");
  sub->add_option("--agents", o.agents, "number of end devices")->envname("CHANSEL_AGENTS");
  sub->add_option("--loss-prob", o.loss_prob, "per-transmission link loss probability")
      ->envname("CHANSEL_LOSS_PROB");
  sub->add_option("--baseline-epsilon", o.baseline_epsilon, "epsilon of the untrained baseline")
      ->envname("CHANSEL_BASELINE_EPSILON");
  sub->add_option("--test-episodes", o.test_episodes, "greedy test / baseline episodes")
      ->envname("CHANSEL_TEST_EPISODES");
  sub->add_option("--out", o.out, "output directory")->envname("CHANSEL_OUT");
  sub->add_flag("--reset-buffer-per-episode", o.reset_buffer_per_episode, "clear replay buffers every episode");
  sub->add_flag("--reset-state-per-episode", o.reset_state_per_episode, "reset agent state to 0 every episode");
  sub->add_flag("--trace", o.trace, "write per-slot trace.csv during training");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace chansel::app;

  CLI::App app{"Double-DQN channel selection for IoT end devices"};
  app.require_subcommand(1);

  CommonFlags train_f, test_f, compare_f, sweep_f, hil_f;
  auto* train = app.add_subcommand("train", "train agents; write metrics, summary and checkpoints");
  add_common(train, train_f);

  auto* test = app.add_subcommand("test", "greedy evaluation of saved checkpoints");
  add_common(test, test_f);
  std::vector<std::string> checkpoints;
  test->add_option("--checkpoints", checkpoints, "checkpoint files, one per agent (default <out>/agent_<k>.ckpt)");

  auto* compare = app.add_subcommand("compare", "train + test vs untrained epsilon-greedy baseline");
  add_common(compare, compare_f);

  auto* sweep = app.add_subcommand("sweep", "compare over several seeds");
  add_common(sweep, sweep_f);
  std::vector<std::uint64_t> seeds;
  int num_seeds = 5;
  sweep->add_option("--seeds", seeds, "explicit seed list")->delimiter(',');
  sweep->add_option("--num-seeds", num_seeds, "consecutive seeds starting at --seed (default 5)");

  auto* hil = app.add_subcommand("hil-demo", "train through mock devices over the framed protocol");
  add_common(hil, hil_f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  const auto run = [](const CommonFlags& f, auto&& command) {
    RunConfig config;
    try {
      config = resolve_config(f.config_path, f.overrides);
    } catch (const chansel::ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return static_cast<int>(kExitConfig);
    }
    return command(config);
  };

  if (*train) return run(train_f, [](const RunConfig& c) { return cmd_train(c, std::cout, std::cerr); });
  if (*test) return run(test_f, [&](const RunConfig& c) { return cmd_test(c, checkpoints, std::cout, std::cerr); });
  if (*compare) return run(compare_f, [](const RunConfig& c) { return cmd_compare(c, std::cout, std::cerr); });
  if (*sweep) {
    return run(sweep_f, [&](const RunConfig& c) {
      if (seeds.empty()) {
        if (num_seeds < 1) {
          std::cerr << "config error: field 'num_seeds': must be at least 1\n";
          return static_cast<int>(kExitConfig);
        }
        for (int i = 0; i < num_seeds; ++i) seeds.push_back(c.sim.seed + static_cast<std::uint64_t>(i));
      }
      return cmd_sweep(c, seeds, std::cout, std::cerr);
    });
  }
  if (*hil) return run(hil_f, [](const RunConfig& c) { return cmd_hil_demo(c, std::cout, std::cerr); });
  return kExitConfig;
}
