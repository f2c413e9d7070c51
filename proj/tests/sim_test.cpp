#include <sstream>
#include <vector>

#include "chansel/dqn/policy.hpp"
#include "chansel/env/environment.hpp"
#include "chansel/sim/metrics.hpp"
#include "chansel/sim/simulator.hpp"
#include "gtest/gtest.h"
#include "test_util.hpp"

namespace chansel::sim {
namespace {

SimConfig small_config(int agents, int episodes, int steps, std::uint64_t seed = 1) {
  SimConfig c;
  c.num_agents = agents;
  c.hp.episodes = episodes;
  c.hp.steps_per_episode = steps;
  c.seed = seed;
  return c;
}

// Agents whose greedy action is `channel` in both states.
std::vector<AgentState> fixed_greedy_agents(const SimConfig& config, const std::vector<int>& channels) {
  auto agents = make_agents(config);
  for (std::size_t k = 0; k < channels.size(); ++k) {
    std::vector<double> q(3, 0.0);
    q[static_cast<std::size_t>(channels[k])] = 1.0;
    agents[k].net = chansel::testing::constant_network(q, config.hp.hidden_units);
  }
  return agents;
}

TEST(RunTraining, LoopAccountingAndEpsilonTrace) {
  const auto config = small_config(1, 2, 3);
  int transitions = 0;
  TrainingHooks hooks;
  hooks.on_transition = [&](const AgentState&, const dqn::Transition&) { ++transitions; };
  const auto result = run_training(config, hooks);
  EXPECT_EQ(transitions, 6);
  ASSERT_EQ(result.metrics.size(), 2u);
  EXPECT_EQ(result.metrics[0].epsilon, 1.0);
  EXPECT_EQ(result.metrics[1].epsilon, 0.0);
  EXPECT_EQ(result.agents[0].buffer.size(), 6u);
  EXPECT_EQ(result.agents[0].total_steps, 6);
}

TEST(RunTraining, EpsilonTraceFollowsSchedule) {
  const auto config = small_config(2, 40, 5);
  const auto result = run_training(config);
  const dqn::EpsilonSchedule schedule(40);
  ASSERT_EQ(result.metrics.size(), 40u);
  for (const auto& m : result.metrics) EXPECT_EQ(m.epsilon, schedule.at(m.episode));
}

TEST(RunTraining, SameSeedIsBitIdentical) {
  const auto config = small_config(2, 30, 20, 9);
  const auto a = run_training(config);
  const auto b = run_training(config);
  EXPECT_EQ(a.metrics, b.metrics);
  for (std::size_t k = 0; k < a.agents.size(); ++k) EXPECT_EQ(a.agents[k].net.theta(), b.agents[k].net.theta());
  const auto c = run_training(small_config(2, 30, 20, 10));
  EXPECT_NE(a.agents[0].net.theta(), c.agents[0].net.theta());
}

TEST(RunTraining, AddingAgentsKeepsExistingInitialization) {
  const auto two = make_agents(small_config(2, 2, 1, 4));
  const auto three = make_agents(small_config(3, 2, 1, 4));
  EXPECT_EQ(two[0].net.theta(), three[0].net.theta());
  EXPECT_EQ(two[1].net.theta(), three[1].net.theta());
}

TEST(RunTraining, MetricsAreConsistent) {
  const auto config = small_config(2, 20, 20);
  for (const auto& m : run_training(config).metrics) {
    double sum = 0.0;
    for (std::size_t k = 0; k < m.fsr.size(); ++k) {
      EXPECT_DOUBLE_EQ(m.fsr[k], m.successes[k] / 20.0);
      EXPECT_GE(m.fsr[k], 0.0);
      EXPECT_LE(m.fsr[k], 1.0);
      sum += m.fsr[k];
    }
    EXPECT_DOUBLE_EQ(m.mean_fsr, sum / 2.0);
  }
}

TEST(RunTraining, TargetConstantBetweenSyncsAndEqualAfter) {
  auto config = small_config(2, 10, 20);
  config.hp.sync_period = 7;
  std::vector<dqn::Parameters> last_target(2);
  std::vector<std::int64_t> syncs(2, 0);
  TrainingHooks hooks;
  hooks.on_sync = [&](const AgentState& a) {
    EXPECT_EQ(a.net.theta_target(), a.net.theta());
    EXPECT_EQ(a.total_steps % 7, 0);
    ++syncs[static_cast<std::size_t>(a.id)];
  };
  hooks.on_step_end = [&](const AgentState& a) {
    auto& prev = last_target[static_cast<std::size_t>(a.id)];
    if (a.total_steps % 7 != 0 && !prev.empty()) {
      EXPECT_EQ(a.net.theta_target(), prev);
    }
    prev = a.net.theta_target();
  };
  run_training(config, hooks);
  EXPECT_EQ(syncs[0], 200 / 7);
  EXPECT_EQ(syncs[1], 200 / 7);
}

TEST(RunTraining, StoredTransitionsSatisfyRewardEqualsNextState) {
  auto config = small_config(3, 10, 20);
  config.link.loss_probability = 0.3;
  TrainingHooks hooks;
  int prev_state[3] = {0, 0, 0};
  hooks.on_transition = [&](const AgentState& a, const dqn::Transition& t) {
    EXPECT_EQ(t.reward, t.next_state);
    EXPECT_EQ(t.state, prev_state[a.id]);  // state carries over between slots and episodes
    prev_state[a.id] = t.next_state;
  };
  run_training(config, hooks);
}

TEST(RunTraining, ResetFlags) {
  auto config = small_config(2, 6, 20);
  config.reset_state_per_episode = true;
  config.reset_buffer_per_episode = true;
  TrainingHooks hooks;
  hooks.on_transition = [&](const AgentState& a, const dqn::Transition& t) {
    if (a.step == 0) {
      EXPECT_EQ(t.state, 0);
    }
    EXPECT_LE(a.buffer.size(), 20u);
  };
  const auto result = run_training(config, hooks);
  EXPECT_EQ(result.agents[0].buffer.size(), 20u);
}

TEST(RunTraining, DivergenceIsReported) {
  auto config = small_config(2, 5, 20);
  config.hp.learning_rate = 1e9;
  EXPECT_THROW(run_training(config), TrainingDiverged);
}

TEST(RunTraining, RejectsInvalidConfig) {
  auto config = small_config(2, 5, 20);
  config.hp.gamma = -0.1;
  EXPECT_THROW(run_training(config), ConfigError);
}

TEST(RunTesting, DistinctReceivableGreedyPairAlwaysSucceeds) {
  const auto config = small_config(2, 2, 20);
  auto agents = fixed_greedy_agents(config, {1, 2});
  for (const auto& m : run_testing(agents, config, 10)) {
    EXPECT_EQ(m.mean_fsr, 1.0);
    EXPECT_EQ(m.epsilon, 0.0);
  }
}

TEST(RunTesting, SharedGreedyChannelAlwaysFails) {
  const auto config = small_config(2, 2, 20);
  auto agents = fixed_greedy_agents(config, {1, 1});
  for (const auto& m : run_testing(agents, config, 10)) EXPECT_EQ(m.mean_fsr, 0.0);
}

TEST(RunTesting, DoesNotLearn) {
  const auto config = small_config(2, 2, 20);
  auto agents = make_agents(config);
  const auto before = agents[0].net.theta();
  run_testing(agents, config, 5);
  EXPECT_EQ(agents[0].net.theta(), before);
  EXPECT_EQ(agents[0].buffer.size(), 0u);
}

TEST(Baseline, UniformPairApproachesFourNinths) {
  const auto config = small_config(2, 2, 20, 3);
  const auto metrics = run_baseline_untrained(config, 5000, 1.0);
  EXPECT_NEAR(overall_mean(metrics), 4.0 / 9.0, 0.02);
}

TEST(Baseline, SingleUniformAgentApproachesTwoThirds) {
  const auto config = small_config(1, 2, 20, 3);
  const auto metrics = run_baseline_untrained(config, 5000, 1.0);
  EXPECT_NEAR(overall_mean(metrics), 2.0 / 3.0, 0.02);
}

TEST(Baseline, GreedyUntrainedMatchesDeterministicChainOracle) {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const auto config = small_config(2, 2, 20, seed);
    const auto metrics = run_baseline_untrained(config, 10, 0.0);

    // Independent replay: greedy action per (agent, state) from the same
    // fresh networks, pushed through the oracle slot by slot.
    const auto agents = make_agents(config, Stream::kEvalPolicy);
    std::vector<int> state(2, 0);
    double total = 0.0;
    for (int slot = 0; slot < 10 * 20; ++slot) {
      std::vector<std::vector<double>> policies(2, std::vector<double>(3, 0.0));
      std::vector<int> choice(2);
      for (std::size_t k = 0; k < 2; ++k) {
        choice[k] = dqn::argmax(agents[k].net.forward(state[k]));
        policies[k][static_cast<std::size_t>(choice[k])] = 1.0;
      }
      total += env::expected_fsr_oracle(config.plan, config.link, policies);
      for (std::size_t k = 0; k < 2; ++k) {
        const bool ok = config.plan.is_receivable(choice[k]) && choice[0] != choice[1];
        state[k] = ok ? 1 : 0;
      }
    }
    EXPECT_NEAR(overall_mean(metrics), total / 200.0, 1e-12) << "seed " << seed;
  }
}

TEST(Metrics, WindowsAndRollingMean) {
  std::vector<EpisodeMetrics> m(5);
  for (int i = 0; i < 5; ++i) m[static_cast<std::size_t>(i)].mean_fsr = i;
  EXPECT_DOUBLE_EQ(window_mean(m, 1, 3), 2.0);
  const auto r = rolling_mean(m, 2);
  EXPECT_EQ(r, (std::vector<double>{0.0, 0.5, 1.5, 2.5, 3.5}));
  EXPECT_THROW(window_mean(m, 3, 3), std::out_of_range);
}

TEST(Metrics, CsvSchema) {
  const auto result = run_training(small_config(2, 2, 3));
  std::ostringstream os;
  write_metrics_csv(os, result.metrics);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "episode,agent_id,successes,fsr,mean_fsr,epsilon,rolling_mean_fsr");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 4);
}

}  // namespace
}  // namespace chansel::sim
