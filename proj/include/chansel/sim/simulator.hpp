#pragma once

#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

#include "chansel/dqn/learner.hpp"
#include "chansel/dqn/policy.hpp"
#include "chansel/error.hpp"
#include "chansel/sim/agent.hpp"
#include "chansel/sim/metrics.hpp"
#include "chansel/sim/slot_driver.hpp"

namespace chansel::sim {

inline constexpr double kDivergenceLoss = 1e6;

// Optional observation points inside the training loop.
struct TrainingHooks {
  std::function<void(const AgentState&, const dqn::Transition&)> on_transition;
  std::function<void(const AgentState&, double loss)> on_update;
  std::function<void(const AgentState&)> on_sync;
  std::function<void(const AgentState&)> on_step_end;
};

struct TrainingResult {
  std::vector<AgentState> agents;
  std::vector<EpisodeMetrics> metrics;
};

namespace detail {

inline EpisodeMetrics summarize(int episode, double epsilon, const std::vector<int>& successes,
                                int steps) {
  EpisodeMetrics m;
  m.episode = episode;
  m.epsilon = epsilon;
  m.successes = successes;
  double sum = 0.0;
  for (int s : successes) {
    const double fsr = static_cast<double>(s) / static_cast<double>(steps);
    m.fsr.push_back(fsr);
    sum += fsr;
  }
  m.mean_fsr = sum / static_cast<double>(successes.size());
  return m;
}

inline void check_loss(const AgentState& agent, int episode, double loss) {
  if (!std::isfinite(loss) || loss > kDivergenceLoss || !dqn::all_finite(agent.net.theta())) {
    std::ostringstream msg;
    msg << "training diverged: agent " << agent.id << ", episode " << episode << ", step "
        << agent.step << ", loss " << loss;
    throw TrainingDiverged(msg.str());
  }
}

}  // namespace detail

// Runs N episodes of T synchronized slots. Per slot and agent: store the
// transition, sample a mini-batch, take one SGD step once the buffer holds a
// full batch, and copy theta into theta_target every sync_period environment
// steps. Epsilon follows the linear schedule per episode.
inline TrainingResult run_training(const SimConfig& config, SlotDriver& slots,
                                   const TrainingHooks& hooks = {}) {
  config.validate();
  const auto& hp = config.hp;
  const dqn::EpsilonSchedule schedule(hp.episodes);

  TrainingResult result;
  result.agents = make_agents(config);
  result.metrics.reserve(static_cast<std::size_t>(hp.episodes));
  auto& agents = result.agents;

  for (int n = 1; n <= hp.episodes; ++n) {
    const double epsilon = schedule.at(n);
    std::vector<int> successes(agents.size(), 0);
    for (auto& a : agents) {
      a.step = 0;
      if (config.reset_state_per_episode) a.state = 0;
      if (config.reset_buffer_per_episode) a.buffer.clear();
    }

    for (int t = 0; t < hp.steps_per_episode; ++t) {
      const auto transitions = slots.play_slot(agents, epsilon);
      for (std::size_t k = 0; k < agents.size(); ++k) {
        AgentState& a = agents[k];
        const dqn::Transition& tr = transitions[k];
        a.buffer.push(tr);
        if (hooks.on_transition) hooks.on_transition(a, tr);
        a.state = tr.next_state;
        successes[k] += tr.reward;

        if (auto batch = a.buffer.sample(hp.batch_size, a.replay_rng)) {
          const double loss = dqn::train_step(a.net, *batch, hp);
          detail::check_loss(a, n, loss);
          if (hooks.on_update) hooks.on_update(a, loss);
        }

        ++a.step;
        ++a.total_steps;
        if (a.total_steps % hp.sync_period == 0) {
          a.net.sync_target();
          if (hooks.on_sync) hooks.on_sync(a);
        }
        if (hooks.on_step_end) hooks.on_step_end(a);
      }
    }
    result.metrics.push_back(detail::summarize(n, epsilon, successes, hp.steps_per_episode));
  }
  return result;
}

inline TrainingResult run_training(const SimConfig& config, const TrainingHooks& hooks = {}) {
  auto slots = make_training_slots(config);
  return run_training(config, slots, hooks);
}

// Fixed-epsilon rollout: no buffer pushes, no weight updates.
inline std::vector<EpisodeMetrics> run_rollout(std::vector<AgentState>& agents, const SimConfig& config,
                                               int episodes, double epsilon, SlotDriver& slots) {
  if (episodes < 1) throw ConfigError("test_episodes", "must be at least 1");
  std::vector<EpisodeMetrics> metrics;
  metrics.reserve(static_cast<std::size_t>(episodes));
  for (int n = 1; n <= episodes; ++n) {
    std::vector<int> successes(agents.size(), 0);
    for (auto& a : agents) {
      a.step = 0;
      if (config.reset_state_per_episode) a.state = 0;
    }
    for (int t = 0; t < config.hp.steps_per_episode; ++t) {
      const auto transitions = slots.play_slot(agents, epsilon);
      for (std::size_t k = 0; k < agents.size(); ++k) {
        agents[k].state = transitions[k].next_state;
        successes[k] += transitions[k].reward;
        ++agents[k].step;
      }
    }
    metrics.push_back(detail::summarize(n, epsilon, successes, config.hp.steps_per_episode));
  }
  return metrics;
}

// Greedy evaluation of (trained) agents.
inline std::vector<EpisodeMetrics> run_testing(std::vector<AgentState>& agents, const SimConfig& config,
                                               int episodes, SlotDriver& slots) {
  return run_rollout(agents, config, episodes, 0.0, slots);
}

inline std::vector<EpisodeMetrics> run_testing(std::vector<AgentState>& agents, const SimConfig& config,
                                               int episodes) {
  auto slots = make_eval_slots(config);
  return run_testing(agents, config, episodes, slots);
}

// Epsilon-greedy agents with freshly initialized, never-trained networks.
inline std::vector<EpisodeMetrics> run_baseline_untrained(const SimConfig& config, int episodes,
                                                          double epsilon, SlotDriver& slots) {
  config.validate();
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("baseline_epsilon", "must lie in [0, 1]");
  auto agents = make_agents(config, Stream::kEvalPolicy);
  return run_rollout(agents, config, episodes, epsilon, slots);
}

inline std::vector<EpisodeMetrics> run_baseline_untrained(const SimConfig& config, int episodes,
                                                          double epsilon = 1.0) {
  auto slots = make_eval_slots(config);
  return run_baseline_untrained(config, episodes, epsilon, slots);
}

}  // namespace chansel::sim
