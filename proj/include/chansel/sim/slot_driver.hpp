#pragma once

#include <functional>
#include <span>
#include <vector>

#include "chansel/dqn/policy.hpp"
#include "chansel/dqn/replay_buffer.hpp"
#include "chansel/env/environment.hpp"
#include "chansel/random.hpp"
#include "chansel/sim/agent.hpp"

namespace chansel::sim {

// Plays one synchronized slot for all agents: every agent picks a channel,
// the transmissions are resolved together, and each agent gets back its
// (s, a, r, s') transition. Implementations must draw each agent's action
// from that agent's policy_rng only.
class SlotDriver {
 public:
  virtual ~SlotDriver() = default;
  virtual std::vector<dqn::Transition> play_slot(std::span<AgentState> agents, double epsilon) = 0;
};

struct TraceRow {
  std::int64_t slot = 0;
  int agent = 0;
  env::AgentOutcome outcome;
};

// In-process radio: resolve_slot on a dedicated environment stream.
class SimulatedSlots final : public SlotDriver {
 public:
  SimulatedSlots(env::ChannelPlan plan, env::LinkModel link, Rng rng)
      : plan_(std::move(plan)), link_(link), rng_(rng) {}

  void set_trace(std::function<void(const TraceRow&)> sink) { trace_ = std::move(sink); }

  std::vector<dqn::Transition> play_slot(std::span<AgentState> agents, double epsilon) override {
    std::vector<int> choices;
    choices.reserve(agents.size());
    for (auto& a : agents) choices.push_back(dqn::select_action(a.net, a.state, epsilon, a.policy_rng));

    const auto outcome = env::resolve_slot(plan_, link_, choices, rng_);
    std::vector<dqn::Transition> out;
    out.reserve(agents.size());
    for (std::size_t k = 0; k < agents.size(); ++k) {
      const auto fb = env::feedback(outcome, k);
      out.push_back({agents[k].state, choices[k], fb.reward, fb.next_state});
      if (trace_) trace_({slot_, static_cast<int>(k), outcome[k]});
    }
    ++slot_;
    return out;
  }

 private:
  env::ChannelPlan plan_;
  env::LinkModel link_;
  Rng rng_;
  std::int64_t slot_ = 0;
  std::function<void(const TraceRow&)> trace_;
};

inline SimulatedSlots make_training_slots(const SimConfig& config) {
  return {config.plan, config.link, make_rng(config.seed, Stream::kTrainEnv)};
}

// Testing and the untrained baseline share this stream so they face the same
// link-loss realizations.
inline SimulatedSlots make_eval_slots(const SimConfig& config) {
  return {config.plan, config.link, make_rng(config.seed, Stream::kEvalEnv)};
}

}  // namespace chansel::sim
