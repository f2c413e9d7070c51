#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "chansel/dqn/hyperparams.hpp"
#include "chansel/dqn/qnetwork.hpp"
#include "chansel/dqn/replay_buffer.hpp"
#include "chansel/env/environment.hpp"
#include "chansel/error.hpp"
#include "chansel/random.hpp"

namespace chansel::sim {

// Everything one run needs besides the output location.
struct SimConfig {
  dqn::Hyperparams hp;
  int num_agents = 2;
  env::ChannelPlan plan = env::ChannelPlan::lora_default();
  env::LinkModel link;
  std::uint64_t seed = 1;
  bool reset_buffer_per_episode = false;
  bool reset_state_per_episode = false;

  dqn::Architecture architecture() const { return {2, hp.hidden_units, plan.size()}; }

  void validate() const {
    hp.validate();
    plan.validate();
    link.validate();
    if (num_agents < 1 || num_agents > 255) throw ConfigError("num_agents", "must lie in [1, 255]");
  }
};

struct AgentState {
  int id = 0;
  dqn::QNetwork net;
  dqn::ReplayBuffer buffer;
  int state = 0;                 // last ACK bit, s
  int step = 0;                  // t within the current episode
  std::int64_t total_steps = 0;  // environment steps since birth
  Rng policy_rng;
  Rng replay_rng;
};

// Fresh agent with its network and streams derived from (seed, id).
inline AgentState make_agent(const SimConfig& config, int id, Stream policy = Stream::kPolicy) {
  const auto index = static_cast<std::uint64_t>(id);
  AgentState a{id,
               dqn::init_network(derive_seed(config.seed, Stream::kInit, index), config.architecture()),
               dqn::ReplayBuffer(config.hp.buffer_capacity),
               0,
               0,
               0,
               make_rng(config.seed, policy, index),
               make_rng(config.seed, Stream::kReplay, index)};
  return a;
}

inline std::vector<AgentState> make_agents(const SimConfig& config, Stream policy = Stream::kPolicy) {
  std::vector<AgentState> agents;
  agents.reserve(static_cast<std::size_t>(config.num_agents));
  for (int k = 0; k < config.num_agents; ++k) agents.push_back(make_agent(config, k, policy));
  return agents;
}

}  // namespace chansel::sim
