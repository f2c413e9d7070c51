#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "chansel/error.hpp"
#include "chansel/random.hpp"

namespace chansel::env {

struct Channel {
  int index = 0;
  double frequency_mhz = 0.0;
  double bandwidth_khz = 0.0;

  bool operator==(const Channel&) const = default;
};

// Selectable channels plus the subset the gateway can demodulate. Channel
// indices are the action set of every agent and must run 0..n-1 in order.
struct ChannelPlan {
  std::vector<Channel> channels;
  std::vector<int> gateway_receivable;

  // Three 125 kHz channels; the gateway listens on 922.8 and 923.2 MHz only.
  static ChannelPlan lora_default() {
    return {{{0, 922.4, 125.0}, {1, 922.8, 125.0}, {2, 923.2, 125.0}}, {1, 2}};
  }

  std::size_t size() const { return channels.size(); }

  bool is_receivable(int channel) const {
    return std::find(gateway_receivable.begin(), gateway_receivable.end(), channel) !=
           gateway_receivable.end();
  }

  void validate() const {
    if (channels.empty()) throw ConfigError("channels", "at least one channel is required");
    for (std::size_t i = 0; i < channels.size(); ++i) {
      if (channels[i].index != static_cast<int>(i))
        throw ConfigError("channels", "channel indices must be 0..n-1 in order");
      if (!(channels[i].frequency_mhz > 0.0) || !(channels[i].bandwidth_khz > 0.0))
        throw ConfigError("channels", "frequency and bandwidth must be positive");
    }
    if (gateway_receivable.empty())
      throw ConfigError("gateway_receivable", "at least one receivable channel is required");
    auto sorted = gateway_receivable;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ConfigError("gateway_receivable", "duplicate channel index");
    for (int c : sorted) {
      if (c < 0 || c >= static_cast<int>(channels.size()))
        throw ConfigError("gateway_receivable", "index " + std::to_string(c) + " is not a channel");
    }
  }

  bool operator==(const ChannelPlan&) const = default;
};

struct LinkModel {
  double loss_probability = 0.0;
  // When false the downlink ACK is lost independently with the same probability.
  bool ack_always_delivered = true;

  void validate() const {
    if (!(loss_probability >= 0.0 && loss_probability <= 1.0))
      throw ConfigError("loss_probability", "must lie in [0, 1]");
  }

  bool operator==(const LinkModel&) const = default;
};

enum class FailureCause { kNone, kNotReceivable, kCollision, kLinkLoss };

inline std::string_view to_string(FailureCause cause) {
  switch (cause) {
    case FailureCause::kNone: return "NONE";
    case FailureCause::kNotReceivable: return "NOT_RECEIVABLE";
    case FailureCause::kCollision: return "COLLISION";
    case FailureCause::kLinkLoss: return "LINK_LOSS";
  }
  return "UNKNOWN";
}

struct AgentOutcome {
  int channel = 0;
  bool success = false;
  FailureCause cause = FailureCause::kNone;

  bool operator==(const AgentOutcome&) const = default;
};

using SlotOutcome = std::vector<AgentOutcome>;

// Resolves one synchronized slot. Per agent, in order: a channel the gateway
// cannot hear fails NOT_RECEIVABLE; a channel shared with another agent fails
// COLLISION (no capture); otherwise the frame survives the link with
// probability 1 - loss_probability. Link draws happen in agent order and only
// for agents that reach that stage.
inline SlotOutcome resolve_slot(const ChannelPlan& plan, const LinkModel& link,
                                std::span<const int> choices, Rng& rng) {
  const int n_channels = static_cast<int>(plan.size());
  std::vector<int> load(plan.size(), 0);
  for (int c : choices) {
    if (c < 0 || c >= n_channels)
      throw std::out_of_range("channel choice " + std::to_string(c) + " outside channel plan");
    ++load[static_cast<std::size_t>(c)];
  }

  std::bernoulli_distribution lost(link.loss_probability);
  SlotOutcome outcome;
  outcome.reserve(choices.size());
  for (int c : choices) {
    AgentOutcome o{c, false, FailureCause::kNone};
    if (!plan.is_receivable(c)) {
      o.cause = FailureCause::kNotReceivable;
    } else if (load[static_cast<std::size_t>(c)] > 1) {
      o.cause = FailureCause::kCollision;
    } else if (lost(rng) || (!link.ack_always_delivered && lost(rng))) {
      o.cause = FailureCause::kLinkLoss;
    } else {
      o.success = true;
    }
    outcome.push_back(o);
  }
  return outcome;
}

struct Feedback {
  int next_state = 0;
  int reward = 0;
};

// The agent only sees ACK / no ACK; the failure cause never leaks through.
inline Feedback feedback(const SlotOutcome& outcome, std::size_t agent) {
  const int ack = outcome.at(agent).success ? 1 : 0;
  return {ack, ack};
}

// Exact expected FSR (mean over agents) for fixed per-agent action
// distributions, by enumerating every joint action.
inline double expected_fsr_oracle(const ChannelPlan& plan, const LinkModel& link,
                                  std::span<const std::vector<double>> policies) {
  const std::size_t n_agents = policies.size();
  const std::size_t n_channels = plan.size();
  if (n_agents == 0) throw std::invalid_argument("oracle needs at least one agent");
  for (const auto& p : policies) {
    if (p.size() != n_channels) throw std::invalid_argument("policy size != channel count");
    double sum = 0.0;
    for (double v : p) {
      if (v < 0.0) throw std::invalid_argument("negative action probability");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("policy does not sum to 1");
  }

  double delivery = 1.0 - link.loss_probability;
  if (!link.ack_always_delivered) delivery *= 1.0 - link.loss_probability;

  std::vector<std::size_t> joint(n_agents, 0);
  double total = 0.0;
  while (true) {
    double prob = 1.0;
    for (std::size_t k = 0; k < n_agents; ++k) prob *= policies[k][joint[k]];
    if (prob > 0.0) {
      std::size_t successes = 0;
      for (std::size_t k = 0; k < n_agents; ++k) {
        const int c = static_cast<int>(joint[k]);
        if (!plan.is_receivable(c)) continue;
        if (std::count(joint.begin(), joint.end(), joint[k]) > 1) continue;
        ++successes;
      }
      total += prob * static_cast<double>(successes);
    }
    std::size_t k = 0;
    while (k < n_agents && ++joint[k] == n_channels) joint[k++] = 0;
    if (k == n_agents) break;
  }
  return total * delivery / static_cast<double>(n_agents);
}

}  // namespace chansel::env
