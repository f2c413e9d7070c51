#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <type_traits>
#include <string>

#include <nlohmann/json.hpp>

#include "chansel/error.hpp"
#include "chansel/sim/agent.hpp"

namespace chansel::app {

// Fully resolved run configuration: simulation settings plus output options.
struct RunConfig {
  sim::SimConfig sim;
  std::string out_dir = "out";
  double baseline_epsilon = 1.0;
  int test_episodes = 100;
  bool trace = false;

  void validate() const {
    sim.validate();
    if (!(baseline_epsilon >= 0.0 && baseline_epsilon <= 1.0))
      throw ConfigError("baseline_epsilon", "must lie in [0, 1]");
    if (test_episodes < 1) throw ConfigError("test_episodes", "must be at least 1");
    if (out_dir.empty()) throw ConfigError("out", "must not be empty");
  }
};

// Command-line values; each one set wins over the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> episodes;
  std::optional<int> steps;
  std::optional<int> agents;
  std::optional<double> loss_prob;
  std::optional<double> baseline_epsilon;
  std::optional<int> test_episodes;
  std::optional<std::string> out;
  bool reset_buffer_per_episode = false;
  bool reset_state_per_episode = false;
  bool trace = false;
};

namespace detail {

template <typename T>
T read_field(const nlohmann::json& j, const std::string& key) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!j.is_boolean()) throw ConfigError(key, "expected true or false");
    } else if constexpr (std::is_integral_v<T>) {
      if (!j.is_number_integer()) throw ConfigError(key, "expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (!j.is_number_unsigned() && j.get<std::int64_t>() < 0) throw ConfigError(key, "must not be negative");
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!j.is_number()) throw ConfigError(key, "expected a number");
    } else {
      if (!j.is_string()) throw ConfigError(key, "expected a string");
    }
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(key, "has the wrong type");
  }
}

}  // namespace detail

// Strict reader: unknown keys and mistyped values are errors naming the key.
inline RunConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("<root>", "config must be a JSON object");
  RunConfig c;
  auto& hp = c.sim.hp;
  using detail::read_field;
  for (const auto& [key, v] : j.items()) {
    if (key == "learning_rate") hp.learning_rate = read_field<double>(v, key);
    else if (key == "gamma") hp.gamma = read_field<double>(v, key);
    else if (key == "episodes") hp.episodes = read_field<int>(v, key);
    else if (key == "steps_per_episode") hp.steps_per_episode = read_field<int>(v, key);
    else if (key == "batch_size") hp.batch_size = read_field<std::size_t>(v, key);
    else if (key == "sync_period") hp.sync_period = read_field<int>(v, key);
    else if (key == "buffer_capacity") hp.buffer_capacity = read_field<std::size_t>(v, key);
    else if (key == "hidden_units") hp.hidden_units = read_field<std::size_t>(v, key);
    else if (key == "num_agents") c.sim.num_agents = read_field<int>(v, key);
    else if (key == "loss_probability") c.sim.link.loss_probability = read_field<double>(v, key);
    else if (key == "ack_always_delivered") c.sim.link.ack_always_delivered = read_field<bool>(v, key);
    else if (key == "seed") c.sim.seed = read_field<std::uint64_t>(v, key);
    else if (key == "reset_buffer_per_episode") c.sim.reset_buffer_per_episode = read_field<bool>(v, key);
    else if (key == "reset_state_per_episode") c.sim.reset_state_per_episode = read_field<bool>(v, key);
    else if (key == "out") c.out_dir = read_field<std::string>(v, key);
    else if (key == "baseline_epsilon") c.baseline_epsilon = read_field<double>(v, key);
    else if (key == "test_episodes") c.test_episodes = read_field<int>(v, key);
    else if (key == "trace") c.trace = read_field<bool>(v, key);
    else if (key == "channels") {
      if (!v.is_array()) throw ConfigError(key, "expected an array of channels");
      c.sim.plan.channels.clear();
      for (const auto& ch : v) {
        if (!ch.is_object()) throw ConfigError(key, "each channel must be an object");
        env::Channel channel;
        for (const auto& [ck, cv] : ch.items()) {
          const std::string name = "channels." + ck;
          if (ck == "index") channel.index = read_field<int>(cv, name);
          else if (ck == "frequency_mhz") channel.frequency_mhz = read_field<double>(cv, name);
          else if (ck == "bandwidth_khz") channel.bandwidth_khz = read_field<double>(cv, name);
          else throw ConfigError(name, "unknown setting");
        }
        c.sim.plan.channels.push_back(channel);
      }
    } else if (key == "gateway_receivable") {
      if (!v.is_array()) throw ConfigError(key, "expected an array of channel indices");
      c.sim.plan.gateway_receivable.clear();
      for (const auto& idx : v) c.sim.plan.gateway_receivable.push_back(read_field<int>(idx, key));
    } else {
      throw ConfigError(key, "unknown setting");
    }
  }
  return c;
}

inline nlohmann::json config_to_json(const RunConfig& c) {
  const auto& hp = c.sim.hp;
  auto channels = nlohmann::json::array();
  for (const auto& ch : c.sim.plan.channels)
    channels.push_back({{"index", ch.index}, {"frequency_mhz", ch.frequency_mhz}, {"bandwidth_khz", ch.bandwidth_khz}});
  return {{"learning_rate", hp.learning_rate},
          {"gamma", hp.gamma},
          {"episodes", hp.episodes},
          {"steps_per_episode", hp.steps_per_episode},
          {"batch_size", hp.batch_size},
          {"sync_period", hp.sync_period},
          {"buffer_capacity", hp.buffer_capacity},
          {"hidden_units", hp.hidden_units},
          {"num_agents", c.sim.num_agents},
          {"channels", channels},
          {"gateway_receivable", c.sim.plan.gateway_receivable},
          {"loss_probability", c.sim.link.loss_probability},
          {"ack_always_delivered", c.sim.link.ack_always_delivered},
          {"seed", c.sim.seed},
          {"reset_buffer_per_episode", c.sim.reset_buffer_per_episode},
          {"reset_state_per_episode", c.sim.reset_state_per_episode},
          {"out", c.out_dir},
          {"baseline_epsilon", c.baseline_epsilon},
          {"test_episodes", c.test_episodes},
          {"trace", c.trace}};
}

inline RunConfig load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config", "cannot open " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  return config_from_json(j);
}

inline void apply_overrides(RunConfig& c, const Overrides& o) {
  if (o.seed) c.sim.seed = *o.seed;
  if (o.episodes) c.sim.hp.episodes = *o.episodes;
  if (o.steps) c.sim.hp.steps_per_episode = *o.steps;
  if (o.agents) c.sim.num_agents = *o.agents;
  if (o.loss_prob) c.sim.link.loss_probability = *o.loss_prob;
  if (o.baseline_epsilon) c.baseline_epsilon = *o.baseline_epsilon;
  if (o.test_episodes) c.test_episodes = *o.test_episodes;
  if (o.out) c.out_dir = *o.out;
  if (o.reset_buffer_per_episode) c.sim.reset_buffer_per_episode = true;
  if (o.reset_state_per_episode) c.sim.reset_state_per_episode = true;
  if (o.trace) c.trace = true;
}

// Defaults, then the optional file, then command-line overrides; validated.
inline RunConfig resolve_config(const std::optional<std::string>& path, const Overrides& o) {
  RunConfig c = path ? load_config_file(*path) : RunConfig{};
  apply_overrides(c, o);
  c.validate();
  return c;
}

}  // namespace chansel::app
