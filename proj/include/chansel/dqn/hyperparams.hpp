#pragma once

#include <cmath>
#include <cstddef>

#include "chansel/error.hpp"

namespace chansel::dqn {

struct Hyperparams {
  double learning_rate = 0.01;
  double gamma = 0.6;
  int episodes = 500;
  int steps_per_episode = 20;
  std::size_t batch_size = 16;
  int sync_period = 10;
  std::size_t buffer_capacity = 10000;
  std::size_t hidden_units = 16;

  void validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
      throw ConfigError("learning_rate", "must be a positive finite number");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma", "must lie in [0, 1]");
    // The exploration schedule divides by episodes - 1.
    if (episodes < 2) throw ConfigError("episodes", "must be at least 2");
    if (steps_per_episode < 1) throw ConfigError("steps_per_episode", "must be at least 1");
    if (batch_size < 1) throw ConfigError("batch_size", "must be at least 1");
    if (sync_period < 1) throw ConfigError("sync_period", "must be at least 1");
    if (buffer_capacity < 1) throw ConfigError("buffer_capacity", "must be at least 1");
    if (batch_size > buffer_capacity)
      throw ConfigError("batch_size", "must not exceed buffer_capacity");
    if (hidden_units < 1) throw ConfigError("hidden_units", "must be at least 1");
  }
};

}  // namespace chansel::dqn
