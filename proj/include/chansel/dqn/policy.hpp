#pragma once

#include <algorithm>
#include <stdexcept>

#include "chansel/dqn/qnetwork.hpp"
#include "chansel/random.hpp"

namespace chansel::dqn {

// Linear exploration decay: epsilon(n) = 1 - (n-1)/(N-1) for episodes 1..N.
class EpsilonSchedule {
 public:
  explicit EpsilonSchedule(int total_episodes) : total_(total_episodes) {
    if (total_ < 2) throw std::invalid_argument("epsilon schedule needs at least 2 episodes");
  }

  int total_episodes() const { return total_; }

  double at(int episode) const {
    if (episode < 1 || episode > total_) throw std::out_of_range("episode outside [1, N]");
    const double eps = 1.0 - static_cast<double>(episode - 1) / static_cast<double>(total_ - 1);
    return std::clamp(eps, 0.0, 1.0);
  }

 private:
  int total_;
};

inline double epsilon_at(const EpsilonSchedule& schedule, int episode) {
  return schedule.at(episode);
}

// Epsilon-greedy over the main network. Always consumes one coin draw so the
// stream position does not depend on epsilon; a second draw picks the random
// channel when exploring.
inline int select_action(const QNetwork& net, int state, double epsilon, Rng& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon outside [0, 1]");
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < epsilon) {
    const int n = static_cast<int>(net.architecture().output_dim);
    return std::uniform_int_distribution<int>(0, n - 1)(rng);
  }
  const auto q = net.forward(state, Role::kMain);
  return argmax(q);
}

}  // namespace chansel::dqn
