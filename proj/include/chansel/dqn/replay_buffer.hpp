#pragma once

#include <algorithm>
#include <cstddef>
#include <deque>
#include <optional>
#include <stdexcept>
#include <vector>

#include "chansel/random.hpp"

namespace chansel::dqn {

// One (s, a, r, s') experience. State and reward are both the ACK bit of the
// transmission, so reward == next_state always holds.
struct Transition {
  int state = 0;
  int action = 0;
  int reward = 0;
  int next_state = 0;

  bool operator==(const Transition&) const = default;
};

inline bool is_binary(int v) { return v == 0 || v == 1; }

inline void check_transition(const Transition& t) {
  if (!is_binary(t.state) || !is_binary(t.next_state) || !is_binary(t.reward))
    throw std::invalid_argument("transition state/reward must be 0 or 1");
  if (t.reward != t.next_state) throw std::invalid_argument("transition reward != next_state");
  if (t.action < 0) throw std::invalid_argument("transition action must be non-negative");
}

// Bounded FIFO of transitions with uniform sampling without replacement.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 10000) : capacity_(capacity) {
    if (capacity_ == 0) throw std::invalid_argument("replay buffer capacity must be positive");
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const Transition& operator[](std::size_t i) const { return items_[i]; }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  void push(const Transition& t) {
    check_transition(t);
    if (items_.size() == capacity_) items_.pop_front();
    items_.push_back(t);
  }

  void clear() { items_.clear(); }

  // Returns std::nullopt ("not ready") while fewer than batch_size transitions
  // are stored. Otherwise batch_size distinct positions, uniformly chosen, in
  // draw order.
  std::optional<std::vector<Transition>> sample(std::size_t batch_size, Rng& rng) const {
    if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
    if (items_.size() < batch_size) return std::nullopt;
    std::vector<std::size_t> picked;
    picked.reserve(batch_size);
    std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
    while (picked.size() < batch_size) {
      const std::size_t i = pick(rng);
      if (std::find(picked.begin(), picked.end(), i) == picked.end()) picked.push_back(i);
    }
    std::vector<Transition> batch;
    batch.reserve(batch_size);
    for (std::size_t i : picked) batch.push_back(items_[i]);
    return batch;
  }

 private:
  std::size_t capacity_;
  std::deque<Transition> items_;
};

inline std::optional<std::vector<Transition>> sample_minibatch(const ReplayBuffer& buffer,
                                                               std::size_t batch_size, Rng& rng) {
  return buffer.sample(batch_size, rng);
}

}  // namespace chansel::dqn
