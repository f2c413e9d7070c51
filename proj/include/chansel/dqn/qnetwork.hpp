#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "chansel/random.hpp"

namespace chansel::dqn {

// Shape of the Q-function: one-hot state in, one hidden ReLU layer, one linear
// Q-value per channel out.
struct Architecture {
  std::size_t input_dim = 2;
  std::size_t hidden_dim = 16;
  std::size_t output_dim = 3;

  bool operator==(const Architecture&) const = default;
};

// Fully connected layer, weights stored row-major as rows x cols
// (rows = outputs, cols = inputs).
struct DenseLayer {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  DenseLayer() = default;
  DenseLayer(std::size_t out, std::size_t in)
      : rows(out), cols(in), weights(out * in, 0.0), bias(out, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return weights[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return weights[r * cols + c]; }

  bool operator==(const DenseLayer&) const = default;
};

// Ordered layer list; every layer but the last is followed by a ReLU.
using Parameters = std::vector<DenseLayer>;

enum class Role { kMain, kTarget };

inline Parameters zero_parameters(const Architecture& arch) {
  return {DenseLayer(arch.hidden_dim, arch.input_dim), DenseLayer(arch.output_dim, arch.hidden_dim)};
}

inline bool same_shape(const Parameters& a, const Parameters& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].rows != b[i].rows || a[i].cols != b[i].cols) return false;
  }
  return true;
}

inline bool all_finite(const Parameters& theta) {
  for (const auto& layer : theta) {
    for (double w : layer.weights)
      if (!std::isfinite(w)) return false;
    for (double b : layer.bias)
      if (!std::isfinite(b)) return false;
  }
  return true;
}

inline std::vector<double> one_hot(int state, std::size_t dim) {
  if (state < 0 || static_cast<std::size_t>(state) >= dim)
    throw std::out_of_range("state outside one-hot range");
  std::vector<double> x(dim, 0.0);
  x[static_cast<std::size_t>(state)] = 1.0;
  return x;
}

inline std::vector<double> evaluate(const Parameters& theta, std::span<const double> input) {
  std::vector<double> a(input.begin(), input.end());
  for (std::size_t l = 0; l < theta.size(); ++l) {
    const DenseLayer& layer = theta[l];
    std::vector<double> z(layer.bias);
    for (std::size_t r = 0; r < layer.rows; ++r) {
      for (std::size_t c = 0; c < layer.cols; ++c) z[r] += layer.at(r, c) * a[c];
    }
    if (l + 1 < theta.size()) {
      for (double& v : z) v = std::max(v, 0.0);
    }
    a = std::move(z);
  }
  return a;
}

// First index of the maximum; ties resolve to the lowest channel.
inline int argmax(std::span<const double> values) {
  return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

class QNetwork {
 public:
  QNetwork() = default;

  QNetwork(Architecture arch, Parameters theta, std::uint64_t seed = 0)
      : arch_(arch), theta_(std::move(theta)), target_(theta_), seed_(seed) {
    if (!same_shape(theta_, zero_parameters(arch_)))
      throw std::invalid_argument("parameters do not match architecture");
  }

  const Architecture& architecture() const { return arch_; }
  std::uint64_t seed() const { return seed_; }

  const Parameters& theta() const { return theta_; }
  Parameters& theta() { return theta_; }
  const Parameters& theta_target() const { return target_; }

  const Parameters& params(Role role) const { return role == Role::kMain ? theta_ : target_; }

  void set_target(Parameters target) {
    if (!same_shape(target, theta_)) throw std::invalid_argument("target shape mismatch");
    target_ = std::move(target);
  }

  void sync_target() { target_ = theta_; }

  std::vector<double> forward(int state, Role role = Role::kMain) const {
    const auto x = one_hot(state, arch_.input_dim);
    return evaluate(params(role), x);
  }

 private:
  Architecture arch_;
  Parameters theta_;
  Parameters target_;
  std::uint64_t seed_ = 0;
};

// Weights ~ U[-1/sqrt(fan_in), 1/sqrt(fan_in)], zero biases, target = main.
inline QNetwork init_network(std::uint64_t seed, const Architecture& arch) {
  Rng rng{seed};
  Parameters theta = zero_parameters(arch);
  for (auto& layer : theta) {
    const double k = 1.0 / std::sqrt(static_cast<double>(layer.cols));
    std::uniform_real_distribution<double> dist(-k, k);
    for (double& w : layer.weights) w = dist(rng);
  }
  return QNetwork(arch, std::move(theta), seed);
}

inline std::vector<double> forward(const QNetwork& net, int state, Role role = Role::kMain) {
  return net.forward(state, role);
}

inline void sync_target(QNetwork& net) { net.sync_target(); }

}  // namespace chansel::dqn
