#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "chansel/dqn/hyperparams.hpp"
#include "chansel/dqn/qnetwork.hpp"
#include "chansel/dqn/replay_buffer.hpp"

namespace chansel::dqn {

// Double-DQN bootstrap target: the main network picks the next action, the
// target network scores it.
//   Q*(s, a) = r + gamma * Q(s', argmax_a' Q(s', a'; theta); theta_target)
inline double double_dqn_target(const QNetwork& net, const Transition& t, double gamma) {
  const auto q_main = net.forward(t.next_state, Role::kMain);
  const auto q_target = net.forward(t.next_state, Role::kTarget);
  const int best = argmax(q_main);
  return static_cast<double>(t.reward) + gamma * q_target[static_cast<std::size_t>(best)];
}

inline std::vector<double> compute_targets(const QNetwork& net, std::span<const Transition> batch,
                                           double gamma) {
  std::vector<double> targets;
  targets.reserve(batch.size());
  for (const auto& t : batch) targets.push_back(double_dqn_target(net, t, gamma));
  return targets;
}

// Mean squared TD error over the batch with targets held fixed. Only the
// Q-value of the taken action enters the loss.
inline double batch_loss(const Parameters& theta, std::size_t input_dim,
                         std::span<const Transition> batch, std::span<const double> targets) {
  if (batch.empty() || batch.size() != targets.size())
    throw std::invalid_argument("batch and targets must be non-empty and equal length");
  double sum = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto q = evaluate(theta, one_hot(batch[i].state, input_dim));
    const double err = targets[i] - q.at(static_cast<std::size_t>(batch[i].action));
    sum += err * err;
  }
  return sum / static_cast<double>(batch.size());
}

struct LossGradient {
  double loss = 0.0;
  Parameters gradient;
};

// Analytic gradient of batch_loss by backpropagation.
inline LossGradient loss_gradient(const Parameters& theta, std::size_t input_dim,
                                  std::span<const Transition> batch,
                                  std::span<const double> targets) {
  if (batch.empty() || batch.size() != targets.size())
    throw std::invalid_argument("batch and targets must be non-empty and equal length");

  LossGradient out;
  out.gradient.reserve(theta.size());
  for (const auto& layer : theta) out.gradient.emplace_back(layer.rows, layer.cols);

  const double scale = 2.0 / static_cast<double>(batch.size());
  const std::size_t depth = theta.size();
  // activations[l] is the input to layer l; activations[depth] the output.
  std::vector<std::vector<double>> activations(depth + 1);

  for (std::size_t i = 0; i < batch.size(); ++i) {
    activations[0] = one_hot(batch[i].state, input_dim);
    for (std::size_t l = 0; l < depth; ++l) {
      const DenseLayer& layer = theta[l];
      std::vector<double> z(layer.bias);
      for (std::size_t r = 0; r < layer.rows; ++r)
        for (std::size_t c = 0; c < layer.cols; ++c) z[r] += layer.at(r, c) * activations[l][c];
      if (l + 1 < depth)
        for (double& v : z) v = std::max(v, 0.0);
      activations[l + 1] = std::move(z);
    }

    const auto action = static_cast<std::size_t>(batch[i].action);
    const std::vector<double>& q = activations[depth];
    if (action >= q.size()) throw std::out_of_range("transition action outside output range");
    const double err = targets[i] - q[action];
    out.loss += err * err;

    // dL/dz for the output layer: only the taken action contributes.
    std::vector<double> delta(q.size(), 0.0);
    delta[action] = -scale * err;

    for (std::size_t l = depth; l-- > 0;) {
      const DenseLayer& layer = theta[l];
      DenseLayer& grad = out.gradient[l];
      const std::vector<double>& input = activations[l];
      for (std::size_t r = 0; r < layer.rows; ++r) {
        if (delta[r] == 0.0) continue;
        grad.bias[r] += delta[r];
        for (std::size_t c = 0; c < layer.cols; ++c) grad.at(r, c) += delta[r] * input[c];
      }
      if (l == 0) break;
      std::vector<double> prev(layer.cols, 0.0);
      for (std::size_t c = 0; c < layer.cols; ++c) {
        // ReLU derivative taken as 0 at the kink.
        if (input[c] <= 0.0) continue;
        for (std::size_t r = 0; r < layer.rows; ++r) prev[c] += layer.at(r, c) * delta[r];
      }
      delta = std::move(prev);
    }
  }
  out.loss /= static_cast<double>(batch.size());
  return out;
}

inline void apply_sgd(Parameters& theta, const Parameters& gradient, double learning_rate) {
  for (std::size_t l = 0; l < theta.size(); ++l) {
    for (std::size_t k = 0; k < theta[l].weights.size(); ++k)
      theta[l].weights[k] -= learning_rate * gradient[l].weights[k];
    for (std::size_t k = 0; k < theta[l].bias.size(); ++k)
      theta[l].bias[k] -= learning_rate * gradient[l].bias[k];
  }
}

// One full-batch SGD step on the Double-DQN loss. Targets come from the
// pre-step networks; theta_target is left alone. Returns the pre-step loss.
inline double train_step(QNetwork& net, std::span<const Transition> batch, const Hyperparams& hp) {
  if (batch.empty()) throw std::invalid_argument("train_step needs a non-empty batch");
  const auto targets = compute_targets(net, batch, hp.gamma);
  auto lg = loss_gradient(net.theta(), net.architecture().input_dim, batch, targets);
  apply_sgd(net.theta(), lg.gradient, hp.learning_rate);
  return lg.loss;
}

}  // namespace chansel::dqn
