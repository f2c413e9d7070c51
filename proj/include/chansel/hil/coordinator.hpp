#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <future>
#include <iostream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "chansel/dqn/policy.hpp"
#include "chansel/dqn/replay_buffer.hpp"
#include "chansel/hil/frame.hpp"
#include "chansel/hil/frame_channel.hpp"
#include "chansel/sim/agent.hpp"
#include "chansel/sim/slot_driver.hpp"

namespace chansel::hil {

// The device answered with an ERROR frame or something unparseable where a
// TX_RESULT was due.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using EventLog = std::function<void(const std::string&)>;

inline void log_to_stderr(const std::string& line) { std::clog << "[hil] " << line << '\n'; }

// PC-side endpoint for one end device.
class Coordinator {
 public:
  Coordinator(Transport& transport, std::uint8_t agent_id, EventLog log = log_to_stderr)
      : channel_(transport), agent_id_(agent_id), log_(std::move(log)) {}

  std::uint8_t agent_id() const { return agent_id_; }
  int timeouts() const { return timeouts_; }

  void send_assignment(int channel) {
    if (channel < 0 || channel > 0xFF) throw std::out_of_range("channel does not fit in one byte");
    // Drop anything left over from a slot that timed out.
    while (channel_.receive(std::chrono::milliseconds::zero())) {
    }
    channel_.send({MessageType::kAssignChannel, agent_id_, {static_cast<std::uint8_t>(channel)}});
  }

  // ACK bit of the pending transmission; nullopt if the device stayed silent
  // past the transport timeout.
  std::optional<bool> await_result() {
    using Clock = std::chrono::steady_clock;
    const auto timeout = channel_.transport().timeout();
    const auto deadline = Clock::now() + timeout;
    while (true) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
      if (left <= std::chrono::milliseconds::zero()) break;
      auto r = channel_.receive(left);
      if (!r) break;
      if (!r->ok()) {
        log("agent " + std::to_string(agent_id_) + ": dropped frame (" + std::string(to_string(r->status)) + ")");
        continue;
      }
      const Frame& f = *r->frame;
      if (f.agent_id != agent_id_) continue;
      if (f.type == MessageType::kError) {
        const int code = f.payload.empty() ? -1 : f.payload[0];
        throw ProtocolError("device " + std::to_string(agent_id_) + " replied ERROR code " + std::to_string(code));
      }
      if (f.type != MessageType::kTxResult) continue;
      if (f.payload.size() != 1 || f.payload[0] > 1)
        throw ProtocolError("malformed TX_RESULT from device " + std::to_string(agent_id_));
      return f.payload[0] == 1;
    }
    ++timeouts_;
    log("agent " + std::to_string(agent_id_) + ": timeout after " + std::to_string(timeout.count()) +
        " ms, treated as no-ACK");
    return std::nullopt;
  }

  bool ping() {
    channel_.send({MessageType::kPing, agent_id_, {}});
    auto r = channel_.receive();
    return r && r->ok() && r->frame->type == MessageType::kPong && r->frame->agent_id == agent_id_;
  }

 private:
  void log(const std::string& line) {
    if (log_) log_(line);
  }

  FrameChannel channel_;
  std::uint8_t agent_id_;
  EventLog log_;
  int timeouts_ = 0;
};

// One PC-side step for one agent: choose a channel epsilon-greedily, send it
// down, and turn the device's report into (s, a, r, s'). Silence is no-ACK;
// transport failures propagate as TransportError.
inline dqn::Transition coordinator_step(sim::AgentState& agent, Coordinator& coordinator, double epsilon) {
  const int action = dqn::select_action(agent.net, agent.state, epsilon, agent.policy_rng);
  coordinator.send_assignment(action);
  const int ack = coordinator.await_result().value_or(false) ? 1 : 0;
  return {agent.state, action, ack, ack};
}

inline dqn::Transition coordinator_step(sim::AgentState& agent, Coordinator& coordinator,
                                        const dqn::EpsilonSchedule& schedule, int episode) {
  return coordinator_step(agent, coordinator, schedule.at(episode));
}

// Slot driver that goes through the devices. Each agent's step runs on its own
// worker so devices sharing a slot barrier can all report in.
class HilSlots final : public sim::SlotDriver {
 public:
  explicit HilSlots(std::vector<Coordinator*> coordinators) : coordinators_(std::move(coordinators)) {}

  std::vector<dqn::Transition> play_slot(std::span<sim::AgentState> agents, double epsilon) override {
    if (agents.size() != coordinators_.size()) throw std::invalid_argument("one coordinator per agent required");
    std::vector<std::future<dqn::Transition>> pending;
    pending.reserve(agents.size());
    for (std::size_t k = 0; k < agents.size(); ++k) {
      pending.push_back(std::async(std::launch::async, [&, k] {
        return coordinator_step(agents[k], *coordinators_[k], epsilon);
      }));
    }
    std::vector<dqn::Transition> out;
    out.reserve(agents.size());
    for (auto& f : pending) out.push_back(f.get());
    return out;
  }

 private:
  std::vector<Coordinator*> coordinators_;
};

}  // namespace chansel::hil
