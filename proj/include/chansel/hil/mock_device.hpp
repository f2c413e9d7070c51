#pragma once

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <mutex>
#include <vector>

#include "chansel/env/environment.hpp"
#include "chansel/hil/frame.hpp"
#include "chansel/hil/frame_channel.hpp"
#include "chansel/random.hpp"

namespace chansel::hil {

// Joins the channel choices of all mock devices for one slot and resolves them
// with a single resolve_slot call, exactly like the in-process simulator.
class SlotAggregator {
 public:
  SlotAggregator(env::ChannelPlan plan, env::LinkModel link, int num_agents, Rng rng)
      : plan_(std::move(plan)), link_(link), rng_(rng), choices_(static_cast<std::size_t>(num_agents), -1) {}

  int num_agents() const { return static_cast<int>(choices_.size()); }
  const env::ChannelPlan& plan() const { return plan_; }

  // Blocks until every agent has submitted for this slot; returns the ACK bit.
  bool submit(int agent, int channel) {
    std::unique_lock lock(mu_);
    if (stopped_) throw TransportError("slot aggregator stopped");
    auto& slot = choices_.at(static_cast<std::size_t>(agent));
    if (slot != -1) throw std::logic_error("agent submitted twice in one slot");
    slot = channel;
    const auto generation = generation_;
    if (++submitted_ == choices_.size()) {
      results_ = env::resolve_slot(plan_, link_, choices_, rng_);
      std::fill(choices_.begin(), choices_.end(), -1);
      submitted_ = 0;
      ++generation_;
      cv_.notify_all();
    } else {
      cv_.wait(lock, [&] { return generation_ != generation || stopped_; });
      if (generation_ == generation) throw TransportError("slot aggregator stopped");
    }
    return results_.at(static_cast<std::size_t>(agent)).success;
  }

  void stop() {
    {
      std::lock_guard lock(mu_);
      stopped_ = true;
    }
    cv_.notify_all();
  }

 private:
  env::ChannelPlan plan_;
  env::LinkModel link_;
  Rng rng_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::vector<int> choices_;
  std::size_t submitted_ = 0;
  std::uint64_t generation_ = 0;
  env::SlotOutcome results_;
  bool stopped_ = false;
};

// Stand-in end device: transmits on the assigned channel (via the aggregator)
// and reports the ACK bit back; answers PING; rejects anything malformed with
// an ERROR frame whose payload is the failure code.
class MockDevice {
 public:
  MockDevice(Transport& transport, SlotAggregator& aggregator) : channel_(transport), aggregator_(aggregator) {}

  int frames_handled() const { return handled_; }

  // Serves until the transport is closed.
  void run() {
    try {
      while (true) {
        auto r = channel_.receive(std::chrono::hours(24));
        if (r) handle(*r);
      }
    } catch (const TransportError&) {
    }
  }

 private:
  void reply_error(std::uint8_t agent, ErrorCode code) {
    channel_.send({MessageType::kError, agent, {static_cast<std::uint8_t>(code)}});
  }

  void handle(const DecodeResult& r) {
    ++handled_;
    if (!r.ok()) {
      reply_error(0xFF, static_cast<ErrorCode>(r.status));
      return;
    }
    const Frame& f = *r.frame;
    switch (f.type) {
      case MessageType::kPing:
        channel_.send({MessageType::kPong, f.agent_id, {}});
        return;
      case MessageType::kAssignChannel: {
        if (f.payload.size() != 1) return reply_error(f.agent_id, ErrorCode::kBadPayload);
        if (f.agent_id >= aggregator_.num_agents()) return reply_error(f.agent_id, ErrorCode::kInvalidAgent);
        const int ch = f.payload[0];
        if (ch >= static_cast<int>(aggregator_.plan().size()))
          return reply_error(f.agent_id, ErrorCode::kInvalidChannel);
        const bool ack = aggregator_.submit(f.agent_id, ch);
        channel_.send({MessageType::kTxResult, f.agent_id, {static_cast<std::uint8_t>(ack ? 1 : 0)}});
        return;
      }
      default:
        return reply_error(f.agent_id, ErrorCode::kUnknownType);
    }
  }

  FrameChannel channel_;
  SlotAggregator& aggregator_;
  int handled_ = 0;
};

// Single-device convenience: serves `transport` alone on the given radio.
inline void mock_device(const env::ChannelPlan& plan, const env::LinkModel& link, Transport& transport,
                        Rng rng = Rng{}) {
  SlotAggregator aggregator(plan, link, 1, rng);
  MockDevice device(transport, aggregator);
  device.run();
}

}  // namespace chansel::hil
