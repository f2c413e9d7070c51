#pragma once

#include <chrono>
#include <memory>
#include <thread>
#include <vector>

#include "chansel/hil/coordinator.hpp"
#include "chansel/hil/mock_device.hpp"
#include "chansel/hil/transport.hpp"
#include "chansel/sim/agent.hpp"

namespace chansel::hil {

// A PC hosting one coordinator per agent, wired over in-memory pipes to mock
// devices that share one slot aggregator. Tears everything down on
// destruction.
class MockSession {
 public:
  MockSession(const sim::SimConfig& config, Rng env_rng,
              std::chrono::milliseconds timeout = std::chrono::seconds(5), EventLog log = log_to_stderr)
      : aggregator_(config.plan, config.link, config.num_agents, env_rng) {
    for (int k = 0; k < config.num_agents; ++k) {
      auto [pc_end, device_end] = make_memory_pipe();
      pc_end->set_timeout(timeout);
      coordinators_.push_back(std::make_unique<Coordinator>(*pc_end, static_cast<std::uint8_t>(k), log));
      devices_.push_back(std::make_unique<MockDevice>(*device_end, aggregator_));
      pc_ends_.push_back(std::move(pc_end));
      device_ends_.push_back(std::move(device_end));
    }
    for (auto& d : devices_) threads_.emplace_back([dev = d.get()] { dev->run(); });
  }

  MockSession(const MockSession&) = delete;
  MockSession& operator=(const MockSession&) = delete;

  ~MockSession() {
    aggregator_.stop();
    for (auto& t : pc_ends_) t->close();
    threads_.clear();  // joins
  }

  std::vector<Coordinator*> coordinators() const {
    std::vector<Coordinator*> out;
    for (const auto& c : coordinators_) out.push_back(c.get());
    return out;
  }

  HilSlots slots() const { return HilSlots(coordinators()); }

 private:
  SlotAggregator aggregator_;
  std::vector<std::unique_ptr<MemoryTransport>> pc_ends_;
  std::vector<std::unique_ptr<MemoryTransport>> device_ends_;
  std::vector<std::unique_ptr<Coordinator>> coordinators_;
  std::vector<std::unique_ptr<MockDevice>> devices_;
  std::vector<std::jthread> threads_;
};

}  // namespace chansel::hil
