#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <optional>

#include "chansel/hil/frame.hpp"
#include "chansel/hil/transport.hpp"

namespace chansel::hil {

// Frame-level view of a transport. Only whole frames (or framing errors)
// ever reach the caller.
class FrameChannel {
 public:
  explicit FrameChannel(Transport& transport) : transport_(transport) {}

  Transport& transport() { return transport_; }

  void send(const Frame& f) { transport_.write(encode_frame(f)); }

  // Waits up to `timeout` for the next frame or framing error.
  std::optional<DecodeResult> receive(std::chrono::milliseconds timeout) {
    using Clock = std::chrono::steady_clock;
    const auto deadline = Clock::now() + timeout;
    const auto saved = transport_.timeout();
    std::array<std::uint8_t, 256> chunk{};
    std::optional<DecodeResult> result;
    try {
      while (!(result = decoder_.next())) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
        if (left <= std::chrono::milliseconds::zero() && timeout > std::chrono::milliseconds::zero()) break;
        transport_.set_timeout(std::max(left, std::chrono::milliseconds::zero()));
        const auto n = transport_.read(chunk);
        if (n == 0) break;
        decoder_.feed(std::span(chunk).first(n));
      }
    } catch (...) {
      transport_.set_timeout(saved);
      throw;
    }
    transport_.set_timeout(saved);
    return result;
  }

  std::optional<DecodeResult> receive() { return receive(transport_.timeout()); }

 private:
  Transport& transport_;
  FrameDecoder decoder_;
};

}  // namespace chansel::hil
