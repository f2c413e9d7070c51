#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <utility>

namespace chansel::hil {

using namespace std::chrono_literals;

// Infrastructure failure (closed or broken link). Never mapped to no-ACK.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Duplex byte stream. Serial-port backends plug in here.
class Transport {
 public:
  virtual ~Transport() = default;

  virtual void write(std::span<const std::uint8_t> bytes) = 0;
  // Blocks up to timeout() for at least one byte. Returns 0 on timeout;
  // throws TransportError once the link is closed and drained.
  virtual std::size_t read(std::span<std::uint8_t> out) = 0;
  virtual void close() = 0;

  std::chrono::milliseconds timeout() const { return timeout_; }
  void set_timeout(std::chrono::milliseconds t) { timeout_ = t; }

 private:
  std::chrono::milliseconds timeout_{1000};
};

// One direction of an in-memory pipe.
class ByteQueue {
 public:
  void push(std::span<const std::uint8_t> bytes) {
    {
      std::lock_guard lock(mu_);
      if (closed_) throw TransportError("write to closed pipe");
      data_.insert(data_.end(), bytes.begin(), bytes.end());
    }
    cv_.notify_all();
  }

  std::size_t pop(std::span<std::uint8_t> out, std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, timeout, [&] { return !data_.empty() || closed_; });
    if (data_.empty()) {
      if (closed_) throw TransportError("pipe closed");
      return 0;
    }
    std::size_t n = 0;
    while (n < out.size() && !data_.empty()) {
      out[n++] = data_.front();
      data_.pop_front();
    }
    return n;
  }

  void close() {
    {
      std::lock_guard lock(mu_);
      closed_ = true;
    }
    cv_.notify_all();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::uint8_t> data_;
  bool closed_ = false;
};

class MemoryTransport final : public Transport {
 public:
  MemoryTransport(std::shared_ptr<ByteQueue> rx, std::shared_ptr<ByteQueue> tx)
      : rx_(std::move(rx)), tx_(std::move(tx)) {}

  ~MemoryTransport() override { close(); }

  void write(std::span<const std::uint8_t> bytes) override { tx_->push(bytes); }
  std::size_t read(std::span<std::uint8_t> out) override { return rx_->pop(out, timeout()); }

  // Closing either end shuts down both directions.
  void close() override {
    rx_->close();
    tx_->close();
  }

 private:
  std::shared_ptr<ByteQueue> rx_;
  std::shared_ptr<ByteQueue> tx_;
};

// Connected pair: bytes written to one end are read from the other.
inline std::pair<std::unique_ptr<MemoryTransport>, std::unique_ptr<MemoryTransport>> make_memory_pipe() {
  auto a_to_b = std::make_shared<ByteQueue>();
  auto b_to_a = std::make_shared<ByteQueue>();
  return {std::make_unique<MemoryTransport>(b_to_a, a_to_b), std::make_unique<MemoryTransport>(a_to_b, b_to_a)};
}

}  // namespace chansel::hil
