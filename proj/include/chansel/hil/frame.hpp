#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace chansel::hil {

// Wire layout (all single bytes):
//   0x49 0x54 | version 0x01 | msg_type | agent_id | payload_len | payload... | checksum
// checksum = XOR of every preceding byte of the frame.
inline constexpr std::uint8_t kMagic0 = 0x49;
inline constexpr std::uint8_t kMagic1 = 0x54;
inline constexpr std::uint8_t kVersion = 0x01;
inline constexpr std::size_t kHeaderSize = 6;
inline constexpr std::size_t kMaxPayload = 255;

enum class MessageType : std::uint8_t {
  kAssignChannel = 0x01,
  kTxResult = 0x02,
  kPing = 0x03,
  kPong = 0x04,
  kError = 0x7F,
};

inline bool is_known(MessageType type) {
  switch (type) {
    case MessageType::kAssignChannel:
    case MessageType::kTxResult:
    case MessageType::kPing:
    case MessageType::kPong:
    case MessageType::kError:
      return true;
  }
  return false;
}

// Codes carried in the single payload byte of an ERROR frame. The first four
// mirror DecodeStatus.
enum class ErrorCode : std::uint8_t {
  kChecksumMismatch = 0x01,
  kTruncated = 0x02,
  kBadMagic = 0x03,
  kUnsupportedVersion = 0x04,
  kUnknownType = 0x05,
  kBadPayload = 0x06,
  kInvalidChannel = 0x07,
  kInvalidAgent = 0x08,
};

// Message type is kept raw on decode: unknown types are a protocol-level
// concern, not a framing error.
struct Frame {
  MessageType type = MessageType::kPing;
  std::uint8_t agent_id = 0;
  std::vector<std::uint8_t> payload;

  bool operator==(const Frame&) const = default;
};

inline std::uint8_t xor_checksum(std::span<const std::uint8_t> bytes) {
  std::uint8_t x = 0;
  for (auto b : bytes) x ^= b;
  return x;
}

inline std::vector<std::uint8_t> encode_frame(const Frame& f) {
  if (f.payload.size() > kMaxPayload) throw std::length_error("frame payload exceeds 255 bytes");
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + f.payload.size() + 1);
  out.push_back(kMagic0);
  out.push_back(kMagic1);
  out.push_back(kVersion);
  out.push_back(static_cast<std::uint8_t>(f.type));
  out.push_back(f.agent_id);
  out.push_back(static_cast<std::uint8_t>(f.payload.size()));
  out.insert(out.end(), f.payload.begin(), f.payload.end());
  out.push_back(xor_checksum(out));
  return out;
}

enum class DecodeStatus : std::uint8_t {
  kOk = 0x00,
  kChecksumMismatch = 0x01,
  kTruncated = 0x02,
  kBadMagic = 0x03,
  kUnsupportedVersion = 0x04,
};

inline std::string_view to_string(DecodeStatus s) {
  switch (s) {
    case DecodeStatus::kOk: return "OK";
    case DecodeStatus::kChecksumMismatch: return "CHECKSUM_MISMATCH";
    case DecodeStatus::kTruncated: return "TRUNCATED";
    case DecodeStatus::kBadMagic: return "BAD_MAGIC";
    case DecodeStatus::kUnsupportedVersion: return "UNSUPPORTED_VERSION";
  }
  return "UNKNOWN";
}

struct DecodeResult {
  DecodeStatus status = DecodeStatus::kBadMagic;
  std::optional<Frame> frame;
  std::size_t consumed = 0;  // bytes up to and including the decoded frame

  bool ok() const { return status == DecodeStatus::kOk; }
};

namespace detail {

struct Parsed {
  DecodeStatus status;
  std::optional<Frame> frame;
  std::size_t end = 0;
};

// Parses a frame whose magic starts at `pos`.
inline Parsed parse_at(std::span<const std::uint8_t> bytes, std::size_t pos) {
  const auto avail = bytes.size() - pos;
  if (avail < 2 || bytes[pos] != kMagic0 || bytes[pos + 1] != kMagic1) {
    if (avail == 1 && bytes[pos] == kMagic0) return {DecodeStatus::kTruncated, std::nullopt};
    return {DecodeStatus::kBadMagic, std::nullopt};
  }
  if (avail > 2 && bytes[pos + 2] != kVersion) return {DecodeStatus::kUnsupportedVersion, std::nullopt};
  if (avail < kHeaderSize) return {DecodeStatus::kTruncated, std::nullopt};
  const std::size_t len = bytes[pos + 5];
  const std::size_t total = kHeaderSize + len + 1;
  if (avail < total) return {DecodeStatus::kTruncated, std::nullopt};
  const auto body = bytes.subspan(pos, total - 1);
  if (xor_checksum(body) != bytes[pos + total - 1])
    return {DecodeStatus::kChecksumMismatch, std::nullopt};
  Frame f;
  f.type = static_cast<MessageType>(bytes[pos + 3]);
  f.agent_id = bytes[pos + 4];
  f.payload.assign(body.begin() + kHeaderSize, body.end());
  return {DecodeStatus::kOk, std::move(f), pos + total};
}

inline bool magic_at(std::span<const std::uint8_t> bytes, std::size_t i) {
  if (bytes[i] != kMagic0) return false;
  return i + 1 == bytes.size() || bytes[i + 1] == kMagic1;
}

}  // namespace detail

// Decodes the first valid frame in `bytes`, scanning past leading garbage and
// past candidates that fail to parse. When nothing decodes, reports the
// failure of the first magic candidate, or BAD_MAGIC if there was none.
inline DecodeResult decode_frame(std::span<const std::uint8_t> bytes) {
  std::optional<DecodeStatus> first_error;
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    if (!detail::magic_at(bytes, i)) continue;
    auto parsed = detail::parse_at(bytes, i);
    if (parsed.status == DecodeStatus::kOk) return {DecodeStatus::kOk, std::move(parsed.frame), parsed.end};
    if (!first_error) first_error = parsed.status;
  }
  return {first_error.value_or(DecodeStatus::kBadMagic), std::nullopt, 0};
}

// Incremental decoder for a byte stream. Garbage before a magic is dropped
// silently; a candidate that fails its checksum or version check is reported
// once and scanning resumes one byte later.
class FrameDecoder {
 public:
  void feed(std::span<const std::uint8_t> bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }

  // Call when no more bytes will arrive; a pending partial frame is then
  // reported as TRUNCATED instead of waited for.
  void mark_end_of_stream() { eos_ = true; }

  std::size_t skipped_bytes() const { return skipped_; }
  std::size_t buffered() const { return buf_.size(); }

  // Next decoded frame or framing error; nullopt when more bytes are needed.
  std::optional<DecodeResult> next() {
    std::size_t p = 0;
    while (p < buf_.size() && !detail::magic_at(buf_, p)) ++p;
    skipped_ += p;
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(p));
    if (buf_.empty()) return std::nullopt;

    auto parsed = detail::parse_at(buf_, 0);
    if (parsed.status == DecodeStatus::kOk) {
      buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(parsed.end));
      return DecodeResult{DecodeStatus::kOk, std::move(parsed.frame), parsed.end};
    }
    if (parsed.status == DecodeStatus::kTruncated && !eos_) return std::nullopt;
    buf_.erase(buf_.begin());
    ++skipped_;
    return DecodeResult{parsed.status, std::nullopt, 1};
  }

 private:
  std::vector<std::uint8_t> buf_;
  std::size_t skipped_ = 0;
  bool eos_ = false;
};

}  // namespace chansel::hil
