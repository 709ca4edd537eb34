#pragma once

// Byte layouts exchanged between federation server and clients.
//
// Frame:   "FLB1" | type u8 | payload length u32 LE | payload | CRC-32 u32 LE (over payload)
// Weights: tensor count u32 | per tensor: name length u16, UTF-8 name, rank u8,
//          dims u32 each, values as IEEE-754 single, all little-endian.
// JOIN = client_id u32; GLOBAL = round u32 + weights;
// UPDATE = round u32 + n_examples u64 + weights; DONE = round u32; ERROR = UTF-8 text.

#include "fedids/params.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fedids {

using Bytes = std::vector<std::uint8_t>;

enum class MessageType : std::uint8_t { join = 1, global = 2, update = 3, done = 4, error = 5 };

std::string_view to_string(MessageType type);

inline constexpr std::array<std::uint8_t, 4> kFrameMagic{'F', 'L', 'B', '1'};
inline constexpr std::size_t kFrameOverhead = 13;
inline constexpr std::uint16_t kDefaultPort = 7171;

/// CRC-32, reflected polynomial 0xEDB88320.
std::uint32_t crc32(std::span<const std::uint8_t> bytes);

bool is_valid_utf8(std::string_view text);

class WireError : public std::runtime_error {
  public:
    enum class Kind { truncated, dim_overflow, bad_utf8, trailing_bytes, duplicate_name, too_large };
    WireError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

  private:
    Kind kind_;
};

Bytes encode_weights(const ParameterSet& params);
/// Rejects truncation, trailing bytes, malformed names and oversized shapes.
ParameterSet decode_weights(std::span<const std::uint8_t> bytes);

struct Frame {
    MessageType type = MessageType::error;
    Bytes payload;

    friend bool operator==(const Frame&, const Frame&) = default;
};

class FrameError : public std::runtime_error {
  public:
    enum class Kind { bad_magic, bad_type, truncated, crc_mismatch };
    FrameError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

  private:
    Kind kind_;
};

Bytes frame(MessageType type, std::span<const std::uint8_t> payload);
Bytes frame(const Frame& f);

/// Blocking byte stream. read_some returns 0 only at end of stream.
class ByteSource {
  public:
    virtual ~ByteSource() = default;
    virtual std::size_t read_some(std::span<std::uint8_t> out) = 0;
};

class BufferSource final : public ByteSource {
  public:
    explicit BufferSource(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
    std::size_t read_some(std::span<std::uint8_t> out) override;
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

  private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

/// Reads one frame. Returns nullopt when the stream ends cleanly before the
/// first byte of a frame; a frame cut short raises FrameError::truncated.
std::optional<Frame> deframe(ByteSource& source);

// Message payloads.

Bytes join_payload(std::uint32_t client_id);
std::uint32_t parse_join(std::span<const std::uint8_t> payload);

struct GlobalMessage {
    std::uint32_t round = 0;
    ParameterSet weights;
};
Bytes global_payload(std::uint32_t round, const ParameterSet& weights);
GlobalMessage parse_global(std::span<const std::uint8_t> payload);

struct UpdateMessage {
    std::uint32_t round = 0;
    std::uint64_t n_examples = 0;
    ParameterSet weights;
};
Bytes update_payload(std::uint32_t round, std::uint64_t n_examples, const ParameterSet& weights);
UpdateMessage parse_update(std::span<const std::uint8_t> payload);

Bytes done_payload(std::uint32_t round);
std::uint32_t parse_done(std::span<const std::uint8_t> payload);

Bytes error_payload(std::string_view message);
std::string parse_error_message(std::span<const std::uint8_t> payload);

}  // namespace fedids
