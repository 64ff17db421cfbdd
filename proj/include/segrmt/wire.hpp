#pragma once

// Frame codec for the external segmentation protocol. Byte layout (all
// integers little-endian):
//
//   0..3   magic "SGRM"
//   4      version 0x01
//   5      msg_type 0x01 request | 0x02 response | 0x7F error
//   6..9   height (u32)
//   10..13 width  (u32)
//   14     channels (u8)
//   15..   payload
//
// Payload length is fixed by the header: request H·W·C sample bytes
// (C ∈ {1,3}); response H·W u16 labels (C must be 1); error H UTF-8 bytes
// with W = 1 and C = 1.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "segrmt/imaging.hpp"

namespace segrmt::wire {

enum class MsgType : std::uint8_t { SegmentRequest = 0x01, SegmentResponse = 0x02, Error = 0x7F };

inline constexpr std::array<std::uint8_t, 4> kMagic{'S', 'G', 'R', 'M'};
inline constexpr std::uint8_t kVersion = 0x01;
inline constexpr std::size_t kHeaderSize = 15;
/// Frames announcing more payload than this are rejected before allocation.
inline constexpr std::uint64_t kMaxPayload = std::uint64_t{1} << 30;

struct Header {
  MsgType type = MsgType::SegmentRequest;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint8_t channels = 0;

  friend bool operator==(const Header&, const Header&) = default;
};

struct Frame {
  Header header;
  std::vector<std::uint8_t> payload;

  friend bool operator==(const Frame&, const Frame&) = default;
};

/// Validates magic, version, type and field consistency. Throws ProtocolError.
Header decode_header(std::span<const std::uint8_t> bytes);
/// Payload byte count implied by a (validated) header.
std::uint64_t payload_size(const Header& h);

/// Throws ProtocolError if the payload length disagrees with the header.
std::vector<std::uint8_t> encode(const Frame& frame);
/// Decodes exactly one frame occupying all of `bytes`. Throws ProtocolError.
Frame decode(std::span<const std::uint8_t> bytes);

Frame make_request(const Image& img);
Frame make_response(const LabelMap& labels);
Frame make_error(const std::string& message);

Image request_image(const Frame& frame);
LabelMap response_labels(const Frame& frame);
std::string error_message(const Frame& frame);

}  // namespace segrmt::wire
