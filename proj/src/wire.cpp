#include "segrmt/wire.hpp"

#include <algorithm>

#include "segrmt/error.hpp"

namespace segrmt::wire {

namespace {

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return std::uint32_t{b[at]} | std::uint32_t{b[at + 1]} << 8 | std::uint32_t{b[at + 2]} << 16 |
         std::uint32_t{b[at + 3]} << 24;
}

void write_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

[[noreturn]] void protocol_error(const std::string& why) { throw Error(ErrorCode::ProtocolError, why); }

}  // namespace

Header decode_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize)
    protocol_error("header needs " + std::to_string(kHeaderSize) + " bytes, got " +
                   std::to_string(bytes.size()));
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) protocol_error("bad magic");
  if (bytes[4] != kVersion) protocol_error("unsupported version " + std::to_string(bytes[4]));
  Header h;
  switch (bytes[5]) {
    case 0x01: h.type = MsgType::SegmentRequest; break;
    case 0x02: h.type = MsgType::SegmentResponse; break;
    case 0x7F: h.type = MsgType::Error; break;
    default: protocol_error("unknown msg_type " + std::to_string(bytes[5]));
  }
  h.height = read_u32(bytes, 6);
  h.width = read_u32(bytes, 10);
  h.channels = bytes[14];
  switch (h.type) {
    case MsgType::SegmentRequest:
      if (h.height == 0 || h.width == 0) protocol_error("request with empty extent");
      if (h.channels != 1 && h.channels != 3)
        protocol_error("request channels must be 1 or 3, got " + std::to_string(h.channels));
      break;
    case MsgType::SegmentResponse:
      if (h.height == 0 || h.width == 0) protocol_error("response with empty extent");
      if (h.channels != 1) protocol_error("response channels must be 1");
      break;
    case MsgType::Error:
      if (h.width != 1 || h.channels != 1) protocol_error("error frame needs width 1 and channels 1");
      break;
  }
  if (payload_size(h) > kMaxPayload)
    protocol_error("payload of " + std::to_string(payload_size(h)) + " bytes exceeds limit");
  return h;
}

std::uint64_t payload_size(const Header& h) {
  const std::uint64_t pixels = std::uint64_t{h.height} * h.width;
  switch (h.type) {
    case MsgType::SegmentRequest: return pixels * h.channels;
    case MsgType::SegmentResponse: return pixels * 2;
    case MsgType::Error: return h.height;
  }
  return 0;
}

std::vector<std::uint8_t> encode(const Frame& frame) {
  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  out.push_back(kVersion);
  out.push_back(static_cast<std::uint8_t>(frame.header.type));
  write_u32(out, frame.header.height);
  write_u32(out, frame.header.width);
  out.push_back(frame.header.channels);
  decode_header(out);
  const auto expected = payload_size(frame.header);
  if (frame.payload.size() != expected)
    protocol_error("payload length mismatch: expected " + std::to_string(expected) +
                   " bytes, got " + std::to_string(frame.payload.size()));
  out.insert(out.end(), frame.payload.begin(), frame.payload.end());
  return out;
}

Frame decode(std::span<const std::uint8_t> bytes) {
  Frame f;
  f.header = decode_header(bytes);
  const auto expected = payload_size(f.header);
  const auto actual = bytes.size() - kHeaderSize;
  if (actual != expected)
    protocol_error("payload length mismatch: expected " + std::to_string(expected) +
                   " bytes, got " + std::to_string(actual));
  f.payload.assign(bytes.begin() + kHeaderSize, bytes.end());
  return f;
}

Frame make_request(const Image& img) {
  Frame f;
  f.header = {MsgType::SegmentRequest, img.height(), img.width(),
              static_cast<std::uint8_t>(img.channels())};
  f.payload.assign(img.samples().begin(), img.samples().end());
  return f;
}

Frame make_response(const LabelMap& labels) {
  Frame f;
  f.header = {MsgType::SegmentResponse, labels.height(), labels.width(), 1};
  f.payload.reserve(labels.pixel_count() * 2);
  for (auto v : labels.labels()) {
    f.payload.push_back(static_cast<std::uint8_t>(v & 0xFF));
    f.payload.push_back(static_cast<std::uint8_t>(v >> 8));
  }
  return f;
}

Frame make_error(const std::string& message) {
  Frame f;
  f.header = {MsgType::Error, static_cast<std::uint32_t>(message.size()), 1, 1};
  f.payload.assign(message.begin(), message.end());
  return f;
}

Image request_image(const Frame& frame) {
  if (frame.header.type != MsgType::SegmentRequest) protocol_error("not a segment request");
  return Image(frame.header.height, frame.header.width, frame.header.channels, frame.payload);
}

LabelMap response_labels(const Frame& frame) {
  if (frame.header.type != MsgType::SegmentResponse) protocol_error("not a segment response");
  std::vector<std::uint16_t> labels(frame.payload.size() / 2);
  for (std::size_t i = 0; i < labels.size(); ++i)
    labels[i] = static_cast<std::uint16_t>(frame.payload[2 * i] | frame.payload[2 * i + 1] << 8);
  return LabelMap(frame.header.height, frame.header.width, std::move(labels));
}

std::string error_message(const Frame& frame) {
  if (frame.header.type != MsgType::Error) protocol_error("not an error frame");
  return std::string(frame.payload.begin(), frame.payload.end());
}

}  // namespace segrmt::wire
