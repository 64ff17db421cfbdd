#include <cctype>
#include <fstream>
#include <iterator>
#include <string>

#include "segrmt/dataset.hpp"
#include "segrmt/error.hpp"

namespace segrmt {

namespace {

struct Raster {
  char kind = 0;  // '5' or '6'
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t maxval = 0;
  std::span<const std::uint8_t> data;
};

class HeaderReader {
 public:
  HeaderReader(std::span<const std::uint8_t> bytes, const std::string& what) : bytes_(bytes), what_(what) {}

  std::uint32_t number(const char* field) {
    skip_space_and_comments();
    std::uint64_t v = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (v > 0xFFFFFFFFull) fail(std::string(field) + " out of range");
      ++digits;
    }
    if (digits == 0) fail(std::string("expected ") + field);
    return static_cast<std::uint32_t>(v);
  }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw Error(ErrorCode::DecodeError, what_ + ": " + why + " at byte " + std::to_string(pos_));
  }

  std::span<const std::uint8_t> bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

Raster parse(std::span<const std::uint8_t> bytes, const std::string& what) {
  HeaderReader r(bytes, what);
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
    r.fail("not a binary PGM/PPM file");
  Raster out;
  out.kind = static_cast<char>(bytes[1]);
  r.pos_ = 2;
  out.width = r.number("width");
  out.height = r.number("height");
  out.maxval = r.number("maxval");
  if (out.width == 0 || out.height == 0) r.fail("zero extent");
  if (out.maxval == 0 || out.maxval > 65535) r.fail("maxval must lie in [1, 65535]");
  if (r.pos_ >= bytes.size() || !std::isspace(bytes[r.pos_])) r.fail("missing separator before raster");
  ++r.pos_;
  const std::size_t channels = out.kind == '6' ? 3 : 1;
  const std::size_t sample_bytes = out.maxval > 255 ? 2 : 1;
  const std::size_t need = static_cast<std::size_t>(out.width) * out.height * channels * sample_bytes;
  if (bytes.size() - r.pos_ != need)
    r.fail("raster holds " + std::to_string(bytes.size() - r.pos_) + " bytes, expected " + std::to_string(need));
  out.data = bytes.subspan(r.pos_);
  return out;
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::DecodeError, path.string() + ": cannot open");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::IoError, "cannot write " + path.string());
  }
}

std::vector<std::uint8_t> header(char kind, std::uint32_t w, std::uint32_t h, std::uint32_t maxval) {
  const std::string text =
      std::string("P") + kind + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n" + std::to_string(maxval) + "\n";
  return {text.begin(), text.end()};
}

}  // namespace

Image decode_image(std::span<const std::uint8_t> bytes, const std::string& what) {
  const auto r = parse(bytes, what);
  if (r.maxval != 255)
    throw Error(ErrorCode::DecodeError, what + ": images must have maxval 255, got " + std::to_string(r.maxval));
  return Image(r.height, r.width, r.kind == '6' ? 3 : 1, std::vector<std::uint8_t>(r.data.begin(), r.data.end()));
}

LabelMap decode_labels(std::span<const std::uint8_t> bytes, const std::string& what) {
  const auto r = parse(bytes, what);
  if (r.kind != '5') throw Error(ErrorCode::DecodeError, what + ": label maps must be single-channel (P5)");
  std::vector<std::uint16_t> labels(static_cast<std::size_t>(r.width) * r.height);
  if (r.maxval > 255) {
    for (std::size_t i = 0; i < labels.size(); ++i)
      labels[i] = static_cast<std::uint16_t>(r.data[2 * i] << 8 | r.data[2 * i + 1]);
  } else {
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = r.data[i];
  }
  return LabelMap(r.height, r.width, std::move(labels));
}

std::vector<std::uint8_t> encode_netpbm(const Image& img) {
  auto out = header(img.channels() == 3 ? '6' : '5', img.width(), img.height(), 255);
  out.insert(out.end(), img.samples().begin(), img.samples().end());
  return out;
}

std::vector<std::uint8_t> encode_netpbm(const LabelMap& labels) {
  auto out = header('5', labels.width(), labels.height(), 65535);
  out.reserve(out.size() + labels.pixel_count() * 2);
  for (auto v : labels.labels()) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  }
  return out;
}

Image read_image(const fs::path& path) { return decode_image(read_file(path), path.string()); }
LabelMap read_labels(const fs::path& path) { return decode_labels(read_file(path), path.string()); }
void write_image(const fs::path& path, const Image& img) { write_file(path, encode_netpbm(img)); }
void write_labels(const fs::path& path, const LabelMap& labels) { write_file(path, encode_netpbm(labels)); }

}  // namespace segrmt
