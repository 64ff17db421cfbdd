#pragma once

#include <unistd.h>

#include <filesystem>
#include <random>
#include <string>

#include "segrmt/imaging.hpp"

namespace testing_support {

inline segrmt::Image random_image(std::mt19937_64& gen, std::uint32_t h, std::uint32_t w, std::uint32_t c) {
  std::vector<std::uint8_t> s(static_cast<std::size_t>(h) * w * c);
  for (auto& v : s) v = static_cast<std::uint8_t>(gen() & 0xFF);
  return segrmt::Image(h, w, c, std::move(s));
}

inline segrmt::LabelMap random_labels(std::mt19937_64& gen, std::uint32_t h, std::uint32_t w, std::uint16_t classes) {
  std::vector<std::uint16_t> l(static_cast<std::size_t>(h) * w);
  for (auto& v : l) v = static_cast<std::uint16_t>(gen() % classes);
  return segrmt::LabelMap(h, w, std::move(l));
}

// Removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "segrmt-XXXXXX").string();
    path_ = mkdtemp(tmpl.data());
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing_support
