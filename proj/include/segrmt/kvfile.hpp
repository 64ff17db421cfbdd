#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "segrmt/error.hpp"

namespace segrmt {

/// Flat `key = value` document. Blank lines and lines starting with `#` are
/// ignored; keys are unique; values are trimmed of surrounding whitespace.
class KeyValueFile {
 public:
  KeyValueFile() = default;

  /// `error_code` is raised (with the line number) on malformed input.
  static KeyValueFile parse(std::string_view text, ErrorCode error_code = ErrorCode::InvalidConfig);
  static KeyValueFile load(const std::filesystem::path& path,
                           ErrorCode error_code = ErrorCode::InvalidConfig);

  [[nodiscard]] const std::map<std::string, std::string>& entries() const& noexcept { return entries_; }
  [[nodiscard]] std::map<std::string, std::string> entries() && { return std::move(entries_); }
  [[nodiscard]] std::optional<std::string> get(const std::string& key) const;
  void set(const std::string& key, std::string value) { entries_[key] = std::move(value); }

  /// Entries whose key starts with `prefix`, with the prefix stripped.
  [[nodiscard]] KeyValueFile with_prefix(std::string_view prefix) const;

  [[nodiscard]] std::string to_text() const;

 private:
  std::map<std::string, std::string> entries_;
};

/// Strict number parsing shared by the config loaders.
double parse_double(std::string_view key, std::string_view value, ErrorCode code);
std::uint64_t parse_u64(std::string_view key, std::string_view value, ErrorCode code);
bool parse_bool(std::string_view key, std::string_view value, ErrorCode code);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace segrmt
