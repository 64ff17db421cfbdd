#include "segrmt/kvfile.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace segrmt {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

KeyValueFile KeyValueFile::parse(std::string_view text, ErrorCode error_code) {
  KeyValueFile out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    const std::string_view raw = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw Error(error_code, "line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw Error(error_code, "line " + std::to_string(line_no) + ": empty key");
    if (out.entries_.contains(key))
      throw Error(error_code, "line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    out.entries_.emplace(key, std::string(trim(line.substr(eq + 1))));
  }
  return out;
}

KeyValueFile KeyValueFile::load(const std::filesystem::path& path, ErrorCode error_code) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(error_code, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), error_code);
}

std::optional<std::string> KeyValueFile::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

KeyValueFile KeyValueFile::with_prefix(std::string_view prefix) const {
  KeyValueFile out;
  for (const auto& [k, v] : entries_)
    if (k.starts_with(prefix)) out.entries_.emplace(k.substr(prefix.size()), v);
  return out;
}

std::string KeyValueFile::to_text() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

double parse_double(std::string_view key, std::string_view value, ErrorCode code) {
  double out = 0.0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end || value.empty())
    throw Error(code, std::string(key) + ": not a number: '" + std::string(value) + "'");
  return out;
}

std::uint64_t parse_u64(std::string_view key, std::string_view value, ErrorCode code) {
  std::uint64_t out = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end || value.empty())
    throw Error(code, std::string(key) + ": not an unsigned integer: '" + std::string(value) + "'");
  return out;
}

bool parse_bool(std::string_view key, std::string_view value, ErrorCode code) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw Error(code, std::string(key) + ": expected true/false, got '" + std::string(value) + "'");
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace segrmt
