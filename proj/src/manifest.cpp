#include <cmath>
#include <fstream>

#include <json.hpp>

#include "segrmt/dataset.hpp"
#include "segrmt/error.hpp"

namespace segrmt {

using nlohmann::json;
using nlohmann::ordered_json;

std::string manifest_line(const ManifestHeader& h) {
  ordered_json cfg = ordered_json::object();
  for (const auto& [k, v] : h.ga_config.entries()) cfg[k] = v;
  ordered_json j;
  j["type"] = "header";
  j["tool_version"] = h.tool_version;
  j["master_seed"] = h.master_seed;
  j["repeat"] = h.repeat;
  j["ga_config"] = cfg;
  j["parameter_bounds"] = h.parameter_bounds;
  j["oracle"] = h.oracle;
  j["rng_algorithm"] = h.rng_algorithm;
  j["retention_threshold"] = h.retention_threshold;
  j["started_at"] = h.started_at;
  return j.dump();
}

std::string manifest_line(const ManifestRecord& r) {
  ordered_json j;
  j["type"] = "entry";
  j["id"] = r.id;
  j["status"] = r.status;
  j["seed"] = r.seed;
  j["chromosome"] = r.chromosome_hex;
  j["fitness"] = r.fitness;
  j["iou"] = r.iou ? ordered_json(*r.iou) : ordered_json(nullptr);
  j["psnr"] = r.psnr;
  j["clean_iou"] = r.clean_iou ? ordered_json(*r.clean_iou) : ordered_json(nullptr);
  j["generations"] = r.generations;
  j["termination"] = r.termination;
  j["oracle_calls"] = r.oracle_calls;
  j["output"] = r.output;
  j["error"] = r.error;
  return j.dump();
}

std::string manifest_line(const ManifestFooter& f) {
  ordered_json j;
  j["type"] = "footer";
  j["exported"] = f.exported;
  j["discarded"] = f.discarded;
  j["failed"] = f.failed;
  j["finished_at"] = f.finished_at;
  return j.dump();
}

namespace {

std::optional<double> optional_number(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

// JSON has no infinity; nlohmann writes null for it.
double number_or_inf(const json& v) { return v.is_null() ? INFINITY : v.get<double>(); }

}  // namespace

RunManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read manifest " + path.string());
  RunManifest m;
  std::string line;
  std::size_t number = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      const auto type = j.at("type").get<std::string>();
      if (type == "header") {
        auto& h = m.header;
        h.tool_version = j.at("tool_version").get<std::string>();
        h.master_seed = j.at("master_seed").get<std::uint64_t>();
        h.repeat = j.at("repeat").get<std::size_t>();
        for (const auto& [k, v] : j.at("ga_config").items()) h.ga_config.set(k, v.get<std::string>());
        h.parameter_bounds = j.at("parameter_bounds").get<std::string>();
        h.oracle = j.at("oracle").get<std::string>();
        h.rng_algorithm = j.at("rng_algorithm").get<std::string>();
        h.retention_threshold = j.at("retention_threshold").get<double>();
        h.started_at = j.at("started_at").get<std::string>();
        have_header = true;
      } else if (type == "entry") {
        ManifestRecord r;
        r.id = j.at("id").get<std::string>();
        r.status = j.at("status").get<std::string>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.chromosome_hex = j.at("chromosome").get<std::string>();
        r.fitness = j.at("fitness").get<double>();
        r.iou = optional_number(j, "iou");
        r.psnr = number_or_inf(j.at("psnr"));
        r.clean_iou = optional_number(j, "clean_iou");
        r.generations = j.at("generations").get<std::size_t>();
        r.termination = j.at("termination").get<std::string>();
        r.oracle_calls = j.at("oracle_calls").get<std::size_t>();
        r.output = j.at("output").get<std::string>();
        r.error = j.at("error").get<std::string>();
        m.records.push_back(std::move(r));
      } else if (type == "footer") {
        ManifestFooter f;
        f.exported = j.at("exported").get<std::size_t>();
        f.discarded = j.at("discarded").get<std::size_t>();
        f.failed = j.at("failed").get<std::size_t>();
        f.finished_at = j.at("finished_at").get<std::string>();
        m.footer = f;
      } else {
        throw Error(ErrorCode::DecodeError, "unknown record type '" + type + "'");
      }
    } catch (const Error& e) {
      throw Error(ErrorCode::DecodeError, path.string() + " line " + std::to_string(number) + ": " + e.detail());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::DecodeError, path.string() + " line " + std::to_string(number) + ": " + e.what());
    }
  }
  if (!have_header) throw Error(ErrorCode::DecodeError, path.string() + ": missing header line");
  return m;
}

ManifestWriter::ManifestWriter(const fs::path& path) : path_(path) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  out_.open(path, std::ios::trunc);
  if (!out_) throw Error(ErrorCode::IoError, "cannot open manifest " + path.string());
}

void ManifestWriter::append(const std::string& line) {
  std::lock_guard lock(mutex_);
  out_ << line << '\n';
  out_.flush();
  if (!out_) throw Error(ErrorCode::IoError, "cannot append to manifest " + path_.string());
}

}  // namespace segrmt
