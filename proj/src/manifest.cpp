#include "gravicav/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gravicav/io.hpp"

#ifndef GRAVICAV_VERSION
#define GRAVICAV_VERSION "unknown"
#endif

namespace gravicav {

using nlohmann::json;

std::string code_version() { return GRAVICAV_VERSION; }

json to_json(const Manifest& m) {
  json j;
  j["command"] = m.command;
  j["options"] = m.options;
  j["config"] = to_json(m.config);
  j["version"] = m.version;
  j["outputs"] = m.outputs;
  return j;
}

Manifest manifest_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("manifest must be a JSON object");
  for (const char* key : {"command", "options", "config", "version", "outputs"})
    if (!j.contains(key)) throw ConfigError(std::string("manifest lacks '") + key + "'");
  Manifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.options = j.at("options");
    m.version = j.at("version").get<std::string>();
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("manifest: ") + e.what());
  }
  m.config = config_from_json(j.at("config"));
  return m;
}

void write_manifest(const std::filesystem::path& dir, const Manifest& m) {
  write_atomically(dir / "manifest.json", [&](std::ostream& out) { out << to_json(m).dump(2) << '\n'; });
}

Manifest read_manifest(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open manifest " + file.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("manifest " + file.string() + ": " + e.what());
  }
  return manifest_from_json(j);
}

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

bool close(double a, double b, double tol) {
  if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
  if (a == b) return true;
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

std::string compare_csv(const std::string& a, const std::string& b, double tol) {
  std::istringstream sa(a), sb(b);
  std::string la, lb;
  for (int line = 1;; ++line) {
    const bool ga = static_cast<bool>(std::getline(sa, la));
    const bool gb = static_cast<bool>(std::getline(sb, lb));
    if (!ga && !gb) return {};
    if (ga != gb) return "line count differs";
    std::istringstream ca(la), cb(lb);
    std::string fa, fb;
    for (;;) {
      const bool ha = static_cast<bool>(std::getline(ca, fa, ','));
      const bool hb = static_cast<bool>(std::getline(cb, fb, ','));
      if (!ha && !hb) break;
      if (ha != hb) return "column count differs on line " + std::to_string(line);
      double xa, xb;
      if (parse_number(fa, xa) && parse_number(fb, xb)) {
        if (!close(xa, xb, tol)) return "value differs on line " + std::to_string(line) + ": " + fa + " vs " + fb;
      } else if (fa != fb) {
        return "field differs on line " + std::to_string(line);
      }
    }
  }
}

std::string compare_json(const json& a, const json& b, double tol, const std::string& where) {
  if (a.is_number() && b.is_number()) {
    if (!close(a.get<double>(), b.get<double>(), tol)) return "number differs at " + where;
    return {};
  }
  if (a.type() != b.type()) return "type differs at " + where;
  if (a.is_object()) {
    if (a.size() != b.size()) return "key set differs at " + where;
    for (const auto& [k, v] : a.items()) {
      if (!b.contains(k)) return "missing key " + where + "/" + k;
      auto r = compare_json(v, b.at(k), tol, where + "/" + k);
      if (!r.empty()) return r;
    }
    return {};
  }
  if (a.is_array()) {
    if (a.size() != b.size()) return "array length differs at " + where;
    for (std::size_t i = 0; i < a.size(); ++i) {
      auto r = compare_json(a[i], b[i], tol, where + "/" + std::to_string(i));
      if (!r.empty()) return r;
    }
    return {};
  }
  return a == b ? std::string{} : "value differs at " + where;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

std::vector<OutputDiff> compare_outputs(const std::filesystem::path& a,
                                        const std::filesystem::path& b,
                                        const std::vector<std::string>& files, double tol) {
  std::vector<OutputDiff> diffs;
  for (const auto& f : files) {
    std::string reason;
    try {
      const std::string da = slurp(a / f);
      const std::string db = slurp(b / f);
      if (ends_with(f, ".csv")) {
        reason = compare_csv(da, db, tol);
      } else if (ends_with(f, ".json")) {
        reason = compare_json(json::parse(da), json::parse(db), tol, "");
      } else if (da != db) {
        reason = "bytes differ";
      }
    } catch (const std::exception& e) {
      reason = e.what();
    }
    if (!reason.empty()) diffs.push_back({f, reason});
  }
  return diffs;
}

}  // namespace gravicav
