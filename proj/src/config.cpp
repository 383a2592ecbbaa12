#include "gravicav/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>
#include <type_traits>

namespace gravicav {

namespace {

using nlohmann::json;

// One row per documented key: how to read it from and write it to a RunConfig.
struct Field {
  std::string key;
  std::function<json(const RunConfig&)> get;
  std::function<void(RunConfig&, const json&)> set;
};

template <typename T>
Field field(std::string key, T RunConfig::*member) {
  return {key, [member](const RunConfig& c) { return json(c.*member); },
          [member](RunConfig& c, const json& v) {
            if constexpr (std::is_integral_v<T>)
              if (!v.is_number_integer()) throw ConfigError("expected an integer");
            c.*member = v.get<T>();
          }};
}

template <typename T>
Field system_field(std::string key, T SystemParams::*member) {
  return {key, [member](const RunConfig& c) { return json(c.system.*member); },
          [member](RunConfig& c, const json& v) { c.system.*member = v.get<T>(); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      system_field("V0", &SystemParams::V0),
      system_field("kappa", &SystemParams::kappa),
      system_field("lambda", &SystemParams::lambda),
      system_field("kbar", &SystemParams::kbar),
      system_field("V_clamp", &SystemParams::V_clamp),
      field("z_min", &RunConfig::z_min),
      field("z_max", &RunConfig::z_max),
      field("N", &RunConfig::N),
      field("steps_per_period", &RunConfig::steps_per_period),
      field("t_total", &RunConfig::t_total),
      field("output_every", &RunConfig::output_every),
      field("snapshot_every", &RunConfig::snapshot_every),
      field("sigma_z", &RunConfig::sigma_z),
      field("classical_steps_per_period", &RunConfig::classical_steps_per_period),
      field("poincare_periods", &RunConfig::poincare_periods),
      field("poincare_seed_cols", &RunConfig::poincare_seed_cols),
      field("poincare_seed_rows", &RunConfig::poincare_seed_rows),
      field("poincare_z_lo", &RunConfig::poincare_z_lo),
      field("poincare_z_hi", &RunConfig::poincare_z_hi),
      field("poincare_p_lo", &RunConfig::poincare_p_lo),
      field("poincare_p_hi", &RunConfig::poincare_p_hi),
      field("lyapunov_periods", &RunConfig::lyapunov_periods),
      field("T_cl_hint", &RunConfig::T_cl_hint),
      field("revival_threshold", &RunConfig::revival_threshold),
      field("lambda_u_threshold", &RunConfig::lambda_u_threshold),
      field("resonance_order", &RunConfig::resonance_order),
      field("scan_horizon", &RunConfig::scan_horizon),
      field("floquet_N", &RunConfig::floquet_N),
      field("floquet_z_min", &RunConfig::floquet_z_min),
      field("floquet_z_max", &RunConfig::floquet_z_max),
      field("floquet_steps_per_period", &RunConfig::floquet_steps_per_period),
      field("overlap_threshold", &RunConfig::overlap_threshold),
      field("action_radius", &RunConfig::action_radius),
  };
  return table;
}

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void apply(RunConfig& cfg, const std::string& key, const json& value) {
  for (const auto& f : fields()) {
    if (f.key != key) continue;
    if (value.is_null() || value.is_object() || value.is_array() || value.is_string() ||
        value.is_boolean())
      throw ConfigError("config key '" + key + "' must be a number");
    try {
      f.set(cfg, value);
    } catch (const std::exception& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
    return;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

void RunConfig::validate() const {
  system.validate();
  if (!(z_min < 0.0 && 0.0 < z_max)) throw ConfigError("grid must satisfy z_min < 0 < z_max");
  if (N < 256 || !power_of_two(N)) throw ConfigError("N must be a power of two >= 256");
  if (steps_per_period < 512) throw ConfigError("steps_per_period must be >= 512");
  if (!(t_total > 0.0)) throw ConfigError("t_total must be positive");
  if (output_every < 1) throw ConfigError("output_every must be >= 1");
  if (snapshot_every < 0) throw ConfigError("snapshot_every must be >= 0");
  if (snapshot_every > 0 && snapshot_every % output_every != 0)
    throw ConfigError("snapshot_every must be a multiple of output_every");
  if (!(sigma_z > 0.0)) throw ConfigError("sigma_z must be positive");
  if (classical_steps_per_period < 200) throw ConfigError("classical_steps_per_period must be >= 200");
  if (poincare_periods < 1) throw ConfigError("poincare_periods must be >= 1");
  if (poincare_seed_cols < 1 || poincare_seed_rows < 1) throw ConfigError("poincare seed lattice must be non-empty");
  if (lyapunov_periods < 1000) throw ConfigError("lyapunov_periods must be >= 1000");
  if (!(T_cl_hint >= 0.0)) throw ConfigError("T_cl_hint must be >= 0");
  if (!(revival_threshold > 0.0 && revival_threshold <= 1.0)) throw ConfigError("revival_threshold must lie in (0, 1]");
  if (!(lambda_u_threshold > 0.0 && lambda_u_threshold <= 1.0)) throw ConfigError("lambda_u_threshold must lie in (0, 1]");
  if (resonance_order < 1) throw ConfigError("resonance_order must be >= 1");
  if (!(scan_horizon >= 0.0)) throw ConfigError("scan_horizon must be >= 0");
  if (!(floquet_z_min < 0.0 && 0.0 < floquet_z_max)) throw ConfigError("floquet grid must satisfy z_min < 0 < z_max");
  if (floquet_N < 256 || floquet_N > 1024 || !power_of_two(floquet_N))
    throw ConfigError("floquet_N must be a power of two in [256, 1024]");
  if (floquet_steps_per_period < 512) throw ConfigError("floquet_steps_per_period must be >= 512");
  if (!(overlap_threshold > 0.0 && overlap_threshold < 1.0)) throw ConfigError("overlap_threshold must lie in (0, 1)");
  if (!(action_radius > 0.0)) throw ConfigError("action_radius must be positive");
}

nlohmann::json to_json(const RunConfig& cfg) {
  json j = json::object();
  for (const auto& f : fields()) j[f.key] = f.get(cfg);
  return j;
}

RunConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig cfg;
  for (const auto& [key, value] : j.items()) apply(cfg, key, value);
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

RunConfig apply_overrides(const RunConfig& base, const std::vector<std::string>& overrides) {
  RunConfig cfg = base;
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("override '" + item + "' is not key=value");
    const std::string key = item.substr(0, eq);
    json value;
    try {
      value = json::parse(item.substr(eq + 1));
    } catch (const json::exception&) {
      throw ConfigError("override '" + item + "': value is not a number");
    }
    apply(cfg, key, value);
  }
  cfg.validate();
  return cfg;
}

}  // namespace gravicav
