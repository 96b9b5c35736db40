#pragma once

// Run configuration: flat JSON file plus command-line flags, flags winning.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cavity/params.hpp"
#include "cavity/thermal.hpp"

namespace cavity::cli {

using nlohmann::json;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys{
      "g",          "omega_bar",   "alpha",     "delta",        "hbar",
      "c",          "kB",          "coupling_convention",       "beta",
      "temperature", "lambda_re",  "lambda_im", "t0",           "t1",
      "dt",         "modes",       "out",       "strict",       "deltas",
      "track_times", "window_t0",  "window_t1", "oracle_modes", "oracle_times",
      "corrupt_t_matrix"};
  return keys;
}

struct RunConfig {
  std::string command;

  std::optional<double> g;
  std::optional<double> alpha;
  double omega_bar = 0.0;
  double delta = 0.0;
  UnitSystem units{};
  CouplingConvention convention = CouplingConvention::ReproducesAsymptotics;

  std::vector<double> betas;         // resolved: explicit betas, then converted temperatures
  std::vector<double> temperatures;  // as given
  double lambda_re = 1.0;
  double lambda_im = 0.0;
  double t0 = 0.0;
  double t1 = 5.0;
  std::optional<double> dt;
  std::optional<int> modes;
  std::string out = ".";
  bool strict = false;

  std::vector<double> deltas;
  std::vector<double> track_times{2.3, 2.5};
  double window_t0 = 5.0;
  double window_t1 = 10.0;
  int oracle_modes = 64;
  int oracle_times = 50;
  bool corrupt_t_matrix = false;

  std::vector<std::string> defaults_applied;
  json resolved;  // every key with its final value

  /// Validated parameters for this config, optionally at another delta.
  CavityParams params(std::optional<double> other_delta = std::nullopt) const {
    const double d = other_delta.value_or(delta);
    if (alpha && !g) return build_params_from_alpha(*alpha, omega_bar, d, units, convention);
    return build_params(*g, omega_bar, d, units, convention);
  }

  double min_beta() const { return *std::min_element(betas.begin(), betas.end()); }
};

namespace detail {

inline std::vector<double> as_number_list(const json& v, const std::string& key) {
  std::vector<double> out;
  if (v.is_number()) {
    out.push_back(v.get<double>());
  } else if (v.is_array()) {
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(key + " must contain only numbers");
      out.push_back(e.get<double>());
    }
  } else {
    throw ConfigError(key + " must be a number or a list of numbers");
  }
  return out;
}

inline double as_number(const json& obj, const std::string& key) {
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(key + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(key + " must be finite");
  return x;
}

inline void require_positive(double x, const std::string& key) {
  if (!std::isfinite(x) || !(x > 0.0)) throw ConfigError(key + " must be positive");
}

}  // namespace detail

/// Builds a RunConfig from a flat JSON object. Unknown keys are rejected.
inline RunConfig resolve_config(const std::string& command, const json& input) {
  if (!input.is_object()) throw ConfigError("configuration must be a JSON object");
  for (const auto& [key, value] : input.items()) {
    if (!known_config_keys().contains(key)) throw ConfigError("unknown configuration key: " + key);
  }

  RunConfig cfg;
  cfg.command = command;
  auto has = [&](const char* k) { return input.contains(k) && !input.at(k).is_null(); };
  auto defaulted = [&](const char* k) { cfg.defaults_applied.emplace_back(k); };

  if (!has("omega_bar")) throw ConfigError("omega_bar is required");
  cfg.omega_bar = detail::as_number(input, "omega_bar");
  detail::require_positive(cfg.omega_bar, "omega_bar");
  if (!has("delta")) throw ConfigError("delta is required");
  cfg.delta = detail::as_number(input, "delta");
  detail::require_positive(cfg.delta, "delta");

  if (has("alpha")) {
    cfg.alpha = detail::as_number(input, "alpha");
    detail::require_positive(*cfg.alpha, "alpha");
  }
  if (has("g")) {
    cfg.g = detail::as_number(input, "g");
    detail::require_positive(*cfg.g, "g");
    if (cfg.alpha && std::abs(*cfg.g - *cfg.alpha * cfg.omega_bar) > 1e-12 * *cfg.g) {
      throw ConfigError("g is inconsistent with alpha * omega_bar");
    }
  } else if (cfg.alpha) {
    cfg.g = *cfg.alpha * cfg.omega_bar;
    cfg.defaults_applied.emplace_back("g=alpha*omega_bar");
  } else {
    throw ConfigError("g is required (or give alpha)");
  }

  if (has("hbar")) cfg.units.hbar = detail::as_number(input, "hbar"); else defaulted("hbar");
  if (has("c")) cfg.units.c = detail::as_number(input, "c"); else defaulted("c");
  if (has("kB")) cfg.units.kB = detail::as_number(input, "kB"); else defaulted("kB");
  detail::require_positive(cfg.units.hbar, "hbar");
  detail::require_positive(cfg.units.c, "c");
  detail::require_positive(cfg.units.kB, "kB");
  if (has("coupling_convention")) {
    if (!input.at("coupling_convention").is_string()) {
      throw ConfigError("coupling_convention must be a string");
    }
    try {
      cfg.convention = coupling_convention_from_string(input.at("coupling_convention").get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  } else {
    defaulted("coupling_convention");
  }

  if (has("beta")) {
    for (double b : detail::as_number_list(input.at("beta"), "beta")) {
      if (!(b > 0.0) || std::isnan(b)) throw ConfigError("beta must be positive");
      cfg.betas.push_back(b);
    }
  }
  if (has("temperature")) {
    for (double T : detail::as_number_list(input.at("temperature"), "temperature")) {
      detail::require_positive(T, "temperature");
      cfg.temperatures.push_back(T);
      cfg.betas.push_back(1.0 / (cfg.units.kB * T));
    }
  }
  const bool needs_beta = command != "spectrum";
  if (cfg.betas.empty() && needs_beta) throw ConfigError("beta (or temperature) is required");

  auto number_or_default = [&](const char* key, double& field) {
    if (has(key)) field = detail::as_number(input, key); else defaulted(key);
  };
  number_or_default("lambda_re", cfg.lambda_re);
  number_or_default("lambda_im", cfg.lambda_im);
  number_or_default("t0", cfg.t0);
  number_or_default("t1", cfg.t1);
  if (!(cfg.t1 > cfg.t0)) throw ConfigError("t1 must exceed t0");
  if (has("dt")) {
    cfg.dt = detail::as_number(input, "dt");
    detail::require_positive(*cfg.dt, "dt");
  } else {
    defaulted("dt");
  }
  if (has("modes")) {
    const auto& v = input.at("modes");
    if (!v.is_number_integer() || v.get<long long>() < 1) {
      throw ConfigError("modes must be a positive integer");
    }
    cfg.modes = v.get<int>();
  } else {
    defaulted("modes");
  }
  if (has("out")) {
    if (!input.at("out").is_string()) throw ConfigError("out must be a string");
    cfg.out = input.at("out").get<std::string>();
  } else {
    defaulted("out");
  }
  if (has("strict")) {
    if (!input.at("strict").is_boolean()) throw ConfigError("strict must be a boolean");
    cfg.strict = input.at("strict").get<bool>();
  }

  if (has("deltas")) {
    cfg.deltas = detail::as_number_list(input.at("deltas"), "deltas");
    for (double d : cfg.deltas) detail::require_positive(d, "deltas");
  } else {
    cfg.deltas = {cfg.delta};
    if (command == "sweep") defaulted("deltas");
  }
  if (has("track_times")) {
    cfg.track_times = detail::as_number_list(input.at("track_times"), "track_times");
  } else if (command == "sweep") {
    defaulted("track_times");
  }
  number_or_default("window_t0", cfg.window_t0);
  number_or_default("window_t1", cfg.window_t1);
  if (!(cfg.window_t1 > cfg.window_t0)) throw ConfigError("window_t1 must exceed window_t0");
  if (has("oracle_modes")) {
    const auto& v = input.at("oracle_modes");
    if (!v.is_number_integer() || v.get<long long>() < 1) {
      throw ConfigError("oracle_modes must be a positive integer");
    }
    cfg.oracle_modes = v.get<int>();
  }
  if (has("oracle_times")) {
    const auto& v = input.at("oracle_times");
    if (!v.is_number_integer() || v.get<long long>() < 1) {
      throw ConfigError("oracle_times must be a positive integer");
    }
    cfg.oracle_times = v.get<int>();
  }
  if (has("corrupt_t_matrix")) {
    if (!input.at("corrupt_t_matrix").is_boolean()) {
      throw ConfigError("corrupt_t_matrix must be a boolean");
    }
    cfg.corrupt_t_matrix = input.at("corrupt_t_matrix").get<bool>();
  }

  // Surface parameter validation (g, delta, ...) with the field name.
  try {
    (void)cfg.params();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  json r = json::object();
  r["command"] = cfg.command;
  r["g"] = *cfg.g;
  if (cfg.alpha) r["alpha"] = *cfg.alpha;
  r["omega_bar"] = cfg.omega_bar;
  r["delta"] = cfg.delta;
  r["hbar"] = cfg.units.hbar;
  r["c"] = cfg.units.c;
  r["kB"] = cfg.units.kB;
  r["coupling_convention"] = std::string(to_string(cfg.convention));
  r["beta"] = cfg.betas;
  r["temperature_input"] = cfg.temperatures;
  std::vector<double> temps;
  for (double b : cfg.betas) temps.push_back(1.0 / (cfg.units.kB * b));
  r["temperature"] = temps;
  r["lambda_re"] = cfg.lambda_re;
  r["lambda_im"] = cfg.lambda_im;
  r["t0"] = cfg.t0;
  r["t1"] = cfg.t1;
  r["dt"] = cfg.dt ? json(*cfg.dt) : json(nullptr);
  r["modes"] = cfg.modes ? json(*cfg.modes) : json(nullptr);
  r["out"] = cfg.out;
  r["strict"] = cfg.strict;
  r["deltas"] = cfg.deltas;
  r["track_times"] = cfg.track_times;
  r["window_t0"] = cfg.window_t0;
  r["window_t1"] = cfg.window_t1;
  r["oracle_modes"] = cfg.oracle_modes;
  r["oracle_times"] = cfg.oracle_times;
  r["corrupt_t_matrix"] = cfg.corrupt_t_matrix;
  cfg.resolved = std::move(r);
  return cfg;
}

inline json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file is not valid JSON: " + std::string(e.what()));
  }
}

/// Parses `cavity-run <command> [flags]`. Flags override the config file.
inline RunConfig parse_config(const std::vector<std::string>& args) {
  CLI::App app{"Dressed-state uncertainty dynamics in a heated spherical cavity", "cavity-run"};
  app.require_subcommand(1);
  for (const char* name : {"spectrum", "evolve", "sweep", "oracle-check"}) {
    app.add_subcommand(name)->fallthrough();
  }

  std::string config_path;
  double g = 0, omega_bar = 0, alpha = 0, delta = 0, lambda_re = 0, lambda_im = 0;
  double t0 = 0, t1 = 0, dt = 0;
  int modes = 0;
  std::vector<double> betas, temperatures, sweep_deltas;
  std::string out;
  bool strict = false;

  app.add_option("--config", config_path, "flat JSON config file");
  auto* o_g = app.add_option("--g", g, "coupling strength g");
  auto* o_wb = app.add_option("--omega-bar", omega_bar, "renormalized frequency");
  auto* o_alpha = app.add_option("--alpha", alpha, "g / omega_bar");
  auto* o_delta = app.add_option("--delta", delta, "cavity parameter g R / (pi c)");
  auto* o_beta = app.add_option("--beta", betas, "inverse temperature (repeatable)");
  auto* o_temp = app.add_option("--temperature", temperatures, "temperature, kB T = 1/beta (repeatable)");
  auto* o_lre = app.add_option("--lambda-re", lambda_re, "Re(lambda)");
  auto* o_lim = app.add_option("--lambda-im", lambda_im, "Im(lambda)");
  auto* o_t0 = app.add_option("--t0", t0, "start time");
  auto* o_t1 = app.add_option("--t1", t1, "end time");
  auto* o_dt = app.add_option("--dt", dt, "time step");
  auto* o_modes = app.add_option("--modes", modes, "field modes K");
  auto* o_out = app.add_option("--out", out, "output directory");
  auto* o_sd = app.add_option("--sweep-delta", sweep_deltas, "delta values for sweep (repeatable)");
  auto* o_strict = app.add_flag("--strict", strict, "treat warnings as errors");

  std::vector<const char*> argv{"cavity-run"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    throw ConfigError(app.help());
  } catch (const CLI::ParseError& e) {
    throw ConfigError(e.what());
  }

  std::string command;
  for (auto* sub : app.get_subcommands()) command = sub->get_name();

  json input = config_path.empty() ? json::object() : load_config_file(config_path);
  if (!input.is_object()) throw ConfigError("configuration must be a JSON object");
  if (*o_g) input["g"] = g;
  if (*o_wb) input["omega_bar"] = omega_bar;
  if (*o_alpha) input["alpha"] = alpha;
  if (*o_delta) input["delta"] = delta;
  if (*o_beta || *o_temp) {
    // Temperature flags replace any temperature given in the file.
    input.erase("beta");
    input.erase("temperature");
    if (*o_beta) input["beta"] = betas;
    if (*o_temp) input["temperature"] = temperatures;
  }
  if (*o_lre) input["lambda_re"] = lambda_re;
  if (*o_lim) input["lambda_im"] = lambda_im;
  if (*o_t0) input["t0"] = t0;
  if (*o_t1) input["t1"] = t1;
  if (*o_dt) input["dt"] = dt;
  if (*o_modes) input["modes"] = modes;
  if (*o_out) input["out"] = out;
  if (*o_sd) input["deltas"] = sweep_deltas;
  if (*o_strict) input["strict"] = strict;
  return resolve_config(command, input);
}

}  // namespace cavity::cli
