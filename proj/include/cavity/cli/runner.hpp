#pragma once

// Subcommands of cavity-run. Every command renders its data files to strings
// first, so the manifest can hash exactly the bytes written.

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "cavity/cli/config.hpp"
#include "cavity/cli/format.hpp"
#include "cavity/cli/manifest.hpp"
#include "cavity/dynamics.hpp"
#include "cavity/gaussian.hpp"
#include "cavity/spectrum.hpp"
#include "cavity/thermal.hpp"

namespace cavity::cli {

/// Raised when oracle-check finds a failing check; carries the check names.
class CheckFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kTailTolerance = 1e-8;

namespace detail {

inline std::string utc_timestamp(std::chrono::system_clock::time_point tp) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Collects rendered files and writes them with the manifest at the end.
class RunOutput {
 public:
  RunOutput(const RunConfig& cfg) : cfg_(cfg), start_(std::chrono::steady_clock::now()) {
    manifest_.command = cfg.command;
    manifest_.config = cfg.resolved;
    manifest_.defaults_applied = cfg.defaults_applied;
    manifest_.started_at = utc_timestamp(std::chrono::system_clock::now());
  }

  RunManifest& manifest() { return manifest_; }

  void warn(const std::string& message) {
    if (cfg_.strict) throw ConfigError("warning treated as error (--strict): " + message);
    manifest_.warnings.push_back(message);
  }

  void add(std::string name, std::string content) {
    files_.emplace_back(std::move(name), std::move(content));
  }

  std::vector<std::string> commit() {
    namespace fs = std::filesystem;
    const fs::path dir(cfg_.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("out: cannot create directory " + dir.string());
    std::vector<std::string> written;
    for (const auto& [name, content] : files_) {
      write_file(dir / name, content);
      manifest_.files.push_back({name, sha256_hex(content), content.size()});
      written.push_back((dir / name).string());
    }
    manifest_.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_file(dir / "manifest.json", serialize(manifest_));
    written.push_back((dir / "manifest.json").string());
    return written;
  }

 private:
  static void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("out: cannot write " + path.string());
    f << content;
    if (!f) throw std::runtime_error("out: write failed for " + path.string());
  }

  const RunConfig& cfg_;
  std::chrono::steady_clock::time_point start_;
  RunManifest manifest_;
  std::vector<std::pair<std::string, std::string>> files_;
};

inline void row(std::ostream& os, std::initializer_list<std::string> cells) {
  write_csv_row(os, std::span<const std::string>(cells.begin(), cells.size()));
}

inline void row(std::ostream& os, const std::vector<std::string>& cells) { write_csv_row(os, cells); }

inline std::string beta_label(double beta) { return format_number(beta); }

/// K from --modes, otherwise the smallest K meeting the thermal tail tolerance
/// for the hottest temperature (64 when no temperature is given).
inline int resolve_modes(const RunConfig& cfg, const CavityParams& p) {
  if (cfg.modes) return *cfg.modes;
  if (cfg.betas.empty()) return 64;
  return choose_field_modes(p, cfg.min_beta(), kTailTolerance);
}

inline double tail_bound(const RunConfig& cfg, const CavityParams& p, int K) {
  if (cfg.betas.empty()) return 0.0;
  return thermal_tail_bound(p, cfg.min_beta(), K);
}

inline void record_truncation(RunOutput& out, const RunConfig& cfg, const CavityParams& p, int K) {
  auto& m = out.manifest();
  m.field_modes = K;
  m.normal_modes = K + 1;
  m.tail_bound = tail_bound(cfg, p, K);
  if (cfg.modes && m.tail_bound >= kTailTolerance) {
    out.warn("thermal tail bound " + format_number(m.tail_bound) + " at K=" + std::to_string(K) +
             " exceeds " + format_number(kTailTolerance));
  }
}

inline std::vector<ThermalConfig> thermal_configs(const RunConfig& cfg, const CavityParams& p, int K) {
  std::vector<ThermalConfig> out;
  for (double b : cfg.betas) out.push_back(occupations(p, b, K));
  return out;
}

/// Extremum closest in time to `target`, if any.
inline const Extremum* nearest_extremum(const std::vector<Extremum>& ex, double target) {
  const Extremum* best = nullptr;
  for (const auto& e : ex) {
    if (!best || std::abs(e.time - target) < std::abs(best->time - target)) best = &e;
  }
  return best;
}

}  // namespace detail

inline std::vector<std::string> cmd_spectrum(const RunConfig& cfg) {
  detail::RunOutput out(cfg);
  const CavityParams p = cfg.params();
  const int K = detail::resolve_modes(cfg, p);
  detail::record_truncation(out, cfg, p, K);
  const Spectrum s = exact_spectrum(p, Truncation::full(K));
  for (const auto& w : s.warnings) out.warn(w);

  std::ostringstream csv;
  detail::row(csv, {"r", "omega", "t0", "branch"});
  for (int r = 0; r < s.normal_modes(); ++r) {
    const auto i = static_cast<std::size_t>(r);
    detail::row(csv, {std::to_string(r), format_number(s.omega[i]), format_number(s.t0[i]),
                      std::to_string(s.roots[i].branch)});
  }
  std::ostringstream txt;
  write_spectrum_text(txt, s);
  out.add("spectrum.csv", csv.str());
  out.add("spectrum.txt", txt.str());
  return out.commit();
}

inline std::vector<std::string> cmd_evolve(const RunConfig& cfg) {
  detail::RunOutput out(cfg);
  const CavityParams p = cfg.params();
  const int K = detail::resolve_modes(cfg, p);
  detail::record_truncation(out, cfg, p, K);
  const Spectrum s = exact_spectrum(p, Truncation::full(K));
  const auto thermals = detail::thermal_configs(cfg, p, K);
  const double dt = cfg.dt.value_or(default_time_step(s));
  out.manifest().config["dt_used"] = dt;
  const auto series = series_multi(p, s, thermals, Complex(cfg.lambda_re, cfg.lambda_im),
                                   TimeGrid{cfg.t0, cfg.t1, dt});

  std::ostringstream sc, mc, vc, pc, ec;
  std::vector<std::string> header{"t"};
  std::vector<std::string> vheader{"t"};
  for (double b : cfg.betas) {
    header.push_back("delta_beta_" + detail::beta_label(b));
    vheader.push_back("var_q0_beta_" + detail::beta_label(b));
    vheader.push_back("var_p0_beta_" + detail::beta_label(b));
  }
  detail::row(sc, header);
  detail::row(vc, vheader);
  detail::row(mc, {"t", "mean_q0", "mean_p0"});
  detail::row(pc, {"t", "survival"});
  const auto& first = series.front();
  for (std::size_t i = 0; i < first.size(); ++i) {
    const std::string t = format_number(first.time[i]);
    std::vector<std::string> cells{t};
    std::vector<std::string> vcells{t};
    for (const auto& ser : series) {
      cells.push_back(format_number(ser.delta_product[i]));
      vcells.push_back(format_number(ser.var_q0[i]));
      vcells.push_back(format_number(ser.var_p0[i]));
    }
    detail::row(sc, cells);
    detail::row(vc, vcells);
    // Means and survival do not depend on the temperature.
    detail::row(mc, {t, format_number(first.mean_q0[i]), format_number(first.mean_p0[i])});
    detail::row(pc, {t, format_number(first.survival[i])});
  }
  detail::row(ec, {"beta", "t", "value", "kind"});
  for (const auto& ser : series) {
    for (const auto& e : extrema_scan(ser)) {
      detail::row(ec, {detail::beta_label(ser.beta), format_number(e.time), format_number(e.value),
                       to_string(e.kind)});
    }
  }
  out.add("series.csv", sc.str());
  out.add("means.csv", mc.str());
  out.add("variances.csv", vc.str());
  out.add("survival.csv", pc.str());
  out.add("extrema.csv", ec.str());
  return out.commit();
}

struct SweepPoint {
  double delta = 0.0;
  int K = 0;
  double tail_bound = 0.0;
  std::vector<std::string> warnings;
  std::vector<ObservableSeries> series;
};

/// One delta of a sweep: spectrum plus the series for every beta.
inline SweepPoint sweep_point(const RunConfig& cfg, double delta) {
  SweepPoint pt;
  pt.delta = delta;
  const CavityParams p = cfg.params(delta);
  pt.K = detail::resolve_modes(cfg, p);
  pt.tail_bound = detail::tail_bound(cfg, p, pt.K);
  const Spectrum s = exact_spectrum(p, Truncation::full(pt.K));
  pt.warnings = s.warnings;
  const auto thermals = detail::thermal_configs(cfg, p, pt.K);
  const double dt = cfg.dt.value_or(default_time_step(s));
  const double t1 = std::max(cfg.t1, cfg.window_t1);
  pt.series = series_multi(p, s, thermals, Complex(cfg.lambda_re, cfg.lambda_im),
                           TimeGrid{cfg.t0, t1, dt});
  return pt;
}

inline std::vector<std::string> cmd_sweep(const RunConfig& cfg) {
  detail::RunOutput out(cfg);
  if (cfg.window_t0 < cfg.t0) throw ConfigError("window_t0 must not precede t0");

  // Points run concurrently; results are collected in input order.
  std::vector<std::future<SweepPoint>> jobs;
  for (double d : cfg.deltas) {
    jobs.push_back(std::async(std::launch::async, sweep_point, std::cref(cfg), d));
  }
  std::vector<SweepPoint> points;
  for (auto& j : jobs) points.push_back(j.get());

  auto& m = out.manifest();
  nlohmann::json per_delta = nlohmann::json::array();
  for (const auto& pt : points) {
    for (const auto& w : pt.warnings) out.warn("delta=" + format_number(pt.delta) + ": " + w);
    m.field_modes = std::max(m.field_modes, pt.K);
    m.normal_modes = std::max(m.normal_modes, pt.K + 1);
    m.tail_bound = std::max(m.tail_bound, pt.tail_bound);
    per_delta.push_back({{"delta", pt.delta}, {"field_modes", pt.K}, {"tail_bound", pt.tail_bound}});
  }
  m.config["truncation_per_delta"] = per_delta;

  std::ostringstream csv;
  std::vector<std::string> header{"delta", "beta", "temperature", "K", "plateau_mean", "amplitude"};
  for (std::size_t i = 0; i < cfg.track_times.size(); ++i) {
    const std::string k = "track" + std::to_string(i + 1);
    for (const char* suffix : {"_target", "_t", "_value", "_kind"}) header.push_back(k + suffix);
  }
  detail::row(csv, header);
  for (const auto& pt : points) {
    for (const auto& ser : pt.series) {
      const Plateau pl = plateau_estimate(ser, cfg.window_t0, cfg.window_t1);
      const auto ex = extrema_scan(ser);
      std::vector<std::string> cells{format_number(pt.delta), format_number(ser.beta),
                                     format_number(1.0 / (cfg.units.kB * ser.beta)),
                                     std::to_string(pt.K), format_number(pl.mean),
                                     format_number(pl.amplitude)};
      for (double target : cfg.track_times) {
        cells.push_back(format_number(target));
        if (const Extremum* e = detail::nearest_extremum(ex, target)) {
          cells.push_back(format_number(e->time));
          cells.push_back(format_number(e->value));
          cells.push_back(to_string(e->kind));
        } else {
          cells.insert(cells.end(), {"nan", "nan", "none"});
        }
      }
      detail::row(csv, cells);
    }
  }
  out.add("sweep.csv", csv.str());
  return out.commit();
}

struct CheckResult {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool passed = false;
};

/// Runs the oracle check suite and returns the JSON report.
inline nlohmann::json run_oracle_checks(const RunConfig& cfg) {
  const CavityParams p = cfg.params();
  const int K = cfg.modes.value_or(cfg.oracle_modes);
  const Complex lambda(cfg.lambda_re, cfg.lambda_im);
  Spectrum s = exact_spectrum(p, Truncation::full(K));
  if (cfg.corrupt_t_matrix) {
    // Test hook: break orthogonality of one column.
    s.t0[1] *= 1.001;
  }

  std::vector<double> times;
  const int n = cfg.oracle_times;
  for (int i = 0; i < n; ++i) {
    times.push_back(n == 1 ? cfg.t0 : cfg.t0 + (cfg.t1 - cfg.t0) * i / (n - 1));
  }

  std::vector<CheckResult> checks;
  auto add = [&](std::string name, double value, double threshold) {
    checks.push_back({std::move(name), value, threshold, value <= threshold});
  };

  const auto od = orthonormality_defect(s);
  add("orthonormality", std::max(od.columns, od.rows), 1e-10);

  const Spectrum dense = dense_diagonalize(p, K);
  add("spectrum-vs-dense-frequencies", max_frequency_deviation(s, dense, K + 1), 1e-9);
  add("spectrum-vs-dense-elements", max_element_difference(s, dense, K + 1), 1e-8);

  double oracle_dev = 0.0;
  double mean_dev = 0.0;
  double energy_dev = 0.0;
  double robertson = std::numeric_limits<double>::infinity();
  double initial_dev = 0.0;

  const ThermalConfig cold = occupations(p, std::numeric_limits<double>::infinity(), K);
  const GaussianPropagator cold_prop(p, s, initial_state(p, s, lambda, cold));
  const double q_ref = std::sqrt(0.5 * p.hbar() / p.omega_bar()) * std::max(1.0, 2.0 * std::abs(lambda));
  const double p_ref = std::sqrt(0.5 * p.hbar() * p.omega_bar()) * std::max(1.0, 2.0 * std::abs(lambda));

  std::vector<double> energy_times;
  for (int i = 0; i <= 20; ++i) energy_times.push_back(5.0 * i);

  for (double beta : cfg.betas) {
    const ThermalConfig th = occupations(p, beta, K);
    oracle_dev = std::max(oracle_dev, oracle_compare(p, s, lambda, th, times).max_deviation);

    const CovarianceState init = initial_state(p, s, lambda, th);
    const GaussianPropagator prop(p, s, init);
    for (double t : times) {
      const auto a = prop.particle(t);
      const auto b = cold_prop.particle(t);
      mean_dev = std::max({mean_dev, std::abs(a.mean_q0 - b.mean_q0) / q_ref,
                           std::abs(a.mean_p0 - b.mean_p0) / p_ref});
    }

    const double e0 = mean_energy(p, s, init);
    for (double t : energy_times) {
      const CovarianceState st = evolve(init, p, s, t);
      energy_dev = std::max(energy_dev, std::abs(mean_energy(p, s, st) - e0) / std::abs(e0));
      robertson = std::min(robertson, robertson_margin(st, p.hbar()));
    }

    const double d0 = uncertainty_product(p, s, th, 0.0);
    initial_dev = std::max(initial_dev, std::abs(d0 / p.hbar() - 0.5));
    initial_dev = std::max(initial_dev,
                           std::abs(init.marginal_determinant(0) / (0.25 * p.hbar() * p.hbar()) - 1.0));
  }
  add("oracle-equivalence", oracle_dev, 1e-8);
  add("mean-temperature-independence", mean_dev, 1e-10);
  add("energy-conservation", energy_dev, 1e-10);
  add("robertson", -robertson, 1e-12);
  add("initial-condition", initial_dev, 1e-12);

  nlohmann::json report;
  report["field_modes"] = K;
  report["times"] = times.size();
  bool all = true;
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : checks) {
    arr.push_back({{"name", c.name}, {"value", c.value}, {"threshold", c.threshold}, {"passed", c.passed}});
    all = all && c.passed;
  }
  report["checks"] = arr;
  report["passed"] = all;
  return report;
}

inline std::vector<std::string> cmd_oracle_check(const RunConfig& cfg) {
  detail::RunOutput out(cfg);
  const CavityParams p = cfg.params();
  const int K = cfg.modes.value_or(cfg.oracle_modes);
  auto& m = out.manifest();
  m.field_modes = K;
  m.normal_modes = K + 1;
  m.tail_bound = detail::tail_bound(cfg, p, K);

  const nlohmann::json report = run_oracle_checks(cfg);
  out.add("oracle_report.json", report.dump(2) + "\n");
  auto files = out.commit();

  std::string failed;
  for (const auto& c : report["checks"]) {
    if (!c["passed"].get<bool>()) failed += (failed.empty() ? "" : ", ") + c["name"].get<std::string>();
  }
  if (!failed.empty()) throw CheckFailure("failed checks: " + failed);
  return files;
}

/// Entry point shared by the executable and the tests. Exit codes: 0 success,
/// 1 configuration or runtime error, 2 failed oracle check.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    const RunConfig cfg = parse_config(args);
    std::vector<std::string> files;
    if (cfg.command == "spectrum") files = cmd_spectrum(cfg);
    else if (cfg.command == "evolve") files = cmd_evolve(cfg);
    else if (cfg.command == "sweep") files = cmd_sweep(cfg);
    else files = cmd_oracle_check(cfg);
    for (const auto& f : files) out << f << '\n';
    return 0;
  } catch (const CheckFailure& e) {
    err << "cavity-run: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "cavity-run: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace cavity::cli
