#pragma once

// Time-dependent observables of the dressed particle in a dressed coherent
// state |lambda> with the dressed field modes in thermal equilibrium.
//
// Everything is expressed through
//   f_{mu nu}(t) = sum_s t_mu^s t_nu^s exp(-i Omega_s t):
//   <q'_0>(t)      = sqrt(hbar / 2 omega_bar) (lambda f_00 + c.c.)
//   <p'_0>(t)      = -i sqrt(hbar omega_bar / 2) (lambda f_00 - c.c.)
//   (dq'_0)^2      = hbar / (2 omega_bar) + (hbar / omega_bar) sum_k |f_0k|^2 n_k
//   (dp'_0)^2      = hbar omega_bar / 2 + hbar omega_bar sum_k |f_0k|^2 n_k
//   dq'_0 dp'_0    = hbar / 2 + hbar sum_k |f_0k|^2 n_k
//   P(t)           = |f_00(t)|^2

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cavity/params.hpp"
#include "cavity/spectrum.hpp"
#include "cavity/thermal.hpp"

namespace cavity {

using Complex = std::complex<double>;

namespace detail {

inline void require_matching(const Spectrum& s, const ThermalConfig& th) {
  if (th.field_modes() != s.field_modes()) {
    throw std::invalid_argument("thermal occupations and spectrum use different field-mode counts");
  }
}

inline void require_mode(const Spectrum& s, int mu) {
  if (mu < 0 || mu > s.field_modes()) throw std::out_of_range("mode index outside the truncation");
}

}  // namespace detail

inline Complex f_element(const Spectrum& s, int mu, int nu, double t) {
  detail::require_mode(s, mu);
  detail::require_mode(s, nu);
  Complex acc = 0.0;
  for (int r = 0; r < s.normal_modes(); ++r) {
    const double w = s.t(mu, r) * s.t(nu, r);
    const double ph = s.omega[static_cast<std::size_t>(r)] * t;
    acc += w * Complex(std::cos(ph), -std::sin(ph));
  }
  return acc;
}

/// Precomputed products t_0^s t_k^s for repeated evaluation of the particle
/// row f_{0 nu}(t). Holds a reference to the spectrum.
class ParticleRow {
 public:
  explicit ParticleRow(const Spectrum& s)
      : spectrum_(&s),
        weights_(static_cast<std::size_t>(s.field_modes() + 1),
                 static_cast<std::size_t>(s.normal_modes())),
        cos_(static_cast<std::size_t>(s.normal_modes())),
        sin_(static_cast<std::size_t>(s.normal_modes())) {
    for (int mu = 0; mu <= s.field_modes(); ++mu)
      for (int r = 0; r < s.normal_modes(); ++r)
        weights_(static_cast<std::size_t>(mu), static_cast<std::size_t>(r)) = s.t(0, r) * s.t(mu, r);
  }

  const Spectrum& spectrum() const { return *spectrum_; }

  /// f_{0 nu}(t) for nu = 0..K.
  std::vector<Complex> evaluate(double t) {
    set_phases(t);
    std::vector<Complex> out(weights_.rows());
    for (std::size_t mu = 0; mu < weights_.rows(); ++mu) out[mu] = contract(mu);
    return out;
  }

  /// f_00(t) and |f_{0k}(t)|^2 for k = 1..K (index k-1).
  Complex evaluate_moduli(double t, std::vector<double>& moduli_sq) {
    set_phases(t);
    moduli_sq.resize(weights_.rows() - 1);
    for (std::size_t k = 1; k < weights_.rows(); ++k) moduli_sq[k - 1] = std::norm(contract(k));
    return contract(0);
  }

 private:
  void set_phases(double t) {
    const auto& om = spectrum_->omega;
    for (std::size_t r = 0; r < om.size(); ++r) {
      const double ph = om[r] * t;
      cos_[r] = std::cos(ph);
      sin_[r] = std::sin(ph);
    }
  }

  Complex contract(std::size_t mu) const {
    auto w = weights_.row(mu);
    double re = 0.0;
    double im = 0.0;
    for (std::size_t r = 0; r < w.size(); ++r) {
      re += w[r] * cos_[r];
      im -= w[r] * sin_[r];
    }
    return {re, im};
  }

  const Spectrum* spectrum_;
  Matrix weights_;
  std::vector<double> cos_;
  std::vector<double> sin_;
};

/// sum_nu |f_{0 nu}(t)|^2, equal to one for an orthogonal transformation.
inline double unitarity_sum(const Spectrum& s, double t) {
  ParticleRow row(s);
  double acc = 0.0;
  for (const Complex& f : row.evaluate(t)) acc += std::norm(f);
  return acc;
}

/// sum_k n_k |f_0k(t)|^2.
inline double thermal_weight(const Spectrum& s, const ThermalConfig& th, double t) {
  detail::require_matching(s, th);
  ParticleRow row(s);
  std::vector<double> moduli;
  row.evaluate_moduli(t, moduli);
  double acc = 0.0;
  for (std::size_t k = 0; k < moduli.size(); ++k) acc += th.occupations[k] * moduli[k];
  return acc;
}

inline double mean_q0(const CavityParams& p, const Spectrum& s, Complex lambda, double t) {
  const Complex f = f_element(s, 0, 0, t);
  return std::sqrt(2.0 * p.hbar() / p.omega_bar()) * (lambda * f).real();
}

inline double mean_p0(const CavityParams& p, const Spectrum& s, Complex lambda, double t) {
  const Complex f = f_element(s, 0, 0, t);
  return std::sqrt(2.0 * p.hbar() * p.omega_bar()) * (lambda * f).imag();
}

inline double var_q0(const CavityParams& p, const Spectrum& s, const ThermalConfig& th, double t) {
  return p.hbar() / p.omega_bar() * (0.5 + thermal_weight(s, th, t));
}

inline double var_p0(const CavityParams& p, const Spectrum& s, const ThermalConfig& th, double t) {
  return p.hbar() * p.omega_bar() * (0.5 + thermal_weight(s, th, t));
}

/// dq'_0 dp'_0 = hbar/2 + hbar sum_k |f_0k|^2 n_k.
inline double uncertainty_product(const CavityParams& p, const Spectrum& s, const ThermalConfig& th,
                                  double t) {
  return p.hbar() * (0.5 + thermal_weight(s, th, t));
}

/// The same product written as the explicit triple sum over normal-mode pairs,
///   hbar/2 + hbar sum_k n_k [ (t_0^0 t_k^0)^2
///                           + 2 sum_l t_0^0 t_0^l t_k^0 t_k^l cos((Omega_0 - Omega_l) t)
///                           + sum_{l,n} t_0^l t_0^n t_k^l t_k^n cos((Omega_l - Omega_n) t) ].
/// O(K S^2) per time; meant as a cross-check.
inline double uncertainty_product_expanded(const CavityParams& p, const Spectrum& s,
                                           const ThermalConfig& th, double t) {
  detail::require_matching(s, th);
  const int S = s.normal_modes();
  double total = 0.0;
  for (int k = 1; k <= s.field_modes(); ++k) {
    const double n = th.occupations[static_cast<std::size_t>(k - 1)];
    if (n == 0.0) continue;
    const double a0 = s.t(0, 0) * s.t(k, 0);
    double bracket = a0 * a0;
    double cross = 0.0;
    for (int l = 1; l < S; ++l) {
      cross += a0 * s.t(0, l) * s.t(k, l) *
               std::cos((s.omega[0] - s.omega[static_cast<std::size_t>(l)]) * t);
    }
    bracket += 2.0 * cross;
    double pairs = 0.0;
    for (int l = 1; l < S; ++l) {
      const double al = s.t(0, l) * s.t(k, l);
      for (int m = 1; m < S; ++m) {
        pairs += al * s.t(0, m) * s.t(k, m) *
                 std::cos((s.omega[static_cast<std::size_t>(l)] - s.omega[static_cast<std::size_t>(m)]) * t);
      }
    }
    bracket += pairs;
    total += n * bracket;
  }
  return p.hbar() * (0.5 + total);
}

inline double survival_probability(const Spectrum& s, double t) {
  return std::norm(f_element(s, 0, 0, t));
}

/// Uniform grid t_i = t0 + i dt covering [t0, t1].
struct TimeGrid {
  double t0 = 0.0;
  double t1 = 0.0;
  double dt = 0.0;

  std::size_t samples() const {
    return static_cast<std::size_t>(std::floor((t1 - t0) / dt + 1e-9)) + 1;
  }
  double at(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
};

/// Resolves the fastest retained normal mode with eight samples per period.
inline double default_time_step(const Spectrum& s) {
  return 2.0 * std::numbers::pi / s.omega.back() / 8.0;
}

struct ObservableSeries {
  double beta = 0.0;
  std::vector<double> time;
  std::vector<double> mean_q0;
  std::vector<double> mean_p0;
  std::vector<double> var_q0;
  std::vector<double> var_p0;
  std::vector<double> delta_product;
  std::vector<double> survival;

  std::size_t size() const { return time.size(); }
};

inline constexpr std::size_t kDefaultMaxSamples = 2'000'000;

/// Observables on a grid for several temperatures sharing one spectrum. The
/// f_{0k} are evaluated once per time and reused for every temperature.
inline std::vector<ObservableSeries> series_multi(const CavityParams& p, const Spectrum& s,
                                                  std::span<const ThermalConfig> thermals,
                                                  Complex lambda, const TimeGrid& grid,
                                                  std::size_t max_samples = kDefaultMaxSamples) {
  if (!(grid.dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (grid.t1 < grid.t0) throw std::invalid_argument("t1 must not precede t0");
  for (const auto& th : thermals) detail::require_matching(s, th);
  const double span_samples = (grid.t1 - grid.t0) / grid.dt;
  if (span_samples + 1.0 > static_cast<double>(max_samples)) {
    throw std::invalid_argument("time grid has more than " + std::to_string(max_samples) +
                                " samples; use a coarser dt");
  }
  const std::size_t n = grid.samples();

  std::vector<ObservableSeries> out(thermals.size());
  for (std::size_t b = 0; b < thermals.size(); ++b) {
    auto& o = out[b];
    o.beta = thermals[b].beta;
    for (auto* v : {&o.time, &o.mean_q0, &o.mean_p0, &o.var_q0, &o.var_p0, &o.delta_product,
                    &o.survival})
      v->resize(n);
  }

  const double hbar = p.hbar();
  const double wb = p.omega_bar();
  const double q_scale = std::sqrt(2.0 * hbar / wb);
  const double p_scale = std::sqrt(2.0 * hbar * wb);

  ParticleRow row(s);
  std::vector<double> moduli;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = grid.at(i);
    const Complex f00 = row.evaluate_moduli(t, moduli);
    const Complex lf = lambda * f00;
    for (std::size_t b = 0; b < thermals.size(); ++b) {
      const auto& occ = thermals[b].occupations;
      double w = 0.0;
      for (std::size_t k = 0; k < occ.size(); ++k) w += occ[k] * moduli[k];
      auto& o = out[b];
      o.time[i] = t;
      o.mean_q0[i] = q_scale * lf.real();
      o.mean_p0[i] = p_scale * lf.imag();
      o.var_q0[i] = hbar / wb * (0.5 + w);
      o.var_p0[i] = hbar * wb * (0.5 + w);
      o.delta_product[i] = hbar * (0.5 + w);
      o.survival[i] = std::norm(f00);
    }
  }
  return out;
}

inline ObservableSeries series(const CavityParams& p, const Spectrum& s, const ThermalConfig& th,
                               Complex lambda, double t0, double t1, double dt,
                               std::size_t max_samples = kDefaultMaxSamples) {
  return std::move(series_multi(p, s, std::span<const ThermalConfig>(&th, 1), lambda,
                                TimeGrid{t0, t1, dt}, max_samples)
                       .front());
}

enum class ExtremumKind { Minimum, Maximum };

inline const char* to_string(ExtremumKind k) { return k == ExtremumKind::Minimum ? "min" : "max"; }

struct Extremum {
  double time;
  double value;
  ExtremumKind kind;
};

/// Interior local extrema from sign changes of the first difference, refined
/// by a parabola through the three neighbouring samples. Time-ordered.
inline std::vector<Extremum> extrema_scan(std::span<const double> time,
                                          std::span<const double> values) {
  if (time.size() != values.size()) throw std::invalid_argument("extrema_scan: size mismatch");
  std::vector<Extremum> out;
  for (std::size_t i = 1; i + 1 < values.size(); ++i) {
    const double dl = values[i] - values[i - 1];
    const double dr = values[i + 1] - values[i];
    ExtremumKind kind;
    if (dl > 0.0 && dr < 0.0) {
      kind = ExtremumKind::Maximum;
    } else if (dl < 0.0 && dr > 0.0) {
      kind = ExtremumKind::Minimum;
    } else {
      continue;
    }
    const double h = time[i] - time[i - 1];
    const double curvature = values[i - 1] - 2.0 * values[i] + values[i + 1];
    const double shift = 0.5 * (values[i - 1] - values[i + 1]) / curvature;
    out.push_back({time[i] + shift * h, values[i] - 0.25 * (values[i - 1] - values[i + 1]) * shift,
                   kind});
  }
  return out;
}

inline std::vector<Extremum> extrema_scan(const ObservableSeries& s) {
  return extrema_scan(s.time, s.delta_product);
}

struct Plateau {
  double mean = 0.0;
  double amplitude = 0.0;  // (max - min) / 2
};

/// Time mean and half peak-to-peak of the uncertainty product over [ta, tb].
inline Plateau plateau_estimate(const ObservableSeries& s, double ta, double tb) {
  if (s.size() == 0 || !(ta <= tb)) throw std::invalid_argument("invalid plateau window");
  // One grid step of slack: the last sample may fall short of t1.
  const double step = s.size() > 1 ? s.time[1] - s.time[0] : 0.0;
  const double slack = step + 1e-9 * std::max(1.0, std::abs(s.time.back()));
  if (ta < s.time.front() - slack || tb > s.time.back() + slack) {
    throw std::out_of_range("plateau window lies outside the computed series");
  }
  double sum = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  std::size_t count = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.time[i] < ta || s.time[i] > tb) continue;
    const double v = s.delta_product[i];
    sum += v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    ++count;
  }
  if (count == 0) throw std::out_of_range("plateau window contains no samples");
  return {sum / static_cast<double>(count), 0.5 * (hi - lo)};
}

/// Builds the truncated exact spectrum for the thermal configuration's K and
/// evaluates the plateau over [ta, tb]. Requires ta >= 3/g (after the initial
/// transient).
inline Plateau plateau_estimate(const CavityParams& p, const ThermalConfig& th, double ta, double tb,
                                double dt = 0.0) {
  if (ta < 3.0 / p.g()) throw std::invalid_argument("plateau window must start at t >= 3/g");
  const Spectrum s = exact_spectrum(p, Truncation::full(th.field_modes()));
  if (dt <= 0.0) dt = default_time_step(s);
  return plateau_estimate(series(p, s, th, Complex(1.0, 0.0), ta, tb, dt), ta, tb);
}

}  // namespace cavity
