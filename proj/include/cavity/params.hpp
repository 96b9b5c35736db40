#pragma once

// Physical configuration of a harmonic particle coupled to the field modes of a
// perfectly reflecting spherical cavity.
//
// The cavity is described by the dimensionless size parameter
//   delta = g R / (pi c),
// so that the field-mode spacing is d_omega = pi c / R = g / delta and
// omega_k = k * d_omega.  The ohmic couplings are c_k = eta * omega_k.

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cavity {

/// Unit constants. Natural units (all one) unless overridden.
struct UnitSystem {
  double hbar = 1.0;
  double c = 1.0;
  double kB = 1.0;
};

/// Normalization of the ohmic coupling constant eta.
///
/// `ReproducesAsymptotics` uses eta^2 = 2 g d_omega, for which the exact matrix
/// elements reduce at small delta to (t_0^k)^2 ~ 2 delta / k^2 and
/// (t_0^0)^2 ~ 1 - pi^2 delta / 3.  `TextDefinition` uses
/// eta = 2 sqrt(g d_omega / pi), which differs by the constant factor 2/pi.
enum class CouplingConvention { ReproducesAsymptotics, TextDefinition };

inline std::string_view to_string(CouplingConvention c) {
  return c == CouplingConvention::ReproducesAsymptotics ? "asymptotics" : "text";
}

inline CouplingConvention coupling_convention_from_string(std::string_view s) {
  if (s == "asymptotics") return CouplingConvention::ReproducesAsymptotics;
  if (s == "text") return CouplingConvention::TextDefinition;
  throw std::invalid_argument("coupling_convention must be 'asymptotics' or 'text'");
}

namespace detail {

inline void require_positive(double value, std::string_view field) {
  if (!std::isfinite(value) || !(value > 0.0)) {
    throw std::invalid_argument(std::string(field) + " must be positive");
  }
}

}  // namespace detail

/// Validated cavity configuration. Immutable after construction; build with
/// build_params() or build_params_from_alpha().
class CavityParams {
 public:
  double g() const { return g_; }
  double omega_bar() const { return omega_bar_; }
  double delta() const { return delta_; }
  const UnitSystem& units() const { return units_; }
  double hbar() const { return units_.hbar; }
  double c() const { return units_.c; }
  double kB() const { return units_.kB; }
  std::optional<double> alpha() const { return alpha_; }
  CouplingConvention convention() const { return convention_; }

  /// R / c = pi delta / g.
  double r_over_c() const { return r_over_c_; }
  /// Field-mode spacing pi c / R = g / delta.
  double delta_omega() const { return delta_omega_; }
  double eta_sq() const { return eta_sq_; }

  /// eta^2 / d_omega^2, the coupling strength in units of the mode spacing.
  double reduced_coupling() const { return eta_sq_ / (delta_omega_ * delta_omega_); }
  /// omega_bar / d_omega.
  double reduced_frequency() const { return omega_bar_ / delta_omega_; }

 private:
  CavityParams() = default;

  friend CavityParams build_params(double, double, double, UnitSystem, CouplingConvention);
  friend CavityParams build_params_from_alpha(double, double, double, UnitSystem,
                                              CouplingConvention);

  double g_ = 0.0;
  double omega_bar_ = 0.0;
  double delta_ = 0.0;
  UnitSystem units_{};
  std::optional<double> alpha_{};
  CouplingConvention convention_ = CouplingConvention::ReproducesAsymptotics;
  double r_over_c_ = 0.0;
  double delta_omega_ = 0.0;
  double eta_sq_ = 0.0;
};

inline CavityParams build_params(double g, double omega_bar, double delta, UnitSystem units = {},
                                 CouplingConvention convention =
                                     CouplingConvention::ReproducesAsymptotics) {
  detail::require_positive(g, "g");
  detail::require_positive(omega_bar, "omega_bar");
  detail::require_positive(delta, "delta");
  detail::require_positive(units.hbar, "hbar");
  detail::require_positive(units.c, "c");
  detail::require_positive(units.kB, "kB");

  CavityParams p;
  p.g_ = g;
  p.omega_bar_ = omega_bar;
  p.delta_ = delta;
  p.units_ = units;
  p.convention_ = convention;
  p.r_over_c_ = std::numbers::pi * delta / g;
  p.delta_omega_ = g / delta;
  p.eta_sq_ = convention == CouplingConvention::ReproducesAsymptotics
                  ? 2.0 * g * p.delta_omega_
                  : 4.0 * g * p.delta_omega_ / std::numbers::pi;
  return p;
}

/// g = alpha * omega_bar.
inline CavityParams build_params_from_alpha(double alpha, double omega_bar, double delta,
                                            UnitSystem units = {},
                                            CouplingConvention convention =
                                                CouplingConvention::ReproducesAsymptotics) {
  detail::require_positive(alpha, "alpha");
  detail::require_positive(omega_bar, "omega_bar");
  CavityParams p = build_params(alpha * omega_bar, omega_bar, delta, units, convention);
  p.alpha_ = alpha;
  return p;
}

/// Number of retained field modes K and normal modes S.
class Truncation {
 public:
  Truncation(int field_modes, int normal_modes) : field_modes_(field_modes), normal_modes_(normal_modes) {
    if (field_modes < 1) throw std::invalid_argument("field_modes must be at least 1");
    if (normal_modes < 2) throw std::invalid_argument("normal_modes must be at least 2");
    if (normal_modes > field_modes + 1) {
      throw std::invalid_argument("normal_modes must not exceed field_modes + 1");
    }
  }

  /// Square truncation: S = K + 1.
  static Truncation full(int field_modes) { return Truncation(field_modes, field_modes + 1); }

  int field_modes() const { return field_modes_; }
  int normal_modes() const { return normal_modes_; }
  bool is_square() const { return normal_modes_ == field_modes_ + 1; }

  friend bool operator==(const Truncation&, const Truncation&) = default;

 private:
  int field_modes_;
  int normal_modes_;
};

/// omega_k = k * d_omega for k = 1..K.
inline std::vector<double> mode_frequencies(const CavityParams& params, int K) {
  if (K < 1) throw std::invalid_argument("K must be at least 1");
  std::vector<double> omega(static_cast<std::size_t>(K));
  for (int k = 1; k <= K; ++k) omega[k - 1] = k * params.delta_omega();
  return omega;
}

/// Ohmic couplings c_k = eta * omega_k.
inline std::vector<double> coupling_constants(const CavityParams& params, int K) {
  std::vector<double> c = mode_frequencies(params, K);
  const double eta = std::sqrt(params.eta_sq());
  for (double& v : c) v *= eta;
  return c;
}

/// Truncated counterterm sum_k c_k^2 / omega_k^2 = K eta^2.
inline double counterterm(const CavityParams& params, int K) {
  if (K < 1) throw std::invalid_argument("K must be at least 1");
  return K * params.eta_sq();
}

}  // namespace cavity
