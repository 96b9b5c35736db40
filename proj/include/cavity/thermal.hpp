#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "cavity/params.hpp"

namespace cavity {

/// Inverse temperature and Bose-Einstein occupations n_k = 1/(exp(hbar beta omega_k) - 1)
/// of the dressed field modes. beta = +inf is the zero-temperature state.
struct ThermalConfig {
  double beta = std::numeric_limits<double>::infinity();
  std::vector<double> occupations;

  int field_modes() const { return static_cast<int>(occupations.size()); }
  double temperature(const UnitSystem& u) const { return 1.0 / (u.kB * beta); }
};

inline double bose_einstein(double hbar_beta_omega) {
  if (std::isinf(hbar_beta_omega)) return 0.0;
  return 1.0 / std::expm1(hbar_beta_omega);
}

inline ThermalConfig occupations(const CavityParams& params, double beta, int K) {
  if (std::isnan(beta) || !(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  if (K < 1) throw std::invalid_argument("K must be at least 1");
  ThermalConfig th;
  th.beta = beta;
  th.occupations.resize(static_cast<std::size_t>(K));
  const double step = params.hbar() * beta * params.delta_omega();
  for (int k = 1; k <= K; ++k) th.occupations[static_cast<std::size_t>(k - 1)] = bose_einstein(step * k);
  return th;
}

/// beta from a temperature T with kB T = 1 / beta.
inline double beta_from_temperature(const CavityParams& params, double temperature) {
  if (!std::isfinite(temperature) || !(temperature > 0.0)) {
    throw std::invalid_argument("temperature must be positive");
  }
  return 1.0 / (params.kB() * temperature);
}

/// A-priori bound on the discarded thermal tail, n_K(beta) * 2 delta / K.
inline double thermal_tail_bound(const CavityParams& params, double beta, int K) {
  return bose_einstein(params.hbar() * beta * params.delta_omega() * K) * 2.0 * params.delta() / K;
}

/// Smallest K >= max(64, ceil(12 / (hbar beta d_omega))) whose tail bound is
/// below `tolerance`. For several temperatures pass the smallest beta.
inline int choose_field_modes(const CavityParams& params, double beta, double tolerance = 1e-8,
                              int max_modes = 200000) {
  if (std::isnan(beta) || !(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  const double step = params.hbar() * beta * params.delta_omega();
  int K = 64;
  if (std::isfinite(step)) K = std::max(K, static_cast<int>(std::ceil(12.0 / step)));
  while (thermal_tail_bound(params, beta, K) >= tolerance) {
    if (K >= max_modes) {
      throw std::runtime_error("thermal tail bound not reached within the mode cap");
    }
    ++K;
  }
  return K;
}

}  // namespace cavity
