#pragma once

// Normal modes of the particle + cavity-field system.
//
// The truncated Hamiltonian H = 1/2 [p^T p + q^T M q] has
//   M_00 = omega_bar^2 + K eta^2,   M_kk = omega_k^2,   M_0k = -c_k,
// i.e. the bare particle frequency carries the truncated counterterm so that
// the renormalized frequency omega_bar stays fixed as K grows. The normal
// frequencies Omega_r are the roots of the secular function
//   F(z) = omega_bar^2 - z - W(z),   W(z) = eta^2 z sum_k 1 / (omega_k^2 - z),
// with z = Omega^2, and the transformation matrix is
//   t_0^r = [1 + W'(Omega_r^2)]^{-1/2},   t_k^r = c_k t_0^r / (omega_k^2 - Omega_r^2).
//
// In the continuum limit K -> infinity the sum is closed:
//   W = (eta^2 / 2)(1 - pi x cot(pi x)),  x = Omega / d_omega.
//
// Everything below works in the reduced variable x = Omega / d_omega. Each root
// is stored as an integer anchor (a pole) plus a signed offset, so distances to
// the poles k - x are formed without cancellation even when Omega_l sits a
// relative 1e-9 away from omega_l.

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cavity/eigen.hpp"
#include "cavity/matrix.hpp"
#include "cavity/params.hpp"
#include "cavity/roots.hpp"

namespace cavity {

enum class SpectrumMethod { Exact, Approximate, DenseOracle };

/// Secular equation used by the exact method: finite sum over the retained K
/// field modes, or the closed-form K -> infinity limit.
enum class SecularModel { Truncated, Continuum };

inline const char* to_string(SpectrumMethod m) {
  switch (m) {
    case SpectrumMethod::Exact: return "exact";
    case SpectrumMethod::Approximate: return "approx";
    case SpectrumMethod::DenseOracle: return "dense-oracle";
  }
  return "?";
}

class PoleProximityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Location of one normal frequency: x = anchor + offset, Omega = x * d_omega.
struct BranchRoot {
  int branch = 0;
  int anchor = 0;
  double offset = 0.0;
  double x = 0.0;
  double omega = 0.0;
};

/// Normal-mode frequencies and the orthogonal matrix t_mu^r restricted to
/// mu = 0..K and r = 0..S-1.
struct Spectrum {
  Spectrum(CavityParams p, Truncation trunc, SpectrumMethod m)
      : params(p), truncation(trunc), method(m),
        omega(static_cast<std::size_t>(trunc.normal_modes())),
        t0(static_cast<std::size_t>(trunc.normal_modes())),
        tk(static_cast<std::size_t>(trunc.field_modes()),
           static_cast<std::size_t>(trunc.normal_modes())) {}

  CavityParams params;
  Truncation truncation;
  SpectrumMethod method;
  SecularModel model = SecularModel::Truncated;
  std::vector<double> omega;
  std::vector<double> t0;
  Matrix tk;  // row k-1 holds t_k^r
  std::vector<BranchRoot> roots;
  std::vector<std::string> warnings;

  int field_modes() const { return truncation.field_modes(); }
  int normal_modes() const { return truncation.normal_modes(); }

  /// t_mu^r with mu = 0 the particle and mu = k >= 1 the field modes.
  double t(int mu, int r) const {
    return mu == 0 ? t0[static_cast<std::size_t>(r)]
                   : tk(static_cast<std::size_t>(mu - 1), static_cast<std::size_t>(r));
  }
};

namespace detail {

/// Secular function in reduced units: F(x) = a - x^2 - w(x) with
/// a = (omega_bar / d_omega)^2 and w = W / d_omega^2; F' = dF/dx.
struct SecularEvaluator {
  double a = 0.0;
  double e = 0.0;  // eta^2 / d_omega^2
  int K = 0;
  SecularModel model = SecularModel::Truncated;

  static SecularEvaluator from(const CavityParams& p, int K, SecularModel model) {
    const double r = p.reduced_frequency();
    return {r * r, p.reduced_coupling(), K, model};
  }

  /// 1 + W'(z); W' = e sum_k k^2 / (k^2 - x^2)^2.
  double one_plus_wprime(int anchor, double offset) const {
    const double x = anchor + offset;
    if (model == SecularModel::Truncated) {
      double acc = 0.0;
      for (int k = 1; k <= K; ++k) {
        const double kk = static_cast<double>(k);
        const double den = ((k - anchor) - offset) * (kk + x);
        acc += kk * kk / (den * den);
      }
      return 1.0 + e * acc;
    }
    if (std::abs(x) < 1e-3) {
      constexpr double pi2 = std::numbers::pi * std::numbers::pi;
      const double x2 = x * x;
      return 1.0 + 0.25 * e *
                       (2.0 * pi2 / 3.0 + 4.0 * pi2 * pi2 / 45.0 * x2 +
                        4.0 * pi2 * pi2 * pi2 / 315.0 * x2 * x2);
    }
    const double s = std::sin(std::numbers::pi * offset);
    const double c = std::cos(std::numbers::pi * offset);
    const double pi = std::numbers::pi;
    return 1.0 + e / (4.0 * x) * (pi * pi * x / (s * s) - pi * c / s);
  }

  ValueAndSlope operator()(int anchor, double offset) const {
    const double x = anchor + offset;
    double w = 0.0;
    if (model == SecularModel::Truncated) {
      double sum = 0.0;
      for (int k = 1; k <= K; ++k) sum += 1.0 / (((k - anchor) - offset) * (k + x));
      w = e * x * x * sum;
    } else if (x == 0.0) {
      w = 0.0;
    } else {
      const double pix = std::numbers::pi * x;
      const double cot = std::cos(std::numbers::pi * offset) / std::sin(std::numbers::pi * offset);
      w = 0.5 * e * (1.0 - pix * cot);
    }
    const double value = a - x * x - w;
    const double slope = -2.0 * x * one_plus_wprime(anchor, offset);
    return {value, slope};
  }
};

inline BranchRoot solve_branch(const SecularEvaluator& ev, int branch, double upper_x) {
  const int l = branch;
  const bool unbounded = ev.model == SecularModel::Truncated && l == ev.K;

  auto at = [&](int anchor) {
    return [&ev, anchor](double off) { return ev(anchor, off); };
  };

  int anchor = l;
  double lo = 0.0;
  double hi = 0.0;
  if (unbounded) {
    lo = 1e-9;
    hi = upper_x - l;
    while (!(ev(l, lo).value > 0.0)) {
      lo *= 1e-3;
      if (lo < 1e-300) throw RootFindingError("cannot bracket branch " + std::to_string(l));
    }
    if (!(ev(l, hi).value < 0.0)) {
      throw RootFindingError("cannot bracket branch " + std::to_string(l));
    }
  } else if (l == 0 && ev(0, 0.5).value <= 0.0) {
    // F(0) = a > 0.
    lo = 0.0;
    hi = 0.5;
  } else if (ev(l, 0.5).value <= 0.0) {
    lo = 1e-9;
    hi = 0.5;
    while (!(ev(l, lo).value > 0.0)) {
      lo *= 1e-3;
      if (lo < 1e-300) throw RootFindingError("cannot bracket branch " + std::to_string(l));
    }
  } else {
    // Root in the upper half: anchor on the upper pole, negative offset.
    anchor = l + 1;
    lo = -0.5;
    hi = -1e-9;
    while (!(ev(anchor, hi).value < 0.0)) {
      hi *= 1e-3;
      if (hi > -1e-300) throw RootFindingError("cannot bracket branch " + std::to_string(l));
    }
  }

  const RootResult res = bracketed_newton(at(anchor), lo, hi, 1e-14, 0.0);
  BranchRoot out;
  out.branch = l;
  out.anchor = anchor;
  out.offset = res.root;
  out.x = anchor + res.root;
  return out;
}

}  // namespace detail

/// Secular function G(Omega) = (Omega R / c) cot(Omega R / c) - 1
///                             + (2 / eta^2)(omega_bar^2 - Omega^2).
/// With eta^2 = 2 g d_omega the last factor is R / (pi g c). Strictly
/// decreasing on every branch between consecutive poles Omega R / c = l pi.
inline double secular_lhs(const CavityParams& params, double omega, double pole_guard = 1e-12) {
  const double x = omega / params.delta_omega();
  const double nearest = std::round(x);
  const double offset = x - nearest;
  if (nearest != 0.0 && std::abs(offset) < pole_guard) {
    throw PoleProximityError("secular_lhs evaluated within the pole guard band near branch " +
                             std::to_string(static_cast<long long>(nearest)) +
                             "; shrink the bracket");
  }
  const double pix = std::numbers::pi * x;
  const double xcot =
      x == 0.0 ? 1.0 : pix * std::cos(std::numbers::pi * offset) / std::sin(std::numbers::pi * offset);
  const double wb = params.omega_bar();
  return xcot - 1.0 + 2.0 * (wb * wb - omega * omega) / params.eta_sq();
}

/// One root per branch (l, l+1) in units of d_omega, l = 0..S-1, ascending.
/// For the truncated model the last branch (K, infinity) is bounded with a
/// Gershgorin estimate of the largest eigenvalue of M.
inline std::vector<BranchRoot> eigenfrequencies(const CavityParams& params, const Truncation& trunc,
                                                SecularModel model = SecularModel::Truncated) {
  const int K = trunc.field_modes();
  const int S = trunc.normal_modes();
  const auto ev = detail::SecularEvaluator::from(params, K, model);

  double upper_x = 0.0;
  if (model == SecularModel::Truncated) {
    const double se = std::sqrt(ev.e);
    double bound = ev.a + K * ev.e;
    for (int k = 1; k <= K; ++k) bound += se * k;
    const double kk = static_cast<double>(K);
    bound = std::max(bound, kk * kk + se * kk);
    upper_x = 1.01 * std::sqrt(bound) + 1.0;
  }

  std::vector<BranchRoot> roots;
  roots.reserve(static_cast<std::size_t>(S));
  for (int l = 0; l < S; ++l) {
    BranchRoot r = detail::solve_branch(ev, l, upper_x);
    r.omega = r.x * params.delta_omega();
    if (l > 0 && !(r.omega > roots.back().omega)) {
      throw RootFindingError("normal frequencies not increasing at branch " + std::to_string(l));
    }
    roots.push_back(r);
  }
  return roots;
}

inline std::vector<double> frequencies_of(const std::vector<BranchRoot>& roots) {
  std::vector<double> out;
  out.reserve(roots.size());
  for (const auto& r : roots) out.push_back(r.omega);
  return out;
}

/// Closed-form normalization and field components at converged roots.
inline Spectrum matrix_elements_exact(const CavityParams& params, const Truncation& trunc,
                                      const std::vector<BranchRoot>& roots,
                                      SecularModel model = SecularModel::Truncated) {
  if (static_cast<int>(roots.size()) != trunc.normal_modes()) {
    throw std::invalid_argument("matrix_elements_exact: root count does not match truncation");
  }
  const int K = trunc.field_modes();
  const auto ev = detail::SecularEvaluator::from(params, K, model);
  const double se = std::sqrt(ev.e);

  Spectrum s(params, trunc, SpectrumMethod::Exact);
  s.model = model;
  s.roots = roots;
  for (std::size_t r = 0; r < roots.size(); ++r) {
    const auto& br = roots[r];
    s.omega[r] = br.omega;
    const double t0 = 1.0 / std::sqrt(ev.one_plus_wprime(br.anchor, br.offset));
    s.t0[r] = t0;
    for (int k = 1; k <= K; ++k) {
      const double den = ((k - br.anchor) - br.offset) * (k + br.x);
      s.tk(static_cast<std::size_t>(k - 1), r) = se * k * t0 / den;
    }
  }
  return s;
}

inline Spectrum exact_spectrum(const CavityParams& params, const Truncation& trunc,
                               SecularModel model = SecularModel::Truncated) {
  return matrix_elements_exact(params, trunc, eigenfrequencies(params, trunc, model), model);
}

/// Small-cavity approximations of the transformation matrix:
///   (t_0^0)^2 ~ 1 - pi^2 delta / 3,        (t_0^l)^2 ~ 2 delta / l^2,
///   t_k^0 ~ k g^2 sqrt(2 delta) / (k^2 g^2 - Omega_0^2 delta^2),
///   t_k^l ~ 2 k delta / ((k^2 - (l + eps)^2) l),   eps = delta / k.
/// Omega_0 is the exact continuum root; Omega_l = (l + delta / l) d_omega.
inline Spectrum matrix_elements_approx(const CavityParams& params, const Truncation& trunc) {
  const int K = trunc.field_modes();
  const int S = trunc.normal_modes();
  const double delta = params.delta();
  const double g = params.g();

  Spectrum s(params, trunc, SpectrumMethod::Approximate);
  s.model = SecularModel::Continuum;
  if (delta > 0.3) {
    s.warnings.emplace_back("small-cavity approximation used with delta > 0.3");
  }
  const auto ev = detail::SecularEvaluator::from(params, K, SecularModel::Continuum);
  const BranchRoot r0 = detail::solve_branch(ev, 0, 0.0);
  const double omega0 = r0.x * params.delta_omega();

  s.omega[0] = omega0;
  const double t00_sq = 1.0 - std::numbers::pi * std::numbers::pi * delta / 3.0;
  s.t0[0] = std::sqrt(std::max(t00_sq, 0.0));
  if (t00_sq <= 0.0) s.warnings.emplace_back("(t_0^0)^2 approximation is not positive");
  for (int l = 1; l < S; ++l) {
    s.omega[static_cast<std::size_t>(l)] = (l + delta / l) * params.delta_omega();
    s.t0[static_cast<std::size_t>(l)] = std::sqrt(2.0 * delta) / l;
  }
  for (int k = 1; k <= K; ++k) {
    const double kd = static_cast<double>(k);
    const auto row = static_cast<std::size_t>(k - 1);
    s.tk(row, 0) = kd * g * g * std::sqrt(2.0 * delta) /
                   (kd * kd * g * g - omega0 * omega0 * delta * delta);
    const double eps = delta / kd;
    for (int l = 1; l < S; ++l) {
      const double shifted = l + eps;
      s.tk(row, static_cast<std::size_t>(l)) = 2.0 * kd * delta / ((kd * kd - shifted * shifted) * l);
    }
  }
  return s;
}

/// The (K+1) x (K+1) matrix M of the truncated quadratic Hamiltonian, with the
/// bare frequency omega_0^2 = omega_bar^2 + sum_k c_k^2 / omega_k^2.
inline Matrix hamiltonian_matrix(const CavityParams& params, int K) {
  const auto omega = mode_frequencies(params, K);
  const auto c = coupling_constants(params, K);
  const auto n = static_cast<std::size_t>(K + 1);
  Matrix m(n, n);
  m(0, 0) = params.omega_bar() * params.omega_bar() + counterterm(params, K);
  for (std::size_t k = 1; k < n; ++k) {
    m(k, k) = omega[k - 1] * omega[k - 1];
    m(0, k) = m(k, 0) = -c[k - 1];
  }
  return m;
}

/// Direct numerical diagonalization of M. Eigenvector signs are fixed by
/// t_0^r > 0.
inline Spectrum dense_diagonalize(const CavityParams& params, int K,
                                  EigenMethod method = EigenMethod::HouseholderQL) {
  const Truncation trunc = Truncation::full(K);
  const EigenDecomposition eig = symmetric_eigen(hamiltonian_matrix(params, K), method);
  Spectrum s(params, trunc, SpectrumMethod::DenseOracle);
  const std::size_t n = eig.values.size();
  for (std::size_t r = 0; r < n; ++r) {
    if (!(eig.values[r] > 0.0)) {
      throw EigenSolverError("non-positive eigenvalue in dense diagonalization");
    }
    s.omega[r] = std::sqrt(eig.values[r]);
    const double sign = eig.vectors(0, r) < 0.0 ? -1.0 : 1.0;
    s.t0[r] = sign * eig.vectors(0, r);
    for (std::size_t k = 1; k < n; ++k) s.tk(k - 1, r) = sign * eig.vectors(k, r);
  }
  return s;
}

struct OrthonormalityDefect {
  double columns = 0.0;  // max_r |sum_mu (t_mu^r)^2 - 1|
  double rows = 0.0;     // max_{mu,nu} |sum_r t_mu^r t_nu^r - delta_mu_nu|
};

/// Column and row orthonormality of the retained block. Rows are checked for
/// mu, nu < row_limit (all rows when row_limit < 0).
inline OrthonormalityDefect orthonormality_defect(const Spectrum& s, int row_limit = -1) {
  const int K = s.field_modes();
  const int S = s.normal_modes();
  OrthonormalityDefect d;
  for (int r = 0; r < S; ++r) {
    double acc = 0.0;
    for (int mu = 0; mu <= K; ++mu) acc += s.t(mu, r) * s.t(mu, r);
    d.columns = std::max(d.columns, std::abs(acc - 1.0));
  }
  const int rows = row_limit < 0 ? K + 1 : std::min(row_limit, K + 1);
  for (int mu = 0; mu < rows; ++mu) {
    for (int nu = mu; nu < rows; ++nu) {
      double acc = 0.0;
      for (int r = 0; r < S; ++r) acc += s.t(mu, r) * s.t(nu, r);
      d.rows = std::max(d.rows, std::abs(acc - (mu == nu ? 1.0 : 0.0)));
    }
  }
  return d;
}

/// Largest |t_mu^r(a) - t_mu^r(b)| over mu <= K and the first `modes` columns.
inline double max_element_difference(const Spectrum& a, const Spectrum& b, int modes) {
  const int K = std::min(a.field_modes(), b.field_modes());
  modes = std::min({modes, a.normal_modes(), b.normal_modes()});
  double d = 0.0;
  for (int r = 0; r < modes; ++r)
    for (int mu = 0; mu <= K; ++mu) d = std::max(d, std::abs(a.t(mu, r) - b.t(mu, r)));
  return d;
}

/// Largest relative frequency difference over the first `modes` normal modes.
inline double max_frequency_deviation(const Spectrum& a, const Spectrum& b, int modes) {
  modes = std::min({modes, a.normal_modes(), b.normal_modes()});
  double d = 0.0;
  for (int r = 0; r < modes; ++r) {
    const auto i = static_cast<std::size_t>(r);
    d = std::max(d, std::abs(a.omega[i] - b.omega[i]) / std::abs(b.omega[i]));
  }
  return d;
}

/// Columnar text export: header line, then "r Omega_r t_0^r" with 17
/// significant digits.
inline void write_spectrum_text(std::ostream& os, const Spectrum& s) {
  os << "r Omega t0\n";
  char buf[128];
  for (int r = 0; r < s.normal_modes(); ++r) {
    const auto i = static_cast<std::size_t>(r);
    std::snprintf(buf, sizeof buf, "%d %.17g %.17g\n", r, s.omega[i], s.t0[i]);
    os << buf;
  }
}

}  // namespace cavity
