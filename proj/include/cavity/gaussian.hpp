#pragma once

// Brute-force Gaussian-state path for the same dynamics.
//
// The initial state (dressed coherent particle x dressed thermal field) is a
// Gaussian with a mean vector and a covariance matrix over the dressed phase
// space (q'_0..q'_K, p'_0..p'_K). The dressed coordinates are linked to the
// normal modes by
//   sqrt(w_mu) q'_mu = sum_r t_mu^r sqrt(Omega_r) Q_r,
//   p'_mu            = sum_r t_mu^r sqrt(w_mu / Omega_r) P_r,
// with w = {omega_bar, omega_k}; the momentum scaling is the one that keeps
// (q', p') canonical. Each normal mode rotates in its own phase plane, so the
// state at time t is exact for any t without time stepping.

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

#include "cavity/dynamics.hpp"
#include "cavity/matrix.hpp"
#include "cavity/params.hpp"
#include "cavity/spectrum.hpp"
#include "cavity/thermal.hpp"

namespace cavity {

/// Mean and covariance over (q'_0..q'_K, p'_0..p'_K).
struct CovarianceState {
  std::vector<double> mean;
  Matrix cov;
  double time = 0.0;

  int modes() const { return static_cast<int>(mean.size() / 2); }

  /// 2x2 marginal determinant Var(q) Var(p) - Cov(q,p)^2 of mode mu.
  double marginal_determinant(int mu) const {
    const auto n = static_cast<std::size_t>(modes());
    const auto q = static_cast<std::size_t>(mu);
    const auto p = n + q;
    return cov(q, q) * cov(p, p) - cov(q, p) * cov(p, q);
  }
};

namespace detail {

inline void require_square_spectrum(const Spectrum& s) {
  if (!s.truncation.is_square()) {
    throw std::invalid_argument("the Gaussian oracle needs S = K + 1 normal modes");
  }
}

inline std::vector<double> dressed_frequencies(const CavityParams& p, int K) {
  std::vector<double> w{p.omega_bar()};
  for (double wk : mode_frequencies(p, K)) w.push_back(wk);
  return w;
}

}  // namespace detail

/// Standard symplectic form J = [[0, I], [-I, 0]] of size 2n.
inline Matrix symplectic_form(std::size_t n) {
  Matrix j(2 * n, 2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    j(i, n + i) = 1.0;
    j(n + i, i) = -1.0;
  }
  return j;
}

/// max |S J S^T - J|.
inline double symplectic_defect(const Matrix& s) {
  const Matrix j = symplectic_form(s.rows() / 2);
  const Matrix sjs = s * j * s.transpose();
  double d = 0.0;
  for (std::size_t a = 0; a < s.rows(); ++a)
    for (std::size_t b = 0; b < s.rows(); ++b) d = std::max(d, std::abs(sjs(a, b) - j(a, b)));
  return d;
}

inline CovarianceState initial_state(const CavityParams& p, const Spectrum& s, Complex lambda,
                                     const ThermalConfig& th) {
  detail::require_matching(s, th);
  const int K = s.field_modes();
  const auto n = static_cast<std::size_t>(K + 1);
  const double hbar = p.hbar();
  const auto w = detail::dressed_frequencies(p, K);

  CovarianceState st{std::vector<double>(2 * n, 0.0), Matrix(2 * n, 2 * n), 0.0};
  st.mean[0] = std::sqrt(2.0 * hbar / w[0]) * lambda.real();
  st.mean[n] = std::sqrt(2.0 * hbar * w[0]) * lambda.imag();
  for (std::size_t mu = 0; mu < n; ++mu) {
    const double factor = mu == 0 ? 1.0 : 2.0 * th.occupations[mu - 1] + 1.0;
    st.cov(mu, mu) = 0.5 * hbar / w[mu] * factor;
    st.cov(n + mu, n + mu) = 0.5 * hbar * w[mu] * factor;
  }
  return st;
}

/// The linear map from dressed to normal phase-space coordinates and its inverse.
struct CanonicalMap {
  Matrix to_normal;
  Matrix to_dressed;
};

inline CanonicalMap dressed_to_normal(const CavityParams& p, const Spectrum& s) {
  detail::require_square_spectrum(s);
  const int K = s.field_modes();
  const auto n = static_cast<std::size_t>(K + 1);
  const auto w = detail::dressed_frequencies(p, K);
  CanonicalMap m{Matrix(2 * n, 2 * n), Matrix(2 * n, 2 * n)};
  for (std::size_t r = 0; r < n; ++r) {
    const double om = s.omega[r];
    for (std::size_t mu = 0; mu < n; ++mu) {
      const double t = s.t(static_cast<int>(mu), static_cast<int>(r));
      const double ratio = std::sqrt(w[mu] / om);
      m.to_normal(r, mu) = t * ratio;
      m.to_normal(n + r, n + mu) = t / ratio;
      m.to_dressed(mu, r) = t / ratio;
      m.to_dressed(n + mu, n + r) = t * ratio;
    }
  }
  return m;
}

/// Phase-space rotation of every normal mode over time t.
inline Matrix normal_mode_rotation(const Spectrum& s, double t) {
  const auto n = static_cast<std::size_t>(s.normal_modes());
  Matrix r(2 * n, 2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double om = s.omega[i];
    const double c = std::cos(om * t);
    const double sn = std::sin(om * t);
    r(i, i) = c;
    r(i, n + i) = sn / om;
    r(n + i, i) = -om * sn;
    r(n + i, n + i) = c;
  }
  return r;
}

/// Full dressed state after time t (O(N^3)).
inline CovarianceState evolve(const CovarianceState& state, const CavityParams& p, const Spectrum& s,
                              double t) {
  if (t < 0.0) throw std::invalid_argument("evolve: t must be non-negative");
  const CanonicalMap m = dressed_to_normal(p, s);
  if (m.to_normal.rows() != state.mean.size()) {
    throw std::invalid_argument("evolve: state and spectrum sizes differ");
  }
  const Matrix prop = m.to_dressed * normal_mode_rotation(s, t) * m.to_normal;
  CovarianceState out;
  out.mean = prop * std::span<const double>(state.mean);
  out.cov = congruence(prop, state.cov);
  out.time = state.time + t;
  return out;
}

/// <H> of the truncated bare Hamiltonian 1/2 (p^T p + q^T M q), evaluated by
/// mapping the dressed state to bare coordinates q_mu = sum_r t_mu^r Q_r.
inline double mean_energy(const CavityParams& p, const Spectrum& s, const CovarianceState& state) {
  const CanonicalMap m = dressed_to_normal(p, s);
  const auto n = static_cast<std::size_t>(s.normal_modes());
  Matrix bare(2 * n, 2 * n);
  for (std::size_t mu = 0; mu < n; ++mu)
    for (std::size_t r = 0; r < n; ++r) {
      const double t = s.t(static_cast<int>(mu), static_cast<int>(r));
      bare(mu, r) = t;
      bare(n + mu, n + r) = t;
    }
  const Matrix g = bare * m.to_normal;
  const std::vector<double> mean = g * std::span<const double>(state.mean);
  const Matrix cov = congruence(g, state.cov);
  const Matrix h = hamiltonian_matrix(p, s.field_modes());

  double e = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    e += cov(n + a, n + a) + mean[n + a] * mean[n + a];
    for (std::size_t b = 0; b < n; ++b) e += h(a, b) * (cov(a, b) + mean[a] * mean[b]);
  }
  return 0.5 * e;
}

/// min over modes of (marginal determinant) / (hbar^2 / 4) - 1; non-negative
/// for a physical state.
inline double robertson_margin(const CovarianceState& state, double hbar) {
  double margin = std::numeric_limits<double>::infinity();
  for (int mu = 0; mu < state.modes(); ++mu) {
    margin = std::min(margin, state.marginal_determinant(mu) / (0.25 * hbar * hbar) - 1.0);
  }
  return margin;
}

struct ParticleMoments {
  double mean_q0 = 0.0;
  double mean_p0 = 0.0;
  double var_q0 = 0.0;
  double var_p0 = 0.0;
  double cov_qp = 0.0;

  /// Product of standard deviations dq'_0 dp'_0.
  double delta_product() const { return std::sqrt(var_q0 * var_p0); }
};

/// Keeps the initial moments in the normal basis and reads out the dressed
/// particle marginal at any time in O(N^2).
class GaussianPropagator {
 public:
  GaussianPropagator(const CavityParams& p, const Spectrum& s, const CovarianceState& initial)
      : spectrum_(&s), map_(dressed_to_normal(p, s)) {
    if (map_.to_normal.rows() != initial.mean.size()) {
      throw std::invalid_argument("GaussianPropagator: state and spectrum sizes differ");
    }
    mean_ = map_.to_normal * std::span<const double>(initial.mean);
    cov_ = congruence(map_.to_normal, initial.cov);
  }

  ParticleMoments particle(double t) const { return mode(0, t); }

  /// Dressed moments of mode mu at time t.
  ParticleMoments mode(int mu, double t) const {
    const Spectrum& s = *spectrum_;
    const auto n = static_cast<std::size_t>(s.normal_modes());
    const auto m = static_cast<std::size_t>(mu);
    // Coefficients of q'_mu(t) and p'_mu(t) on the initial normal coordinates.
    std::vector<double> vq(2 * n);
    std::vector<double> vp(2 * n);
    for (std::size_t r = 0; r < n; ++r) {
      const double om = s.omega[r];
      const double c = std::cos(om * t);
      const double sn = std::sin(om * t);
      const double bq = map_.to_dressed(m, r);
      const double bp = map_.to_dressed(n + m, n + r);
      vq[r] = bq * c;
      vq[n + r] = bq * sn / om;
      vp[r] = -bp * om * sn;
      vp[n + r] = bp * c;
    }
    ParticleMoments out;
    const std::vector<double> cq = cov_ * std::span<const double>(vq);
    const std::vector<double> cp = cov_ * std::span<const double>(vp);
    for (std::size_t i = 0; i < 2 * n; ++i) {
      out.mean_q0 += vq[i] * mean_[i];
      out.mean_p0 += vp[i] * mean_[i];
      out.var_q0 += vq[i] * cq[i];
      out.var_p0 += vp[i] * cp[i];
      out.cov_qp += vq[i] * cp[i];
    }
    return out;
  }

 private:
  const Spectrum* spectrum_;
  CanonicalMap map_;
  std::vector<double> mean_;
  Matrix cov_;
};

struct OracleSample {
  double time = 0.0;
  ParticleMoments analytic;
  double analytic_delta = 0.0;
  ParticleMoments oracle;
  double deviation = 0.0;  // largest relative deviation at this time
};

struct OracleReport {
  std::vector<OracleSample> samples;
  double max_deviation = 0.0;
  double threshold = 1e-8;
  bool passed = false;
};

/// Analytic particle observables vs. the Gaussian propagator on the same
/// truncated spectrum. Means are compared relative to
/// max(|oracle|, sqrt(hbar / 2 omega_bar) max(1, 2|lambda|)) (and the
/// momentum analogue) so that zero crossings do not inflate the ratio.
inline OracleReport oracle_compare(const CavityParams& p, const Spectrum& s, Complex lambda,
                                   const ThermalConfig& th, std::span<const double> times,
                                   double threshold = 1e-8) {
  const CovarianceState init = initial_state(p, s, lambda, th);
  const GaussianPropagator prop(p, s, init);
  const double amp = std::max(1.0, 2.0 * std::abs(lambda));
  const double q_ref = std::sqrt(0.5 * p.hbar() / p.omega_bar()) * amp;
  const double p_ref = std::sqrt(0.5 * p.hbar() * p.omega_bar()) * amp;

  auto rel = [](double a, double o, double floor) {
    return std::abs(a - o) / std::max(std::abs(o), floor);
  };

  OracleReport report;
  report.threshold = threshold;
  ParticleRow row(s);
  std::vector<double> moduli;
  for (double t : times) {
    OracleSample smp;
    smp.time = t;
    const Complex f00 = row.evaluate_moduli(t, moduli);
    double w = 0.0;
    for (std::size_t k = 0; k < moduli.size(); ++k) w += th.occupations[k] * moduli[k];
    smp.analytic.mean_q0 = std::sqrt(2.0 * p.hbar() / p.omega_bar()) * (lambda * f00).real();
    smp.analytic.mean_p0 = std::sqrt(2.0 * p.hbar() * p.omega_bar()) * (lambda * f00).imag();
    smp.analytic.var_q0 = p.hbar() / p.omega_bar() * (0.5 + w);
    smp.analytic.var_p0 = p.hbar() * p.omega_bar() * (0.5 + w);
    smp.analytic_delta = p.hbar() * (0.5 + w);
    smp.oracle = prop.particle(t);

    const double o_delta = smp.oracle.delta_product();
    smp.deviation = std::max({rel(smp.analytic.mean_q0, smp.oracle.mean_q0, q_ref),
                              rel(smp.analytic.mean_p0, smp.oracle.mean_p0, p_ref),
                              rel(smp.analytic.var_q0, smp.oracle.var_q0, 0.0),
                              rel(smp.analytic.var_p0, smp.oracle.var_p0, 0.0),
                              rel(smp.analytic_delta, o_delta, 0.0)});
    report.max_deviation = std::max(report.max_deviation, smp.deviation);
    report.samples.push_back(smp);
  }
  report.passed = report.max_deviation <= threshold;
  return report;
}

/// Convenience form that builds the truncated exact spectrum with K field modes.
inline OracleReport oracle_compare(const CavityParams& p, Complex lambda, double beta, int K,
                                   std::span<const double> times, double threshold = 1e-8) {
  const Spectrum s = exact_spectrum(p, Truncation::full(K));
  return oracle_compare(p, s, lambda, occupations(p, beta, K), times, threshold);
}

}  // namespace cavity
