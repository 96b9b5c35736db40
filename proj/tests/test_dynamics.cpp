#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "cavity/dynamics.hpp"
#include "support/random_params.hpp"

using namespace cavity;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const CavityParams kReference = build_params(1.0, 5.0, 0.1);

const Spectrum& reference_spectrum() {
  static const Spectrum s = exact_spectrum(kReference, Truncation::full(64));
  return s;
}

}  // namespace

TEST_CASE("propagator starts at the identity", "[dynamics]") {
  const auto& s = reference_spectrum();
  for (int mu : {0, 1, 7}) {
    for (int nu : {0, 1, 7}) {
      const Complex f = f_element(s, mu, nu, 0.0);
      CHECK_THAT(f.real(), WithinAbs(mu == nu ? 1.0 : 0.0, 1e-13));
      CHECK_THAT(f.imag(), WithinAbs(0.0, 1e-15));
    }
  }
  CHECK_THAT(survival_probability(s, 0.0), WithinAbs(1.0, 1e-13));
  CHECK_THROWS(f_element(s, 65, 0, 1.0));
}

TEST_CASE("propagator composes and is time-reversal symmetric", "[dynamics]") {
  // f(t1 + t2) = f(t1) f(t2) as (K+1) x (K+1) matrices, f(-t) = conj f(t).
  const auto p = build_params(0.8, 3.0, 0.2);
  const auto s = exact_spectrum(p, Truncation::full(12));
  const int n = 13;
  const double t1 = 0.37, t2 = 1.21;
  for (int mu = 0; mu < n; mu += 3) {
    for (int nu = 0; nu < n; nu += 2) {
      Complex composed = 0.0;
      for (int k = 0; k < n; ++k) composed += f_element(s, mu, k, t1) * f_element(s, k, nu, t2);
      const Complex direct = f_element(s, mu, nu, t1 + t2);
      CHECK(std::abs(direct - composed) < 1e-12);
      CHECK(std::abs(f_element(s, mu, nu, -t1) - std::conj(f_element(s, mu, nu, t1))) < 1e-14);
    }
  }
}

TEST_CASE("propagator agrees with the dense-diagonalization spectrum", "[dynamics]") {
  const auto& s = reference_spectrum();
  const auto dense = dense_diagonalize(kReference, 64);
  ParticleRow a(s), b(dense);
  for (double t : {0.1, 1.7, 4.9, 23.0}) {
    const auto fa = a.evaluate(t);
    const auto fb = b.evaluate(t);
    for (std::size_t k = 0; k < fa.size(); ++k) CHECK(std::abs(fa[k] - fb[k]) < 1e-9);
  }
}

TEST_CASE("unitarity of the particle row", "[dynamics]") {
  const auto& s = reference_spectrum();
  for (double t = 0.0; t <= 20.0; t += 0.731) CHECK_THAT(unitarity_sum(s, t), WithinAbs(1.0, 1e-12));
}

TEST_CASE("single-sum and triple-sum uncertainty forms agree", "[dynamics]") {
  const auto& s = reference_spectrum();
  for (double beta : {0.26, 0.28, 0.51}) {
    const auto th = occupations(kReference, beta, 64);
    for (double t : {0.0, 0.4, 2.3, 2.5, 4.99}) {
      CHECK_THAT(uncertainty_product_expanded(kReference, s, th, t),
                 WithinRel(uncertainty_product(kReference, s, th, t), 1e-10));
    }
  }
}

TEST_CASE("initial and zero-temperature uncertainty", "[dynamics]") {
  const auto& s = reference_spectrum();
  const auto hot = occupations(kReference, 0.26, 64);
  CHECK_THAT(uncertainty_product(kReference, s, hot, 0.0), WithinAbs(0.5, 1e-12));
  const auto cold = occupations(kReference, std::numeric_limits<double>::infinity(), 64);
  for (double t : {0.3, 2.0, 9.0}) CHECK(uncertainty_product(kReference, s, cold, t) == 0.5);
}

TEST_CASE("moments follow the dressed coherent state", "[dynamics]") {
  const auto& s = reference_spectrum();
  const Complex lambda(0.7, -1.3);
  CHECK_THAT(mean_q0(kReference, s, lambda, 0.0), WithinAbs(std::sqrt(2.0 / 5.0) * 0.7, 1e-12));
  CHECK_THAT(mean_p0(kReference, s, lambda, 0.0), WithinAbs(std::sqrt(2.0 * 5.0) * -1.3, 1e-12));
  const auto th = occupations(kReference, 0.26, 64);
  for (double t : {0.0, 1.1, 3.3}) {
    const double vq = var_q0(kReference, s, th, t);
    const double vp = var_p0(kReference, s, th, t);
    CHECK_THAT(std::sqrt(vq * vp), WithinRel(uncertainty_product(kReference, s, th, t), 1e-14));
    CHECK_THAT(vp / vq, WithinRel(25.0, 1e-14));
    CHECK_THAT(survival_probability(s, t), WithinRel(std::norm(f_element(s, 0, 0, t)), 1e-14));
  }
}

TEST_CASE("series shares the spectrum across temperatures", "[dynamics]") {
  const auto& s = reference_spectrum();
  std::vector<ThermalConfig> th{occupations(kReference, 0.26, 64), occupations(kReference, 0.51, 64)};
  const auto a = series_multi(kReference, s, th, Complex(1.0, 0.0), TimeGrid{0.0, 5.0, 0.01});
  const auto b = series_multi(kReference, s, th, Complex(-0.4, 2.5), TimeGrid{0.0, 5.0, 0.01});
  REQUIRE(a[0].size() == 501);
  for (std::size_t i = 0; i < a[0].size(); ++i) {
    // Means do not depend on temperature, the uncertainty product not on lambda.
    CHECK(a[0].mean_q0[i] == a[1].mean_q0[i]);
    CHECK(a[0].mean_p0[i] == a[1].mean_p0[i]);
    CHECK(a[0].delta_product[i] == b[0].delta_product[i]);
    CHECK(a[1].delta_product[i] == b[1].delta_product[i]);
    CHECK(a[0].delta_product[i] >= a[1].delta_product[i]);
  }
  const double t = a[0].time[230];
  CHECK_THAT(a[0].delta_product[230], WithinRel(uncertainty_product(kReference, s, th[0], t), 1e-14));
}

TEST_CASE("series arguments are validated", "[dynamics]") {
  const auto& s = reference_spectrum();
  const auto th = occupations(kReference, 0.26, 64);
  CHECK_THROWS_WITH(series(kReference, s, th, 1.0, 0.0, 1.0, 0.0), "dt must be positive");
  CHECK_THROWS(series(kReference, s, th, 1.0, 0.0, 1.0, 1e-6, 1000));
  CHECK_THROWS(series(kReference, s, occupations(kReference, 0.26, 10), 1.0, 0.0, 1.0, 0.1));
  CHECK(TimeGrid{0.0, 5.0, 0.005}.samples() == 1001);
  CHECK(TimeGrid{0.0, 1.0, 0.3}.samples() == 4);
}

TEST_CASE("extrema of a known oscillation", "[dynamics]") {
  // cos(2 pi t) on an off-centre grid: minima at 0.5, 1.5, maxima at 1, 2.
  std::vector<double> t, v;
  for (int i = 0; i <= 2300; ++i) {
    t.push_back(0.0013 + i * 0.001);
    v.push_back(std::cos(2.0 * std::numbers::pi * t.back()));
  }
  const auto ex = extrema_scan(t, v);
  REQUIRE(ex.size() == 4);
  const double expected[] = {0.5, 1.0, 1.5, 2.0};
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK_THAT(ex[i].time, WithinAbs(expected[i], 1e-6));
    CHECK(ex[i].kind == (i % 2 == 0 ? ExtremumKind::Minimum : ExtremumKind::Maximum));
    CHECK_THAT(ex[i].value, WithinAbs(i % 2 == 0 ? -1.0 : 1.0, 1e-6));
  }
  CHECK(extrema_scan(std::vector<double>{0.0, 1.0}, std::vector<double>{1.0, 2.0}).empty());
}

TEST_CASE("plateau of a synthetic series", "[dynamics]") {
  ObservableSeries s;
  for (int i = 0; i <= 10000; ++i) {
    const double t = i * 0.001;
    s.time.push_back(t);
    s.delta_product.push_back(0.7 + 0.01 * std::sin(2.0 * std::numbers::pi * t));
  }
  const auto pl = plateau_estimate(s, 5.0, 10.0);
  CHECK_THAT(pl.mean, WithinAbs(0.7, 1e-5));
  CHECK_THAT(pl.amplitude, WithinAbs(0.01, 1e-8));
  CHECK_THROWS(plateau_estimate(s, 5.0, 12.0));
  CHECK_THROWS(plateau_estimate(kReference, occupations(kReference, 0.26, 64), 1.0, 4.0));
}

TEST_CASE("decoupled particle keeps the minimum uncertainty", "[dynamics]") {
  const auto p = build_params(1e-20, 5.0, 1e-21);
  const auto s = exact_spectrum(p, Truncation::full(20));
  const auto th = occupations(p, 0.26, 20);
  for (double t : {0.5, 3.0, 40.0}) {
    CHECK_THAT(uncertainty_product(p, s, th, t), WithinAbs(0.5, 1e-12));
    CHECK_THAT(survival_probability(s, t), WithinAbs(1.0, 1e-9));
  }
}

TEST_CASE("uncertainty invariants on random configurations", "[dynamics][property]") {
  testing::ParamGenerator gen(101);
  std::uniform_real_distribution<double> time(0.0, 20.0);
  for (int i = 0; i < 40; ++i) {
    const auto d = gen.next();
    const auto p = gen.params(d);
    const int K = 48;
    const auto s = exact_spectrum(p, Truncation::full(K));
    const auto th = occupations(p, d.beta, K);
    INFO("g=" << d.g << " omega_bar=" << d.omega_bar << " delta=" << d.delta << " beta=" << d.beta);
    for (int j = 0; j < 10; ++j) {
      const double t = time(gen.engine());
      const double delta = uncertainty_product(p, s, th, t);
      CHECK(delta >= 0.5);
      CHECK_THAT(unitarity_sum(s, t), WithinAbs(1.0, 1e-6));
      CHECK_THAT(uncertainty_product_expanded(p, s, th, t), WithinRel(delta, 1e-10));
      CHECK(survival_probability(s, t) <= 1.0 + 1e-12);
    }
  }
}
