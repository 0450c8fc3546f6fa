#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fracwave/rng.hpp"
#include "fracwave/special_fn.hpp"

#include <cmath>
#include <numbers>

using namespace fracwave;

TEST_CASE("hermite recurrence closed forms") {
  CHECK(hermite_eval(0, 0.3) == 1.0);
  CHECK(hermite_eval(1, 0.3) == 0.3);
  CHECK(hermite_eval(2, 0.0) == -1.0);   // u^2 - 1 at 0
  CHECK(hermite_eval(3, 1.0) == -2.0);   // u^3 - 3u at 1
  CHECK(hermite_eval(4, 2.0) == doctest::Approx(2.0 * 2 * 2 * 2 - 6.0 * 4 + 3.0));
}

TEST_CASE("gauss-hermite orthogonality <H_l,H_m> = l! delta_lm") {
  std::vector<double> t, w;
  gauss_hermite(64, t, w);
  const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);
  for (int l = 0; l <= 6; ++l) {
    for (int m = 0; m <= 6; ++m) {
      double acc = 0.0;
      for (std::size_t i = 0; i < t.size(); ++i) {
        const double u = std::numbers::sqrt2 * t[i];
        acc += w[i] * inv_sqrt_pi * hermite_eval(l, u) * hermite_eval(m, u);
      }
      double expect = 0.0;
      if (l == m) {
        expect = 1.0;
        for (int k = 2; k <= l; ++k) expect *= k;
      }
      CHECK(acc == doctest::Approx(expect).epsilon(1e-10).scale(expect + 1.0));
    }
  }
  // <H_4,H_4> = 24 specifically, to 1e-10 relative.
  double h44 = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double u = std::numbers::sqrt2 * t[i];
    const double h4 = hermite_eval(4, u);
    h44 += w[i] * inv_sqrt_pi * h4 * h4;
  }
  CHECK(std::abs(h44 - 24.0) < 24.0 * 1e-10);
}

TEST_CASE("hermite_coeffs cubic: Theta_1 = 3, Theta_3 = 6") {
  const auto c = hermite_coeffs(ThetaSpec::cubic(), 8);
  CHECK(std::abs(c[0]) < 1e-10);
  CHECK(c[1] == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(std::abs(c[2]) < 1e-10);
  CHECK(c[3] == doctest::Approx(6.0).epsilon(1e-10));
  for (int l = 4; l <= 8; ++l) CHECK(std::abs(c[std::size_t(l)]) < 1e-9);
}

TEST_CASE("hermite_coeffs sine: Theta_l = a^l e^{-a^2/2} sin(l pi/2)") {
  for (double a : {1.0, 2.5}) {
    const auto c = hermite_coeffs(ThetaSpec::sine(a), 6);
    const double e = std::exp(-0.5 * a * a);
    CHECK(std::abs(c[0]) < 1e-12);
    CHECK(c[1] == doctest::Approx(a * e).epsilon(1e-9));
    CHECK(std::abs(c[2]) < 1e-10);
    CHECK(c[3] == doctest::Approx(-a * a * a * e).epsilon(1e-9));
    CHECK(std::abs(c[4]) < 1e-9);
    CHECK(c[5] == doctest::Approx(std::pow(a, 5) * e).epsilon(1e-8));
  }
  // Frozen values for a = 1.
  const auto c1 = hermite_coeffs(ThetaSpec::sine(1.0), 3);
  CHECK(c1[1] == doctest::Approx(0.6065306597126334).epsilon(1e-12));
  CHECK(c1[3] == doctest::Approx(-0.6065306597126334).epsilon(1e-12));
}

TEST_CASE("mehler series: identity Theta gives rho itself") {
  CHECK(mehler_covariance(ThetaSpec::identity(), 0.5, 1.0) ==
        doctest::Approx(0.5).epsilon(1e-14));
  CHECK(mehler_covariance(ThetaSpec::identity(), -0.25, 0.5) ==
        doctest::Approx(-0.125).epsilon(1e-14));
}

TEST_CASE("mehler series: sine closed form e^{-a^2} sinh(a^2 rho)") {
  for (double a : {1.0, 1.7}) {
    ThetaSpec th = ThetaSpec::sine(a);
    for (double r : {0.8, -0.5, 0.05}) {
      for (double rhat : {1.0, 0.9}) {
        const double rho = r * rhat;
        const double expect = std::exp(-a * a) * std::sinh(a * a * rho);
        CHECK(mehler_covariance(th, r, rhat) ==
              doctest::Approx(expect).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("mehler matches Monte Carlo for sine Theta") {
  const double rho = 0.6;
  RngStream g(11, "mehler-mc");
  const int n = 1000000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z1 = g.normal();
    const double z2 = g.normal();
    const double x = z1;
    const double y = rho * z1 + std::sqrt(1.0 - rho * rho) * z2;
    const double v = std::sin(x) * std::sin(y);
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  const double sigma = std::sqrt(var / n);
  const double expect = mehler_covariance(ThetaSpec::sine(1.0), rho, 1.0);
  CHECK(std::abs(mean - expect) < 3.0 * sigma);
}

TEST_CASE("constants: closed-form anchors and internal identities") {
  LongRangeLaw law{0.5, 1.0, 15.0};
  CHECK(law.H() == doctest::Approx(0.75));
  CHECK(law.s() == doctest::Approx(1.75));

  const auto ci = constants(ThetaSpec::identity(), law);
  CHECK(ci.C_frak == doctest::Approx(1.0).epsilon(1e-10));

  const auto cs = constants(ThetaSpec::sine(1.0), law);
  CHECK(cs.C_frak == doctest::Approx(std::exp(-1.0)).epsilon(1e-10));

  for (const auto& c : {ci, cs}) {
    CHECK(c.sigma_H * c.sigma_H * c.H * (2.0 * c.H - 1.0) ==
          doctest::Approx(c.C_frak).epsilon(1e-12));
    CHECK(c.C_H ==
          doctest::Approx(c.H * (2.0 * c.H - 1.0) * c.c_tilde).epsilon(1e-12));
  }
}

TEST_CASE("constants rejects invalid laws and vanishing Theta_1") {
  CHECK_THROWS_AS(constants(ThetaSpec::sine(1.0), LongRangeLaw{0.0, 1.0, 15.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(constants(ThetaSpec::sine(1.0), LongRangeLaw{1.0, 1.0, 15.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(constants(ThetaSpec::sine(1.0), LongRangeLaw{-0.2, 1.0, 15.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(constants(ThetaSpec::sine(1.0), LongRangeLaw{1.3, 1.0, 15.0}),
                  std::invalid_argument);

  // Even tabulated Theta: Theta_1 = 0.
  ThetaSpec even;
  even.family = ThetaSpec::Family::tabulated;
  for (int i = 0; i <= 200; ++i) {
    const double u = -6.0 + 12.0 * i / 200.0;
    even.table_u.push_back(u);
    even.table_v.push_back(u * u);
  }
  CHECK_THROWS_AS(constants(even, LongRangeLaw{0.5, 1.0, 15.0}),
                  std::invalid_argument);
  CHECK_FALSE(even.validate().empty());  // not odd -> flagged, not fatal
}

TEST_CASE("hermite node doubling converges for smooth tabulated Theta") {
  ThetaSpec tab;
  tab.family = ThetaSpec::Family::tabulated;
  for (int i = 0; i <= 4000; ++i) {
    const double u = -10.0 + 20.0 * i / 4000.0;
    tab.table_u.push_back(u);
    tab.table_v.push_back(std::sin(u));
  }
  const auto c = hermite_coeffs(tab, 4);
  CHECK(c[1] == doctest::Approx(std::exp(-0.5)).epsilon(1e-5));
  CHECK(tab.validate().empty());
}
