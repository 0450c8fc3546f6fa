#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fracwave {

// Odd bounded coupling function Theta applied to the latent Gaussian field.
struct ThetaSpec {
  enum class Family { sine, cubic, identity, tabulated };

  Family family = Family::sine;
  double a = 1.0;  // sine frequency
  // tabulated: piecewise-linear graph, u strictly increasing. The model wants
  // Theta odd and bounded with all derivatives bounded; for user tables this
  // is flagged in validate(), not enforced.
  std::vector<double> table_u, table_v;

  double operator()(double u) const;
  double sup_abs() const;  // sup |Theta| over a wide latent range
  // Non-fatal diagnostics for tabulated inputs (odd/bounded heuristics).
  std::vector<std::string> validate() const;

  static ThetaSpec sine(double a) { return {Family::sine, a, {}, {}}; }
  static ThetaSpec cubic() { return {Family::cubic, 1.0, {}, {}}; }
  static ThetaSpec identity() { return {Family::identity, 1.0, {}, {}}; }
};

// Long-range autocovariance law r(z) ~ c_frak / z^hurst_frak with spectral
// density proportional to 1_{|k|<kappa_c} |k|^{hurst_frak - 1}.
struct LongRangeLaw {
  double hurst_frak = 0.5;  // in (0,1), exclusive
  double c_frak = 1.0;      // tail amplitude
  double kappa_c = 15.0;    // spectral cutoff

  double H() const { return 1.0 - 0.5 * hurst_frak; }
  double s() const { return 2.0 - 0.5 * hurst_frak; }

  // c_frak implied by the cutoff density, normalized so r(0) = 1.
  static double c_frak_from_cutoff(double hurst_frak, double kappa_c);
  static LongRangeLaw from_cutoff(double hurst_frak, double kappa_c);
};

// Probabilists' Hermite polynomial H_l (H_0 = 1, H_1 = u).
double hermite_eval(int l, double u);

// Coefficients Theta_l = <H_l, Theta>_{g du}, l = 0..l_max. Analytic families
// use Gauss-Hermite quadrature with node doubling until stable to 1e-10
// (throws if the doubling does not converge); tabulated Theta integrates the
// piecewise-linear interpolant against H_l g in closed form (kinks defeat
// Gauss quadrature).
std::vector<double> hermite_coeffs(const ThetaSpec& theta, int l_max = 32);

// Same coefficients against the orthonormal polynomials H_l/sqrt(l!); this is
// the numerically stable representation at large l.
std::vector<double> hermite_coeffs_normalized(const ThetaSpec& theta,
                                              int l_max = 32);

// sum_{l>=1} (Theta_l^2 / l!) (r * rhat)^l, truncated at 1e-14 relative.
double mehler_covariance(const ThetaSpec& theta, double r, double rhat);

struct ThetaConstants {
  double theta1;   // first Hermite coefficient
  double C_frak;   // c_frak * theta1^2
  double sigma_H;  // sqrt(C_frak / (H(2H-1)))
  double C_H;      // H Gamma(2H) sin(pi H) / pi
  double c_tilde;  // Gamma(2H-1) sin(pi H) / pi
  double H;
  double s;
};

// Throws std::invalid_argument if hurst_frak is outside (0,1) or Theta_1
// vanishes (the long-range amplitude is then undefined).
ThetaConstants constants(const ThetaSpec& theta, const LongRangeLaw& law);

// Gauss-Hermite rule for integral of f(t) e^{-t^2} dt (physicists' weight),
// exposed for quadrature tests.
void gauss_hermite(int n, std::vector<double>& nodes, std::vector<double>& wts);

}  // namespace fracwave
