#include "fracwave/special_fn.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fracwave {

double ThetaSpec::operator()(double u) const {
  switch (family) {
    case Family::sine:
      return std::sin(a * u);
    case Family::cubic:
      return u * u * u;
    case Family::identity:
      return u;
    case Family::tabulated: {
      if (table_u.size() < 2) return 0.0;
      if (u <= table_u.front()) return table_v.front();
      if (u >= table_u.back()) return table_v.back();
      const auto it = std::upper_bound(table_u.begin(), table_u.end(), u);
      const std::size_t i = std::size_t(it - table_u.begin()) - 1;
      const double t = (u - table_u[i]) / (table_u[i + 1] - table_u[i]);
      return table_v[i] + t * (table_v[i + 1] - table_v[i]);
    }
  }
  return 0.0;
}

double ThetaSpec::sup_abs() const {
  switch (family) {
    case Family::sine:
      return 1.0;
    case Family::identity:
    case Family::cubic: {
      // Latent field is standard Gaussian; report the sup over +-8 sigma.
      const double m = 8.0;
      return family == Family::cubic ? m * m * m : m;
    }
    case Family::tabulated: {
      double s = 0.0;
      for (double v : table_v) s = std::max(s, std::abs(v));
      return s;
    }
  }
  return 0.0;
}

std::vector<std::string> ThetaSpec::validate() const {
  std::vector<std::string> warnings;
  if (family != Family::tabulated) return warnings;
  if (table_u.size() != table_v.size() || table_u.size() < 2) {
    warnings.push_back("tabulated Theta: table has fewer than 2 points");
    return warnings;
  }
  for (std::size_t i = 1; i < table_u.size(); ++i)
    if (table_u[i] <= table_u[i - 1]) {
      warnings.push_back("tabulated Theta: abscissae not strictly increasing");
      return warnings;
    }
  double odd_defect = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < table_u.size(); ++i) {
    const double v = table_v[i];
    const double vm = (*this)(-table_u[i]);
    odd_defect = std::max(odd_defect, std::abs(v + vm));
    scale = std::max(scale, std::abs(v));
  }
  if (odd_defect > 1e-8 * std::max(scale, 1.0))
    warnings.push_back("tabulated Theta is not odd (model assumes odd)");
  return warnings;
}

double LongRangeLaw::c_frak_from_cutoff(double hurst_frak, double kappa_c) {
  // r(z) = int cos(kz) k^{h-1} dk / int k^{h-1} dk over (0, kappa_c);
  // the tail of the normalized transform is h*Gamma(h)*cos(pi h/2) (kc z)^{-h}.
  const double h = hurst_frak;
  return h * std::tgamma(h) * std::cos(0.5 * std::numbers::pi * h) /
         std::pow(kappa_c, h);
}

LongRangeLaw LongRangeLaw::from_cutoff(double hurst_frak, double kappa_c) {
  return {hurst_frak, c_frak_from_cutoff(hurst_frak, kappa_c), kappa_c};
}

double hermite_eval(int l, double u) {
  if (l < 0) throw std::invalid_argument("hermite_eval: l must be >= 0");
  double hm = 1.0;  // H_0
  if (l == 0) return hm;
  double h = u;  // H_1
  for (int k = 1; k < l; ++k) {
    const double hp = u * h - double(k) * hm;
    hm = h;
    h = hp;
  }
  return h;
}

void gauss_hermite(int n, std::vector<double>& nodes,
                   std::vector<double>& wts) {
  // Nodes: Golub-Welsch eigenvalues of the Jacobi matrix, then Newton-polished
  // on the orthonormal p_n. Weights: Christoffel function 1/sum p_k^2, which
  // stays accurate for extreme nodes where eigenvector components underflow.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double b = std::sqrt(0.5 * double(i));
    J(i, i - 1) = b;
    J(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J, Eigen::EigenvaluesOnly);
  nodes.resize(n);
  wts.resize(n);

  // Orthonormal physicists' Hermite: p_0 = pi^{-1/4},
  // p_{k+1} = t sqrt(2/(k+1)) p_k - sqrt(k/(k+1)) p_{k-1}; p_n' = sqrt(2n) p_{n-1}.
  const double p0 = 1.0 / std::pow(std::numbers::pi, 0.25);
  auto eval_all = [&](double t, double& pn, double& pnm1, double& christoffel) {
    double pm = 0.0, p = p0;
    christoffel = p * p;
    for (int k = 0; k < n; ++k) {
      const double pp = t * std::sqrt(2.0 / double(k + 1)) * p -
                        std::sqrt(double(k) / double(k + 1)) * pm;
      pm = p;
      p = pp;
      if (k + 1 < n) christoffel += p * p;
    }
    pn = p;
    pnm1 = pm;
  };

  for (int i = 0; i < n; ++i) {
    double t = es.eigenvalues()(i);
    double pn, pnm1, chris;
    for (int it = 0; it < 3; ++it) {
      eval_all(t, pn, pnm1, chris);
      const double dpn = std::sqrt(2.0 * double(n)) * pnm1;
      if (dpn == 0.0) break;
      const double step = pn / dpn;
      t -= step;
      if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(t))) break;
    }
    eval_all(t, pn, pnm1, chris);
    nodes[i] = t;
    wts[i] = 1.0 / chris;
  }
}

namespace {

// Normalized coefficients <H_l/sqrt(l!), Theta> by n-node Gauss-Hermite. The
// orthonormal recurrence keeps every summand O(1), so roundoff stays near eps
// even at l ~ 32 (the raw H_l path loses ~sqrt(l!) digits to cancellation).
std::vector<double> coeffs_at(const ThetaSpec& theta, int l_max, int n_nodes) {
  std::vector<double> t, w;
  gauss_hermite(n_nodes, t, w);
  std::vector<double> c(std::size_t(l_max) + 1, 0.0);
  const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);
  for (int i = 0; i < n_nodes; ++i) {
    const double u = std::numbers::sqrt2 * t[i];
    const double f = theta(u) * w[i] * inv_sqrt_pi;
    double hm = 1.0, h = u;  // orthonormal: h_0 = 1, h_1 = u
    c[0] += f * hm;
    if (l_max >= 1) c[1] += f * h;
    for (int l = 1; l < l_max; ++l) {
      const double hp =
          (u * h - std::sqrt(double(l)) * hm) / std::sqrt(double(l + 1));
      hm = h;
      h = hp;
      c[std::size_t(l) + 1] += f * h;
    }
  }
  return c;
}

double normal_pdf(double u) {
  return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_cdf(double u) {
  return 0.5 * std::erfc(-u / std::numbers::sqrt2);
}

// Exact coefficients of a piecewise-linear Theta (clamped outside the table)
// against raw H_l, using int H_l g du = [-H_{l-1} g] and
// u H_l = H_{l+1} + l H_{l-1}.
std::vector<double> coeffs_tabulated_raw(const ThetaSpec& theta, int l_max) {
  const auto& U = theta.table_u;
  const auto& V = theta.table_v;
  const std::size_t N = U.size();
  if (N < 2 || V.size() != N)
    throw std::invalid_argument("hermite_coeffs: tabulated Theta needs >= 2 points");

  // H_l at knots, l = 0..l_max+1.
  std::vector<std::vector<double>> Hk(std::size_t(l_max) + 2,
                                      std::vector<double>(N));
  std::vector<double> gk(N), Fk(N);
  for (std::size_t i = 0; i < N; ++i) {
    gk[i] = normal_pdf(U[i]);
    Fk[i] = normal_cdf(U[i]);
    Hk[0][i] = 1.0;
    if (l_max + 1 >= 1) Hk[1][i] = U[i];
    for (int l = 1; l <= l_max; ++l)
      Hk[std::size_t(l) + 1][i] =
          U[i] * Hk[std::size_t(l)][i] - double(l) * Hk[std::size_t(l) - 1][i];
  }

  // P_l over [a,b] and over the clamped tails.
  auto P = [&](int l, std::size_t ia, std::size_t ib) {
    if (l == 0) return Fk[ib] - Fk[ia];
    return Hk[std::size_t(l) - 1][ia] * gk[ia] - Hk[std::size_t(l) - 1][ib] * gk[ib];
  };
  auto P_left_tail = [&](int l) {  // (-inf, u_0]
    if (l == 0) return Fk[0];
    return -Hk[std::size_t(l) - 1][0] * gk[0];
  };
  auto P_right_tail = [&](int l) {  // [u_{N-1}, inf)
    if (l == 0) return 1.0 - Fk[N - 1];
    return Hk[std::size_t(l) - 1][N - 1] * gk[N - 1];
  };

  std::vector<double> c(std::size_t(l_max) + 1, 0.0);
  for (int l = 0; l <= l_max; ++l) {
    double acc = V.front() * P_left_tail(l) + V.back() * P_right_tail(l);
    for (std::size_t i = 0; i + 1 < N; ++i) {
      const double slope = (V[i + 1] - V[i]) / (U[i + 1] - U[i]);
      const double icpt = V[i] - slope * U[i];
      const double Pl = P(l, i, i + 1);
      // int u H_l g: split via the three-term identity.
      const double Pu =
          P(l + 1, i, i + 1) + (l >= 1 ? double(l) * P(l - 1, i, i + 1) : 0.0);
      acc += icpt * Pl + slope * Pu;
    }
    c[std::size_t(l)] = acc;
  }
  return c;
}

double sqrt_factorial(int l) {
  double s = 1.0;
  for (int k = 2; k <= l; ++k) s *= std::sqrt(double(k));
  return s;
}

}  // namespace

std::vector<double> hermite_coeffs_normalized(const ThetaSpec& theta,
                                              int l_max) {
  if (l_max < 1) throw std::invalid_argument("hermite_coeffs: l_max >= 1");
  if (theta.family == ThetaSpec::Family::tabulated) {
    std::vector<double> c = coeffs_tabulated_raw(theta, l_max);
    for (int l = 2; l <= l_max; ++l) c[std::size_t(l)] /= sqrt_factorial(l);
    return c;
  }
  int n = 64;
  std::vector<double> prev = coeffs_at(theta, l_max, n);
  while (n <= 1024) {
    const int n2 = 2 * n;
    std::vector<double> cur = coeffs_at(theta, l_max, n2);
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < cur.size(); ++i) {
      err = std::max(err, std::abs(cur[i] - prev[i]));
      scale = std::max(scale, std::abs(cur[i]));
    }
    if (err <= 1e-10 * std::max(scale, 1.0)) return cur;
    prev = std::move(cur);
    n = n2;
  }
  throw std::runtime_error(
      "hermite_coeffs: Gauss-Hermite node doubling did not stabilize to 1e-10 "
      "(is Theta too rough for the Hermite expansion?)");
}

std::vector<double> hermite_coeffs(const ThetaSpec& theta, int l_max) {
  std::vector<double> c = hermite_coeffs_normalized(theta, l_max);
  for (int l = 2; l <= l_max; ++l) c[std::size_t(l)] *= sqrt_factorial(l);
  return c;
}

double mehler_covariance(const ThetaSpec& theta, double r, double rhat) {
  if (r < -1.0 || r > 1.0)
    throw std::invalid_argument("mehler_covariance: r must be in [-1,1]");
  if (rhat <= 0.0 || rhat > 1.0)
    throw std::invalid_argument("mehler_covariance: rhat must be in (0,1]");
  const std::vector<double> c = hermite_coeffs_normalized(theta, 32);
  const double rho = r * rhat;
  double sum = 0.0, rp = 1.0;
  int small_run = 0;
  for (std::size_t l = 1; l < c.size(); ++l) {
    rp *= rho;
    const double term = c[l] * c[l] * rp;  // Theta_l^2/l! = normalized^2
    sum += term;
    // Zero coefficients alternate for odd Theta; demand two consecutive
    // negligible terms before truncating.
    small_run =
        std::abs(term) < 1e-14 * std::max(std::abs(sum), 1e-300) ? small_run + 1 : 0;
    if (l >= 4 && small_run >= 2) break;
  }
  return sum;
}

ThetaConstants constants(const ThetaSpec& theta, const LongRangeLaw& law) {
  if (!(law.hurst_frak > 0.0) || !(law.hurst_frak < 1.0))
    throw std::invalid_argument(
        "constants: hurst_frak must lie in the open interval (0,1)");
  const std::vector<double> c = hermite_coeffs(theta, 4);
  const double theta1 = c[1];
  if (std::abs(theta1) < 1e-12)
    throw std::invalid_argument(
        "constants: Theta_1 vanishes; the long-range amplitude C_frak is "
        "undefined for this Theta");
  ThetaConstants out;
  out.theta1 = theta1;
  out.H = law.H();
  out.s = law.s();
  out.C_frak = law.c_frak * theta1 * theta1;
  out.sigma_H = std::sqrt(out.C_frak / (out.H * (2.0 * out.H - 1.0)));
  out.C_H = out.H * std::tgamma(2.0 * out.H) *
            std::sin(std::numbers::pi * out.H) / std::numbers::pi;
  out.c_tilde = std::tgamma(2.0 * out.H - 1.0) *
                std::sin(std::numbers::pi * out.H) / std::numbers::pi;
  return out;
}

}  // namespace fracwave
