#include "fracwave/frac_calculus.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iostream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

namespace fracwave {
namespace {

constexpr double kPi = std::numbers::pi;

// 8-point Gauss-Legendre on [-1, 1].
constexpr int kGl = 8;
constexpr double kGlX[kGl] = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
    -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
    0.7966664774136267,  0.9602898564975363};
constexpr double kGlW[kGl] = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
    0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
    0.2223810344533745, 0.1012285362903763};

// 16-point Gauss-Legendre on [-1, 1], used on substituted singular cells.
constexpr int kGl16 = 16;
constexpr double kGl16X[kGl16] = {
    -0.9894009349916499, -0.9445750230732326, -0.8656312023878318,
    -0.7554044083550030, -0.6178762444026438, -0.4580167776572274,
    -0.2816035507792589, -0.0950125098376374, 0.0950125098376374,
    0.2816035507792589,  0.4580167776572274,  0.6178762444026438,
    0.7554044083550030,  0.8656312023878318,  0.9445750230732326,
    0.9894009349916499};
constexpr double kGl16W[kGl16] = {
    0.0271524594117541, 0.0622535239386479, 0.0951585116824928,
    0.1246289712555339, 0.1495959888165767, 0.1691565193950025,
    0.1826034150449236, 0.1894506104550685, 0.1894506104550685,
    0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479,
    0.0271524594117541};

std::vector<std::size_t> thin_indices(std::size_t n, std::size_t cap) {
  std::vector<std::size_t> idx;
  if (n <= cap) {
    idx.resize(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
  }
  idx.reserve(cap);
  for (std::size_t k = 0; k < cap; ++k) {
    idx.push_back((k * (n - 1)) / (cap - 1));
  }
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

void check_alpha(double alpha, const char* who) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    std::ostringstream os;
    os << who << ": order alpha=" << alpha << " outside (0,1)";
    throw std::invalid_argument(os.str());
  }
}

// Signed primitive of (c + s*t) * t^{-a-1}.
inline double marchaud_prim(double c, double s, double a, double t) {
  return -c * std::pow(t, -a) / a + s * std::pow(t, 1.0 - a) / (1.0 - a);
}

}  // namespace

void SampledPath::validate() const {
  if (z.size() < 2 || z.size() != v.size()) {
    throw std::invalid_argument("SampledPath: need matching grids, >= 2 nodes");
  }
  if (std::abs(z.front()) > 1e-12 * std::max(1.0, std::abs(z.back()))) {
    throw std::invalid_argument("SampledPath: grid must start at 0");
  }
  for (std::size_t i = 1; i < z.size(); ++i) {
    if (!(z[i] > z[i - 1])) {
      throw std::invalid_argument("SampledPath: grid not strictly increasing");
    }
  }
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw std::invalid_argument("SampledPath: non-finite value");
    }
  }
}

std::size_t SampledPath::cell_of(double u) const {
  auto it = std::upper_bound(z.begin(), z.end(), u);
  std::size_t i = static_cast<std::size_t>(it - z.begin());
  if (i == 0) return 0;
  if (i >= z.size()) return z.size() - 2;
  return i - 1;
}

double SampledPath::operator()(double u) const {
  const std::size_t i = cell_of(u);
  const double s = (v[i + 1] - v[i]) / (z[i + 1] - z[i]);
  return v[i] + s * (u - z[i]);
}

namespace {

// D^alpha_{0+} of f * 1_(zlo, zhi) evaluated at u. The window keeps the full
// memory kernel: past-window cells contribute a constant (f~ jumps to 0
// outside). On each linear cell f~(u)-f~(v) = c + s*(u-v); both kernel
// moments integrate in closed form, so the v->u singularity contributes
// exactly (c = 0 on the cell containing u).
double weyl_left_window(const SampledPath& f, double alpha, double u,
                        double zlo, double zhi) {
  if (u <= zlo) return 0.0;
  const double fu = u < zhi ? f(u) : 0.0;
  double tail = 0.0;
  for (std::size_t i = 0; i + 1 < f.z.size() && f.z[i] < std::min(u, zhi);
       ++i) {
    // Constant piece: overlap with [0, min(u, zlo)], integrand fu - 0.
    {
      const double a = f.z[i];
      const double b = std::min({f.z[i + 1], zlo, u});
      if (b > a && fu != 0.0) {
        tail += fu * (std::pow(u - b, -alpha) - std::pow(u - a, -alpha));
      }
    }
    // Linear piece: overlap with [zlo, min(u, zhi)], integrand fu - f(v).
    {
      const double a = std::max(f.z[i], zlo);
      const double b = std::min({f.z[i + 1], u, zhi});
      if (b > a) {
        const double s = (f.v[i + 1] - f.v[i]) / (f.z[i + 1] - f.z[i]);
        const double tlo = u - b;
        const double thi = u - a;
        if (tlo <= 0.0) {
          tail += alpha * s * std::pow(thi, 1.0 - alpha) / (1.0 - alpha);
        } else {
          const double c = fu - f.v[i] - s * (u - f.z[i]);
          tail += c * (std::pow(tlo, -alpha) - std::pow(thi, -alpha)) +
                  alpha * s *
                      (std::pow(thi, 1.0 - alpha) -
                       std::pow(tlo, 1.0 - alpha)) /
                      (1.0 - alpha);
        }
      }
    }
  }
  return (fu / std::pow(u, alpha) + tail) / std::tgamma(1.0 - alpha);
}

}  // namespace

double weyl_left(const SampledPath& f, double alpha, double z) {
  check_alpha(alpha, "weyl_left");
  if (!(z > 0.0 && z <= f.L() * (1.0 + 1e-12))) {
    throw std::invalid_argument("weyl_left: need 0 < z <= L");
  }
  return weyl_left_window(f, alpha, std::min(z, f.L()), 0.0, 2.0 * f.L());
}

WeylRightValue weyl_right_capped(const SampledPath& g, double alpha, double u,
                                 double zcap) {
  check_alpha(alpha, "weyl_right_capped");
  if (!(u >= 0.0 && u < zcap && zcap <= g.L() * (1.0 + 1e-12))) {
    throw std::invalid_argument("weyl_right_capped: need 0 <= u < zcap <= L");
  }
  zcap = std::min(zcap, g.L());
  const double gu = g(u);
  const double gcap = g(zcap);
  double tail = 0.0;
  for (std::size_t i = g.cell_of(u); i + 1 < g.z.size() && g.z[i] < zcap;
       ++i) {
    const double a = std::max(g.z[i], u);
    const double b = std::min(g.z[i + 1], zcap);
    if (!(b > a)) continue;
    const double s = (g.v[i + 1] - g.v[i]) / (g.z[i + 1] - g.z[i]);
    const double tlo = a - u;
    const double thi = b - u;
    if (tlo <= 0.0) {
      tail -= alpha * s * std::pow(thi, 1.0 - alpha) / (1.0 - alpha);
    } else {
      const double c = gu - g.v[i] - s * (u - g.z[i]);
      tail += c * (std::pow(tlo, -alpha) - std::pow(thi, -alpha)) -
              alpha * s *
                  (std::pow(thi, 1.0 - alpha) - std::pow(tlo, 1.0 - alpha)) /
                  (1.0 - alpha);
    }
  }
  const double real =
      ((gu - gcap) / std::pow(zcap - u, alpha) + tail) /
      std::tgamma(1.0 - alpha);
  const std::complex<double> phase(std::cos(kPi * alpha),
                                   std::sin(kPi * alpha));
  return {real, phase * real};
}

WeylRightValue weyl_right(const SampledPath& g, double alpha, double z) {
  return weyl_right_capped(g, alpha, z, g.L());
}

namespace {

// Quadrature node layout for the windowed Stieltjes integrand. Cells opening
// at 0, z_lo or z_hi carry a u = a + h t^{1/(1-alpha)} substitution (the left
// derivative blows up like (u-a)^{-alpha} there); the cell closing at L
// carries L - u = h t^{1/alpha}, which linearizes the (L-u)^alpha decay of
// the right derivative of a Lipschitz driver.
struct WindowSpec {
  double zlo, zhi;
  double alpha;
};

double stieltjes_quad(const SampledPath& f, const SampledPath& g,
                      const WindowSpec& w, const std::vector<double>& nodes) {
  const double L = nodes.back();
  auto integrand = [&](double u) {
    return weyl_left_window(f, w.alpha, u, w.zlo, w.zhi) *
           weyl_right(g, 1.0 - w.alpha, u).real_convention;
  };
  auto is_singular_open = [&](double a) {
    return std::abs(a) < 1e-14 || std::abs(a - w.zlo) < 1e-14 ||
           std::abs(a - w.zhi) < 1e-14;
  };
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    const double a = nodes[i];
    const double b = nodes[i + 1];
    if (b <= w.zlo + 1e-14) continue;  // integrand vanishes below the window
    const bool sub_left = is_singular_open(a);
    const bool sub_right = std::abs(b - L) < 1e-14;
    if (sub_left) {
      const double h = b - a;
      const double p = 1.0 / (1.0 - w.alpha);
      for (int q = 0; q < kGl16; ++q) {
        const double t = 0.5 * (kGl16X[q] + 1.0);
        const double u = a + h * std::pow(t, p);
        if (!(u > a && u < L)) continue;
        total += 0.5 * kGl16W[q] * h * p * std::pow(t, p - 1.0) *
                 integrand(u);
      }
    } else if (sub_right) {
      const double h = b - a;
      const double p = 1.0 / w.alpha;
      for (int q = 0; q < kGl16; ++q) {
        const double t = 0.5 * (kGl16X[q] + 1.0);
        const double u = b - h * std::pow(t, p);
        if (!(u > a && u < b)) continue;
        total += 0.5 * kGl16W[q] * h * p * std::pow(t, p - 1.0) *
                 integrand(u);
      }
    } else {
      const double mid = 0.5 * (a + b);
      const double half = 0.5 * (b - a);
      for (int q = 0; q < kGl; ++q) {
        total += half * kGlW[q] * integrand(mid + half * kGlX[q]);
      }
    }
  }
  return -total;
}

std::vector<double> window_nodes(const SampledPath& f, const SampledPath& g,
                                 double zlo, double zhi) {
  std::vector<double> nodes;
  nodes.reserve(f.z.size() + g.z.size() + 2);
  std::merge(f.z.begin(), f.z.end(), g.z.begin(), g.z.end(),
             std::back_inserter(nodes));
  nodes.push_back(zlo);
  nodes.push_back(zhi);
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end(),
                          [](double a, double b) {
                            return std::abs(a - b) < 1e-14;
                          }),
              nodes.end());
  // Split a lone [zhi, L] cell so the left and right substitutions do not
  // compete for it.
  std::vector<double> out;
  out.reserve(2 * nodes.size());
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    out.push_back(nodes[i]);
    const bool left_sing = std::abs(nodes[i]) < 1e-14 ||
                           std::abs(nodes[i] - zlo) < 1e-14 ||
                           std::abs(nodes[i] - zhi) < 1e-14;
    if (left_sing && std::abs(nodes[i + 1] - nodes.back()) < 1e-14) {
      out.push_back(0.5 * (nodes[i] + nodes[i + 1]));
    }
  }
  out.push_back(nodes.back());
  return out;
}

std::vector<double> halved_nodes(const std::vector<double>& nodes) {
  std::vector<double> out;
  out.reserve(2 * nodes.size());
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    out.push_back(nodes[i]);
    out.push_back(0.5 * (nodes[i] + nodes[i + 1]));
  }
  out.push_back(nodes.back());
  return out;
}

double stieltjes_impl(const SampledPath& f, const SampledPath& g, double alpha,
                      double zlo, double zhi, const char* who) {
  check_alpha(alpha, who);
  f.validate();
  g.validate();
  if (std::abs(f.L() - g.L()) > 1e-12 * std::max(f.L(), g.L())) {
    throw std::invalid_argument(std::string(who) + ": mismatched horizons");
  }
  if (!(zlo >= 0.0 && zlo < zhi && zhi <= f.L() * (1.0 + 1e-12))) {
    throw std::invalid_argument(std::string(who) +
                                ": need 0 <= z_lo < z_hi <= L");
  }
  const double nu_f = holder_exponent_estimate(f);
  const double nu_g = holder_exponent_estimate(g);
  if (nu_f < alpha - 0.1 || nu_g < (1.0 - alpha) - 0.1) {
    std::cerr << "warning: " << who << " at alpha=" << alpha
              << " near regularity limit (f exponent ~ " << nu_f
              << ", g exponent ~ " << nu_g << ")\n";
  }
  const WindowSpec w{zlo, std::min(zhi, f.L()), alpha};
  const std::vector<double> nodes = window_nodes(f, g, w.zlo, w.zhi);
  const double v1 = stieltjes_quad(f, g, w, nodes);
  const double v2 = stieltjes_quad(f, g, w, halved_nodes(nodes));
  const double scale = std::max({std::abs(v1), std::abs(v2), 1e-30});
  if (std::abs(v1 - v2) > 1e-4 * scale && std::abs(v1 - v2) > 1e-10) {
    std::ostringstream os;
    os << who << ": refinement disagreement " << std::abs(v1 - v2)
       << " at alpha=" << alpha
       << "; needs f exponent > alpha (estimated " << nu_f
       << ") and g exponent > " << 1.0 - alpha << " (estimated " << nu_g
       << ")";
    throw std::runtime_error(os.str());
  }
  // The right derivative has alpha-Holder corners at the driver's nodes, so
  // the outer quadrature converges at order 1 + alpha; extrapolate it away.
  const double p = std::pow(2.0, 1.0 + alpha);
  return (p * v2 - v1) / (p - 1.0);
}

}  // namespace

double stieltjes_integral(const SampledPath& f, const SampledPath& g,
                          double alpha) {
  return stieltjes_impl(f, g, alpha, 0.0, f.L(), "stieltjes_integral");
}

std::complex<double> stieltjes_integral(const SampledPath& f_re,
                                        const SampledPath& f_im,
                                        const SampledPath& g, double alpha) {
  return {stieltjes_integral(f_re, g, alpha),
          stieltjes_integral(f_im, g, alpha)};
}

double stieltjes_window(const SampledPath& f, const SampledPath& g,
                        double alpha, double z_lo, double z_hi) {
  return stieltjes_impl(f, g, alpha, z_lo, z_hi, "stieltjes_window");
}

double stieltjes_prefix(const SampledPath& f, const SampledPath& g,
                        double alpha, double z) {
  return stieltjes_impl(f, g, alpha, 0.0, z, "stieltjes_prefix");
}

double lambda_alpha(const SampledPath& g, double alpha) {
  check_alpha(alpha, "lambda_alpha");
  g.validate();
  const std::vector<std::size_t> idx = thin_indices(g.z.size(), 513);
  double sup = 0.0;
  for (std::size_t a = 0; a + 1 < idx.size(); ++a) {
    const double u = g.z[idx[a]];
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      const double zc = g.z[idx[b]];
      sup = std::max(
          sup, std::abs(
                   weyl_right_capped(g, 1.0 - alpha, u, zc).real_convention));
    }
  }
  return sup / (std::tgamma(1.0 - alpha) * std::tgamma(alpha));
}

namespace {

// Exact int_{tlo}^{thi} |c + s*t| t^{-a-1} dt for a cell of the interpolant,
// splitting at the sign change when it falls inside.
double abs_marchaud_cell(double c, double s, double a, double tlo,
                         double thi) {
  if (tlo <= 0.0) {
    // c vanishes identically on the cell touching the base point.
    return std::abs(s) * std::pow(thi, 1.0 - a) / (1.0 - a);
  }
  auto seg = [&](double t0, double t1) {
    const double mid = 0.5 * (t0 + t1);
    const double sgn = (c + s * mid) >= 0.0 ? 1.0 : -1.0;
    return sgn * (marchaud_prim(c, s, a, t1) - marchaud_prim(c, s, a, t0));
  };
  if (s != 0.0) {
    const double root = -c / s;
    if (root > tlo && root < thi) return seg(tlo, root) + seg(root, thi);
  }
  return seg(tlo, thi);
}

// int_0^z |f(z) - f(u)| (z-u)^{-a-1} du, exact per cell.
double abs_increment_tail(const SampledPath& f, double a, double z) {
  double tail = 0.0;
  const double fz = f(z);
  for (std::size_t i = 0; i + 1 < f.z.size() && f.z[i] < z; ++i) {
    const double lo = f.z[i];
    const double hi = std::min(f.z[i + 1], z);
    const double s = (f.v[i + 1] - f.v[i]) / (f.z[i + 1] - f.z[i]);
    const double c = fz - f.v[i] - s * (z - f.z[i]);
    tail += abs_marchaud_cell(c, s, a, z - hi, z - lo);
  }
  return tail;
}

}  // namespace

PathNorms norms(const SampledPath& path, double alpha, double beta) {
  check_alpha(alpha, "norms");
  check_alpha(beta, "norms");
  path.validate();
  const std::vector<std::size_t> idx = thin_indices(path.z.size(), 513);

  double walpha = std::abs(path.v[0]);
  for (std::size_t k = 1; k < idx.size(); ++k) {
    const double z = path.z[idx[k]];
    walpha = std::max(walpha, std::abs(path(z)) +
                                  abs_increment_tail(path, alpha, z));
  }

  double sup = 0.0;
  for (double x : path.v) sup = std::max(sup, std::abs(x));
  double hold = 0.0;
  for (std::size_t a = 0; a + 1 < idx.size(); ++a) {
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      const double dz = path.z[idx[b]] - path.z[idx[a]];
      hold = std::max(hold, std::abs(path.v[idx[b]] - path.v[idx[a]]) /
                                std::pow(dz, beta));
    }
  }

  // Garsia-Rodemich-Rumsey with Psi = x^p, p(u) = u^{beta + 2/p}:
  // |f(t)-f(s)| <= 8 (4B)^{1/p} (beta + 2/p)/beta * |t-s|^beta.
  const double p = 8.0;
  double bsum = 0.0;
  for (std::size_t a = 0; a + 1 < idx.size(); ++a) {
    const double ua = 0.5 * (path.z[idx[a]] + path.z[idx[a + 1]]);
    const double wa = path.z[idx[a + 1]] - path.z[idx[a]];
    const double fa = path(ua);
    for (std::size_t b = a + 1; b + 1 < idx.size(); ++b) {
      const double ub = 0.5 * (path.z[idx[b]] + path.z[idx[b + 1]]);
      const double wb = path.z[idx[b + 1]] - path.z[idx[b]];
      const double num = std::pow(std::abs(path(ub) - fa), p);
      bsum += 2.0 * wa * wb * num / std::pow(ub - ua, beta * p + 2.0);
    }
  }
  const double zgarsia =
      8.0 * std::pow(4.0 * bsum, 1.0 / p) * (beta + 2.0 / p) / beta;

  return {walpha, sup + hold, zgarsia};
}

double norm_alpha_l1(const SampledPath& f, double alpha) {
  check_alpha(alpha, "norm_alpha_l1");
  f.validate();
  auto integrand = [&](double u) {
    return std::abs(f(u)) / std::pow(u, alpha) +
           abs_increment_tail(f, alpha, u);
  };
  double total = 0.0;
  {
    const double h = f.z[1];
    const double p = 1.0 / (1.0 - alpha);
    for (int q = 0; q < kGl16; ++q) {
      const double t = 0.5 * (kGl16X[q] + 1.0);
      const double w = 0.5 * kGl16W[q];
      const double u = h * std::pow(t, p);
      total += w * h * p * std::pow(t, p - 1.0) * integrand(u);
    }
  }
  for (std::size_t i = 1; i + 1 < f.z.size(); ++i) {
    const double mid = 0.5 * (f.z[i] + f.z[i + 1]);
    const double half = 0.5 * (f.z[i + 1] - f.z[i]);
    for (int q = 0; q < kGl; ++q) {
      total += half * kGlW[q] * integrand(mid + half * kGlX[q]);
    }
  }
  return total;
}

double holder_exponent_estimate(const SampledPath& f) {
  f.validate();
  const std::size_t m = 512;
  const double dz = f.L() / static_cast<double>(m);
  std::vector<double> u(m + 1);
  for (std::size_t i = 0; i <= m; ++i) {
    u[i] = f(std::min(f.L(), static_cast<double>(i) * dz));
  }
  std::vector<double> lx, ly;
  for (std::size_t lag = 1; lag <= m / 8; lag *= 2) {
    double s2 = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = 0; i + lag <= m; ++i, ++cnt) {
      const double d = u[i + lag] - u[i];
      s2 += d * d;
    }
    s2 /= static_cast<double>(cnt);
    if (s2 <= 0.0) return 1.0;
    lx.push_back(std::log(static_cast<double>(lag) * dz));
    ly.push_back(std::log(s2));
  }
  const double n = static_cast<double>(lx.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return 0.5 * slope;
}

}  // namespace fracwave
