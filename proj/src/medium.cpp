#include "fracwave/medium.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace fracwave {
namespace {

constexpr double kPi = std::numbers::pi;

// 4-point Gauss-Legendre on [-1, 1], composed per oscillation panel.
constexpr int kGl4 = 4;
constexpr double kGl4X[kGl4] = {-0.8611363115940526, -0.3399810435848563,
                                0.3399810435848563, 0.8611363115940526};
constexpr double kGl4W[kGl4] = {0.3478548451374538, 0.6521451548625461,
                                0.6521451548625461, 0.3478548451374538};

}  // namespace

double AtomicMeasure::total_variation() const {
  double tv = 0.0;
  for (const Atom& at : atoms) tv += at.a * std::abs(at.U);
  return tv;
}

void AtomicMeasure::validate() const {
  if (atoms.empty() || atoms.size() % 2 != 0) {
    throw std::invalid_argument(
        "AtomicMeasure: atoms must come in mirror pairs");
  }
  for (std::size_t i = 0; i < atoms.size(); i += 2) {
    const Atom& at = atoms[i];
    const Atom& mi = atoms[i + 1];
    if (std::abs(at.a - mi.a) > 1e-12 ||
        std::abs(at.U - std::conj(mi.U)) > 1e-12 ||
        std::abs(at.q + mi.q) > 1e-12) {
      throw std::invalid_argument("AtomicMeasure: mirror closure violated");
    }
    if (at.a < 0.0) {
      throw std::invalid_argument("AtomicMeasure: negative weight");
    }
  }
  for (const Atom& at : atoms) {
    if (std::abs(at.q) > support_radius + 1e-12) {
      throw std::invalid_argument("AtomicMeasure: atom outside support");
    }
  }
  if (total_variation() > tv_cap + 1e-9) {
    throw std::runtime_error("AtomicMeasure: total variation cap exceeded");
  }
}

std::vector<std::size_t> AtomicMeasure::half_set() const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < atoms.size(); i += 2) idx.push_back(i);
  return idx;
}

double MeasureSpec::effective_cap() const {
  if (tv_cap > 0.0) return tv_cap;
  return 2.0 * static_cast<double>(n_atoms) * atom_weight * disk_radius;
}

double MeasureSpec::e_u2() const {
  if (complex_disk) return 0.5 * disk_radius * disk_radius;
  return disk_radius * disk_radius / 3.0;
}

std::vector<double> MeasureSpec::lattice() const {
  const double dq = 2.0 * kPi / x_period;
  const long kmax = static_cast<long>(std::floor(support_radius / dq + 1e-9));
  std::vector<double> pts;
  for (long k = -kmax; k <= kmax; ++k) {
    pts.push_back(static_cast<double>(k) * dq);
  }
  return pts;
}

double measure_r0(const MeasureSpec& spec, double x) {
  const std::vector<double> pts = spec.lattice();
  double avg = 0.0;
  for (double q : pts) avg += std::cos(q * x);
  avg /= static_cast<double>(pts.size());
  return 2.0 * static_cast<double>(spec.n_atoms) * spec.atom_weight *
         spec.atom_weight * spec.e_u2() * avg;
}

KernelSpec KernelSpec::gaussian_sym(double ell) {
  return {"gaussian_sym", [ell](double p, double q) {
            const double d = std::abs(p) - std::abs(q);
            return std::exp(-d * d / (2.0 * ell * ell));
          }};
}

KernelSpec KernelSpec::gaussian(double ell) {
  return {"gaussian", [ell](double p, double q) {
            const double d = p - q;
            return std::exp(-d * d / (2.0 * ell * ell));
          }};
}

KernelSpec KernelSpec::constant() {
  return {"constant", [](double, double) { return 1.0; }};
}

double KernelEigen::eval_eigvec(std::size_t n, double q) const {
  const double beta = eigvals(static_cast<Eigen::Index>(n));
  double acc = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    acc += weights[i] * kernel.eval(q, nodes[i]) *
           eigvecs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n));
  }
  return acc / beta;
}

double KernelEigen::reconstruct(double p, double q) const {
  double acc = 0.0;
  for (std::size_t n = 0; n < rank(); ++n) {
    acc += eigvals(static_cast<Eigen::Index>(n)) * eval_eigvec(n, p) *
           eval_eigvec(n, q);
  }
  return acc;
}

KernelEigen build_kernel(const KernelSpec& spec, double support_radius,
                         std::size_t node_count) {
  if (node_count < 3 || !(support_radius > 0.0)) {
    throw std::invalid_argument("build_kernel: bad domain");
  }
  KernelEigen out;
  out.kernel = spec;
  out.nodes.resize(node_count);
  out.weights.resize(node_count);
  const double h = 2.0 * support_radius / static_cast<double>(node_count - 1);
  for (std::size_t i = 0; i < node_count; ++i) {
    out.nodes[i] = -support_radius + static_cast<double>(i) * h;
    out.weights[i] = (i == 0 || i + 1 == node_count) ? 0.5 * h : h;
  }

  Eigen::MatrixXd km(static_cast<Eigen::Index>(node_count),
                     static_cast<Eigen::Index>(node_count));
  for (std::size_t i = 0; i < node_count; ++i) {
    for (std::size_t j = 0; j < node_count; ++j) {
      const double kij = spec.eval(out.nodes[i], out.nodes[j]);
      const double kji = spec.eval(out.nodes[j], out.nodes[i]);
      if (std::abs(kij - kji) > 1e-10 || !(kij > 0.0) || kij > 1.0 + 1e-12) {
        throw std::invalid_argument(
            "build_kernel: kernel must be symmetric with values in (0, 1]");
      }
      km(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = kij;
    }
    if (std::abs(km(static_cast<Eigen::Index>(i),
                    static_cast<Eigen::Index>(i)) -
                 1.0) > 1e-12) {
      throw std::invalid_argument("build_kernel: R-hat(q,q) must equal 1");
    }
  }

  // Symmetrized Nystrom: eigenpairs of D^{1/2} K D^{1/2}.
  Eigen::VectorXd sqw(static_cast<Eigen::Index>(node_count));
  for (std::size_t i = 0; i < node_count; ++i) {
    sqw(static_cast<Eigen::Index>(i)) = std::sqrt(out.weights[i]);
  }
  const Eigen::MatrixXd sym =
      sqw.asDiagonal() * km * sqw.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("build_kernel: eigen-decomposition failed");
  }

  const Eigen::Index n = static_cast<Eigen::Index>(node_count);
  std::vector<std::pair<double, Eigen::Index>> order;
  for (Eigen::Index i = 0; i < n; ++i) {
    double beta = es.eigenvalues()(i);
    if (std::abs(beta) < 1e-12) beta = 0.0;  // absorb numerical negativity
    order.emplace_back(beta, i);
  }
  std::sort(order.begin(), order.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  const double beta1 = std::max(order.front().first, 0.0);
  std::size_t keep = 0;
  while (keep < order.size() && order[keep].first > 1e-10 * beta1) ++keep;

  out.eigvals.resize(static_cast<Eigen::Index>(keep));
  out.eigvecs.resize(n, static_cast<Eigen::Index>(keep));
  for (std::size_t m = 0; m < keep; ++m) {
    out.eigvals(static_cast<Eigen::Index>(m)) = order[m].first;
    for (Eigen::Index i = 0; i < n; ++i) {
      out.eigvecs(i, static_cast<Eigen::Index>(m)) =
          es.eigenvectors()(i, order[m].second) / sqw(i);
    }
  }
  return out;
}

AtomicMeasure sample_measure(const MeasureSpec& spec, RngStream& rng) {
  const std::vector<double> pts = spec.lattice();
  AtomicMeasure out;
  out.support_radius = spec.support_radius;
  out.tv_cap = spec.effective_cap();
  out.atoms.reserve(2 * spec.n_atoms);
  for (std::size_t j = 0; j < spec.n_atoms; ++j) {
    const double q = pts[rng.uniform_index(pts.size())];
    std::complex<double> u;
    if (spec.complex_disk) {
      const double rad = spec.disk_radius * std::sqrt(rng.uniform01());
      const double ang = 2.0 * kPi * rng.uniform01();
      u = std::polar(rad, ang);
    } else {
      u = rng.uniform(-spec.disk_radius, spec.disk_radius);
    }
    out.atoms.push_back({spec.atom_weight, u, q});
    out.atoms.push_back({spec.atom_weight, std::conj(u), -q});
  }
  out.validate();  // throws: rejected configuration
  return out;
}

double rfrak_autocorrelation(const LongRangeLaw& law, double z) {
  const double h = law.hurst_frak;
  const double phase_span = law.kappa_c * std::abs(z);
  const int panels =
      std::max(8, static_cast<int>(std::ceil(phase_span / h)));
  double acc = 0.0;
  const double width = 1.0 / static_cast<double>(panels);
  for (int p = 0; p < panels; ++p) {
    const double mid = (static_cast<double>(p) + 0.5) * width;
    for (int q = 0; q < kGl4; ++q) {
      const double t = mid + 0.5 * width * kGl4X[q];
      acc += 0.5 * width * kGl4W[q] *
             std::cos(law.kappa_c * z * std::pow(t, 1.0 / h));
    }
  }
  return acc;
}

namespace {

// Unit-variance stationary Gaussian path with autocorrelation r_frak,
// synthesized directly from the band-limited spectral density
// 1_{|k|<kappa_c}|k|^{h-1}: the density is integrated exactly over each
// frequency bin (the k -> 0 singularity is integrable) and the oscillation
// is taken at the bin midpoint. The circulant eigenvalues are the density
// bins themselves, so they are nonnegative by construction and there is no
// periodization of the slowly decaying covariance tail.
constexpr std::size_t kXiBins = 256;

std::vector<double> bandlimited_xi(const LongRangeLaw& law,
                                   const std::vector<double>& z,
                                   RngStream& rng) {
  const double h = law.hurst_frak;
  const double dk = law.kappa_c / static_cast<double>(kXiBins);
  const double norm = 2.0 * std::pow(law.kappa_c, h);
  std::vector<std::complex<double>> amp(kXiBins);
  for (std::size_t k = 0; k < kXiBins; ++k) {
    const double klo = static_cast<double>(k) * dk;
    const double g2 = (std::pow(klo + dk, h) - std::pow(klo, h)) / norm;
    amp[k] = std::sqrt(g2) * rng.normal_complex();
  }
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const std::complex<double> step(std::cos(dk * z[i]),
                                    std::sin(dk * z[i]));
    std::complex<double> ph(1.0, 0.0);
    double acc = 0.0;
    for (std::size_t k = 0; k < kXiBins; ++k) {
      if (k % 64 == 0) {
        const double kz = (static_cast<double>(k) + 0.5) * dk * z[i];
        ph = {std::cos(kz), std::sin(kz)};
      }
      acc += 2.0 * std::real(amp[k] * ph);
      ph *= step;
    }
    out[i] = acc;
  }
  return out;
}

double grid_spacing(const std::vector<double>& z, const char* who) {
  if (z.size() < 2) {
    throw std::invalid_argument(std::string(who) + ": need >= 2 grid nodes");
  }
  const double dz = (z.back() - z.front()) / static_cast<double>(z.size() - 1);
  for (std::size_t i = 1; i < z.size(); ++i) {
    if (std::abs(z[i] - z[i - 1] - dz) > 1e-9 * dz) {
      throw std::invalid_argument(std::string(who) + ": grid not uniform");
    }
  }
  return dz;
}

}  // namespace

FieldSample sample_bfrak(const KernelEigen& kernel, const LongRangeLaw& law,
                         const std::vector<double>& z_grid,
                         const std::vector<double>& atom_q, RngStream& rng) {
  grid_spacing(z_grid, "sample_bfrak");
  for (double q : atom_q) {
    if (std::abs(q) >
        *std::max_element(kernel.nodes.begin(), kernel.nodes.end()) + 1e-12) {
      throw std::invalid_argument("sample_bfrak: atom outside kernel domain");
    }
  }
  const std::size_t nz = z_grid.size();
  const std::size_t rank = kernel.rank();

  Eigen::MatrixXd xi(static_cast<Eigen::Index>(nz),
                     static_cast<Eigen::Index>(rank));
  for (std::size_t n = 0; n < rank; ++n) {
    const std::vector<double> path = bandlimited_xi(law, z_grid, rng);
    for (std::size_t i = 0; i < nz; ++i) {
      xi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n)) =
          path[i];
    }
  }

  // Mirror pairs evaluate e_n at the same representative |q|.
  Eigen::MatrixXd coef(static_cast<Eigen::Index>(rank),
                       static_cast<Eigen::Index>(atom_q.size()));
  for (std::size_t j = 0; j < atom_q.size(); ++j) {
    const double qa = std::abs(atom_q[j]);
    for (std::size_t n = 0; n < rank; ++n) {
      coef(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(j)) =
          std::sqrt(kernel.eigvals(static_cast<Eigen::Index>(n))) *
          kernel.eval_eigvec(n, qa);
    }
  }

  FieldSample out;
  out.z_grid = z_grid;
  out.cols = atom_q;
  out.values = xi * coef;
  out.kind = FieldKind::bfrak;
  std::ostringstream prov;
  prov << "sample_bfrak h=" << law.hurst_frak << " kappa_c=" << law.kappa_c
       << " rank=" << rank;
  out.provenance = prov.str();
  return out;
}

MediumSample synthesize_V(const AtomicMeasure& measure,
                          const FieldSample& bfrak, const ThetaSpec& theta,
                          const std::vector<double>& x_grid) {
  measure.validate();
  if (bfrak.cols.size() != measure.atoms.size()) {
    throw std::invalid_argument("synthesize_V: missing atoms in bfrak");
  }
  for (std::size_t j = 0; j < measure.atoms.size(); ++j) {
    if (std::abs(bfrak.cols[j] - measure.atoms[j].q) > 1e-12) {
      throw std::invalid_argument("synthesize_V: atom wavevector mismatch");
    }
  }
  const std::size_t nz = bfrak.z_grid.size();
  const std::size_t nx = x_grid.size();
  const std::size_t na = measure.atoms.size();

  Eigen::MatrixXd theta_b(static_cast<Eigen::Index>(nz),
                          static_cast<Eigen::Index>(na));
  for (std::size_t j = 0; j < na; ++j) {
    for (std::size_t i = 0; i < nz; ++i) {
      theta_b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          theta(bfrak.values(static_cast<Eigen::Index>(i),
                             static_cast<Eigen::Index>(j)));
    }
  }

  MediumSample out;
  out.z_grid = bfrak.z_grid;
  out.x_grid = x_grid;
  out.v.resize(static_cast<Eigen::Index>(nz), static_cast<Eigen::Index>(nx));
  double max_im = 0.0;
  for (std::size_t ix = 0; ix < nx; ++ix) {
    std::vector<std::complex<double>> phase(na);
    for (std::size_t j = 0; j < na; ++j) {
      const Atom& at = measure.atoms[j];
      phase[j] = at.a * at.U *
                 std::complex<double>(std::cos(at.q * x_grid[ix]),
                                      -std::sin(at.q * x_grid[ix]));
    }
    for (std::size_t iz = 0; iz < nz; ++iz) {
      std::complex<double> acc = 0.0;
      for (std::size_t j = 0; j < na; ++j) {
        acc += phase[j] * theta_b(static_cast<Eigen::Index>(iz),
                                  static_cast<Eigen::Index>(j));
      }
      max_im = std::max(max_im, std::abs(acc.imag()));
      out.v(static_cast<Eigen::Index>(iz), static_cast<Eigen::Index>(ix)) =
          acc.real();
    }
  }
  out.imag_residue = max_im;
  const double bound = measure.tv_cap * theta.sup_abs();
  if (out.v.cwiseAbs().maxCoeff() > bound * (1.0 + 1e-9)) {
    throw std::runtime_error("synthesize_V: |V| exceeds the C_m sup-bound");
  }
  out.provenance = "synthesize_V from " + bfrak.provenance;
  return out;
}

DecayFit fit_decay_exponent(const std::vector<MediumSample>& ensemble,
                            const std::vector<double>& lags, std::size_t ix,
                            std::size_t iy) {
  if (ensemble.empty()) {
    throw std::invalid_argument("fit_decay_exponent: empty ensemble");
  }
  const std::vector<double>& z = ensemble.front().z_grid;
  const double dz = grid_spacing(z, "fit_decay_exponent");
  const std::size_t nz = z.size();

  DecayFit fit;
  for (double lag : lags) {
    const auto k = static_cast<std::size_t>(std::llround(lag / dz));
    if (k < 1 || k >= nz) {
      std::cerr << "warning: fit_decay_exponent: lag " << lag
                << " outside window, excluded\n";
      continue;
    }
    double acc = 0.0;
    std::size_t cnt = 0;
    for (const MediumSample& ms : ensemble) {
      for (std::size_t s = 0; s + k < nz; ++s, ++cnt) {
        acc += ms.v(static_cast<Eigen::Index>(s + k),
                    static_cast<Eigen::Index>(ix)) *
               ms.v(static_cast<Eigen::Index>(s),
                    static_cast<Eigen::Index>(iy));
      }
    }
    acc /= static_cast<double>(cnt);
    if (acc <= 0.0) {
      std::cerr << "warning: fit_decay_exponent: nonpositive autocovariance "
                   "at lag "
                << lag << ", excluded\n";
      continue;
    }
    fit.used_lags.push_back(static_cast<double>(k) * dz);
    fit.autocov.push_back(acc);
  }
  if (fit.used_lags.size() < 2) {
    throw std::runtime_error(
        "fit_decay_exponent: not enough usable lags for a fit");
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(fit.used_lags.size());
  for (std::size_t i = 0; i < fit.used_lags.size(); ++i) {
    const double lx = std::log(fit.used_lags[i]);
    const double ly = std::log(fit.autocov[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / n;
  fit.exponent = -slope;
  fit.amplitude = std::exp(intercept);
  return fit;
}

}  // namespace fracwave
