#include "fracwave/pulse.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace fracwave {

namespace {

using cplx = std::complex<double>;

// Golub-Welsch on the Jacobi matrix of the Legendre weight: eigenvalues are
// the nodes on (-1, 1), weights 2 * (first eigenvector component)^2.
void gauss_legendre(std::size_t order, std::vector<double>* nodes,
                    std::vector<double>* weights) {
  const auto n = static_cast<Eigen::Index>(order);
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub = Eigen::VectorXd::Zero(n > 1 ? n - 1 : 1);
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    const double m = static_cast<double>(k + 1);
    sub(k) = m / std::sqrt(4.0 * m * m - 1.0);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub.head(std::max<Eigen::Index>(n - 1, 0)),
                            Eigen::ComputeEigenvectors);
  nodes->resize(order);
  weights->resize(order);
  for (Eigen::Index j = 0; j < n; ++j) {
    (*nodes)[static_cast<std::size_t>(j)] = es.eigenvalues()(j);
    const double v0 = es.eigenvectors()(0, j);
    (*weights)[static_cast<std::size_t>(j)] = 2.0 * v0 * v0;
  }
}

double uniform_spacing(const std::vector<double>& g, const char* name) {
  if (g.size() < 2) {
    throw std::invalid_argument(std::string("pulse ") + name +
                                " grid needs at least two points");
  }
  const double d = g[1] - g[0];
  if (!(d > 0.0)) {
    throw std::invalid_argument(std::string("pulse ") + name +
                                " grid must increase");
  }
  const double tol = 1e-9 * std::max(1.0, std::abs(d));
  for (std::size_t i = 1; i < g.size(); ++i) {
    if (std::abs((g[i] - g[i - 1]) - d) > tol) {
      throw std::invalid_argument(std::string("pulse ") + name +
                                  " grid must be uniform");
    }
  }
  return d;
}

std::string list_omegas(const std::vector<double>& xs) {
  std::ostringstream os;
  const std::size_t shown = std::min<std::size_t>(xs.size(), 8);
  for (std::size_t i = 0; i < shown; ++i) {
    if (i) os << ", ";
    os << xs[i];
  }
  if (xs.size() > shown) os << ", ... (" << xs.size() << " total)";
  return os.str();
}

}  // namespace

void PulseBand::validate() const {
  if (!(omega_c > 0.0) || !std::isfinite(omega_c)) {
    throw std::invalid_argument("pulse band needs omega_c > 0");
  }
  if (!(lo >= omega_c)) {
    throw std::invalid_argument(
        "pulse band must start at or above the gap edge omega_c");
  }
  if (!(hi > lo) || !std::isfinite(hi)) {
    throw std::invalid_argument("pulse band needs hi > lo");
  }
  if (panels < 1) {
    throw std::invalid_argument("pulse band needs at least one panel");
  }
  if (order < 1 || order > 32) {
    throw std::invalid_argument("pulse band order must lie in [1, 32]");
  }
}

std::vector<OmegaNode> PulseBand::nodes() const {
  validate();
  std::vector<double> gx, gw;
  gauss_legendre(order, &gx, &gw);
  std::vector<OmegaNode> pos;
  pos.reserve(panels * order);
  const double pw = (hi - lo) / static_cast<double>(panels);
  for (std::size_t p = 0; p < panels; ++p) {
    const double a = lo + pw * static_cast<double>(p);
    const double mid = a + 0.5 * pw;
    for (std::size_t k = 0; k < order; ++k) {
      pos.push_back({mid + 0.5 * pw * gx[k], 0.5 * pw * gw[k]});
    }
  }
  std::vector<OmegaNode> all;
  all.reserve(2 * pos.size());
  for (std::size_t i = pos.size(); i-- > 0;) {
    all.push_back({-pos[i].omega, pos[i].weight});
  }
  all.insert(all.end(), pos.begin(), pos.end());
  return all;
}

PulseBand PulseBand::for_window(double omega_c, double lo, double hi,
                                double t_abs_max, std::size_t order) {
  if (!(t_abs_max > 0.0) || !std::isfinite(t_abs_max)) {
    throw std::invalid_argument("pulse band needs t_abs_max > 0");
  }
  PulseBand band;
  band.omega_c = omega_c;
  band.lo = lo;
  band.hi = hi;
  band.order = order;
  band.validate();
  const double phase_cap = 0.5 * static_cast<double>(order);
  band.panels = std::max<std::size_t>(
      1, static_cast<std::size_t>(
             std::ceil((hi - lo) * t_abs_max / phase_cap)));
  return band;
}

double PulseField::energy() const {
  const double dt = uniform_spacing(t_grid, "time");
  const double dx = uniform_spacing(x_grid, "space");
  return values.squaredNorm() * dt * dx;
}

void PulseField::validate() const {
  band.validate();
  (void)uniform_spacing(t_grid, "time");
  (void)uniform_spacing(x_grid, "space");
  if (values.rows() != static_cast<Eigen::Index>(t_grid.size()) ||
      values.cols() != static_cast<Eigen::Index>(x_grid.size())) {
    throw std::invalid_argument("pulse array does not match its grids");
  }
  if (!values.allFinite()) {
    throw std::invalid_argument("pulse array has non-finite entries");
  }
}

BandReport band_check(const SourceSpec& src, double omega_max,
                      std::size_t n_omega,
                      const std::vector<double>& kappa_probes) {
  src.validate();
  if (!(omega_max > 0.0) || !std::isfinite(omega_max)) {
    throw std::invalid_argument("band_check needs omega_max > 0");
  }
  if (n_omega < 3 || n_omega % 2 == 0) {
    throw std::invalid_argument("band_check needs an odd n_omega >= 3");
  }
  if (kappa_probes.empty()) {
    throw std::invalid_argument("band_check needs transverse probes");
  }
  const std::size_t half = (n_omega - 1) / 2;
  const double step = omega_max / static_cast<double>(half);

  double peak = 0.0;
  for (std::size_t i = 0; i <= half; ++i) {
    const double w = step * static_cast<double>(i);
    for (double kp : kappa_probes) {
      peak = std::max(peak, std::abs(src.fhat0(w, kp)));
      peak = std::max(peak, std::abs(src.fhat0(-w, kp)));
    }
  }
  if (peak == 0.0) {
    throw std::invalid_argument(
        "band_check: source vanishes on the whole probe set");
  }
  const double tol = 1e-12 * peak;

  double asym = 0.0;
  double lo_edge = 0.0, hi_edge = 0.0;
  bool found = false;
  for (std::size_t i = 0; i <= half; ++i) {
    const double w = step * static_cast<double>(i);
    double amp = 0.0;
    for (double kp : kappa_probes) {
      const cplx vp = src.fhat0(w, kp);
      const cplx vm = src.fhat0(-w, kp);
      asym = std::max(asym, std::abs(vp - vm));
      amp = std::max(amp, std::max(std::abs(vp), std::abs(vm)));
    }
    if (amp <= tol) continue;
    if (i == half) {
      std::ostringstream os;
      os << "band_check: source band reaches the probe boundary omega = "
         << w << "; increase omega_max";
      throw std::invalid_argument(os.str());
    }
    if (w < src.omega_c * (1.0 - 1e-12)) {
      std::ostringstream os;
      os << "band_check: source has content inside the spectral gap at "
            "omega = "
         << w << " (|fhat0| = " << amp << ", omega_c = " << src.omega_c
         << ")";
      throw std::invalid_argument(os.str());
    }
    if (!found) lo_edge = w;
    hi_edge = w;
    found = true;
  }
  if (asym > 1e-9 * peak) {
    std::ostringstream os;
    os << "band_check: source band is not even in omega (worst residual "
       << asym << " against peak " << peak << ")";
    throw std::invalid_argument(os.str());
  }
  if (!found) {
    throw std::invalid_argument(
        "band_check: source vanishes on the whole probe set");
  }

  BandReport rep;
  rep.omega_lo = lo_edge;
  rep.omega_hi = hi_edge;
  rep.peak = peak;
  rep.asym = asym / peak;
  rep.n_omega = n_omega;
  std::ostringstream os;
  os << "band_check omega_max=" << omega_max << " n_omega=" << n_omega
     << " probes=" << kappa_probes.size();
  rep.provenance = os.str();
  return rep;
}

WaveField mirror_field(const WaveField& field) {
  field.validate();
  WaveField out = field;
  out.omega = -field.omega;
  out.k_omega = -field.k_omega;
  const std::size_t n = field.grid.size();
  for (std::size_t s = 0; s < field.n_slices(); ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      out.values[s][i] = std::conj(field.values[s][n - 1 - i]);
    }
  }
  std::ostringstream os;
  os << field.provenance << "; mirrored to omega = " << out.omega;
  out.provenance = os.str();
  return out;
}

PulseField synthesize_pulse(const PulseBand& band,
                            const std::vector<WaveField>& fields,
                            const std::vector<double>& t_grid,
                            const std::vector<double>& x_grid) {
  band.validate();
  (void)uniform_spacing(t_grid, "time");
  (void)uniform_spacing(x_grid, "space");
  const std::vector<OmegaNode> ns = band.nodes();
  const std::size_t n = ns.size();

  // match fields to quadrature nodes by omega
  std::vector<const WaveField*> slot(n, nullptr);
  std::vector<char> used(fields.size(), 0);
  std::vector<double> missing;
  for (std::size_t i = 0; i < n; ++i) {
    const double target = ns[i].omega;
    const double tol = 1e-9 * std::max(1.0, std::abs(target));
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (!used[j] && std::abs(fields[j].omega - target) <= tol) {
        slot[i] = &fields[j];
        used[j] = 1;
        break;
      }
    }
    if (slot[i] == nullptr) missing.push_back(target);
  }
  if (!missing.empty()) {
    throw std::invalid_argument(
        "pulse quadrature is missing fields at omega = " +
        list_omegas(missing));
  }
  std::vector<double> extra;
  for (std::size_t j = 0; j < fields.size(); ++j) {
    if (!used[j]) extra.push_back(fields[j].omega);
  }
  if (!extra.empty()) {
    throw std::invalid_argument("fields match no quadrature node at omega = " +
                                list_omegas(extra));
  }

  for (const WaveField* f : slot) f->validate();
  const KappaGrid grid = slot[0]->grid;
  const double z_ref = slot[0]->z.back();
  for (const WaveField* f : slot) {
    if (f->grid.dk != grid.dk || f->grid.half_span != grid.half_span) {
      throw std::invalid_argument(
          "pulse fields must share one transverse lattice");
    }
    if (std::abs(f->z.back() - z_ref) > 1e-9 * std::max(1.0, std::abs(z_ref))) {
      throw std::invalid_argument(
          "pulse fields are not all stored at one depth");
    }
  }

  // conjugate consistency of each mirrored pair on the last stored slice
  const std::size_t nk = grid.size();
  const std::size_t half = n / 2;
  double scale = 0.0;
  for (const WaveField* f : slot) {
    for (const cplx& v : f->values.back()) {
      scale = std::max(scale, std::abs(v));
    }
  }
  const double ctol = 1e-9 * std::max(1.0, scale);
  for (std::size_t i = half; i < n; ++i) {
    const auto& vp = slot[i]->values.back();
    const auto& vm = slot[n - 1 - i]->values.back();
    for (std::size_t j = 0; j < nk; ++j) {
      if (std::abs(vm[j] - std::conj(vp[nk - 1 - j])) > ctol) {
        std::ostringstream os;
        os << "pulse fields at omega = " << ns[i].omega
           << " are not conjugate-consistent (residual "
           << std::abs(vm[j] - std::conj(vp[nk - 1 - j])) << ")";
        throw std::invalid_argument(os.str());
      }
    }
  }

  // x-profiles of the positive band, then p = 2 Re sum_i w_i e^{-i w t} psi_i
  const std::size_t nx = x_grid.size();
  const std::size_t nt = t_grid.size();
  Eigen::MatrixXcd prof(static_cast<Eigen::Index>(half),
                        static_cast<Eigen::Index>(nx));
  for (std::size_t i = half; i < n; ++i) {
    const auto& v = slot[i]->values.back();
    for (std::size_t m = 0; m < nx; ++m) {
      cplx acc(0.0, 0.0);
      for (std::size_t j = 0; j < nk; ++j) {
        acc += v[j] * std::polar(1.0, -grid.node(j) * x_grid[m]);
      }
      prof(static_cast<Eigen::Index>(i - half),
           static_cast<Eigen::Index>(m)) = acc * grid.dk;
    }
  }
  PulseField out;
  out.t_grid = t_grid;
  out.x_grid = x_grid;
  out.band = band;
  out.values.resize(static_cast<Eigen::Index>(nt),
                    static_cast<Eigen::Index>(nx));
  Eigen::RowVectorXcd phase(static_cast<Eigen::Index>(half));
  for (std::size_t ti = 0; ti < nt; ++ti) {
    for (std::size_t i = half; i < n; ++i) {
      phase(static_cast<Eigen::Index>(i - half)) =
          2.0 * ns[i].weight * std::polar(1.0, -ns[i].omega * t_grid[ti]);
    }
    out.values.row(static_cast<Eigen::Index>(ti)) = (phase * prof).real();
  }
  std::ostringstream os;
  os << "synthesize_pulse nodes=" << n << " panels=" << band.panels
     << " order=" << band.order << " band=[" << band.lo << ", " << band.hi
     << "] slice z=" << z_ref;
  out.provenance = os.str();
  out.validate();
  return out;
}

}  // namespace fracwave
