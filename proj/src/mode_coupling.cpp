#include "fracwave/mode_coupling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

#include "fracwave/rng.hpp"

namespace fracwave {

namespace {

constexpr double kPi = 3.14159265358979323846;

double grid_tol(double scale) { return 1e-9 * std::max(1.0, std::abs(scale)); }

// uniform spacing of the stretched medium grid, anchored at u = 0
double medium_spacing(const FieldSample& bfrak, const std::string& who) {
  if (bfrak.kind != FieldKind::bfrak) {
    throw std::invalid_argument(who + ": medium must hold bfrak samples");
  }
  const auto& u = bfrak.z_grid;
  if (u.size() < 2) {
    throw std::invalid_argument(who + ": need >= 2 medium rows");
  }
  if (static_cast<std::size_t>(bfrak.values.rows()) != u.size()) {
    throw std::invalid_argument(who + ": medium rows do not match its grid");
  }
  const double tol = grid_tol(u.back());
  if (std::abs(u.front()) > tol) {
    throw std::invalid_argument(who + ": medium grid must start at u = 0");
  }
  const double du = u.back() / static_cast<double>(u.size() - 1);
  if (!(du > 0.0)) {
    throw std::invalid_argument(who + ": medium grid must increase");
  }
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (std::abs(u[i] - du * static_cast<double>(i)) > tol) {
      throw std::invalid_argument(who + ": medium grid not uniform");
    }
  }
  return du;
}

std::vector<std::size_t> atom_columns(const FieldSample& bfrak,
                                      const AtomicMeasure& measure,
                                      const std::string& who) {
  std::vector<std::size_t> cols(measure.atoms.size());
  for (std::size_t j = 0; j < measure.atoms.size(); ++j) {
    const double q = measure.atoms[j].q;
    bool found = false;
    for (std::size_t c = 0; c < bfrak.cols.size(); ++c) {
      if (std::abs(bfrak.cols[c] - q) <= 1e-12) {
        cols[j] = c;
        found = true;
        break;
      }
    }
    if (!found) {
      std::ostringstream msg;
      msg << who << ": no medium column for atom wavevector q = " << q;
      throw std::invalid_argument(msg.str());
    }
  }
  return cols;
}

// Coefficient tables and one right-hand-side evaluation per medium row.
// Couplings act only between nodes inside the propagating band; the phase
// factors split per node, e^{i phi_-} = u_p conj(u_kappa) and
// e^{i phi_+} = u_p u_kappa with u = e^{i k lambda_r z / eps^2}.
struct Coupler {
  const KappaGrid* grid = nullptr;
  double k_omega = 0.0;
  double inv_eps2 = 0.0;
  double dk = 0.0;
  bool diag = true;
  bool offdiag = true;
  bool absorbing = false;
  std::vector<char> active;
  std::vector<double> lam_r;
  std::vector<double> gamma;
  std::vector<int> offsets;
  std::vector<std::complex<double>> strength;  // i (k eps^{s-2} / 2) a_j U_j
  Eigen::MatrixXd theta_rows;                  // Theta(B) per (row, atom)
  std::vector<std::complex<double>> phase;

  void stage(double z, std::size_t row, const ModePair& x, ModePair& out) {
    const std::size_t n = grid->size();
    std::fill(out.a.begin(), out.a.end(), std::complex<double>(0.0, 0.0));
    std::fill(out.b.begin(), out.b.end(), std::complex<double>(0.0, 0.0));
    const double arg = k_omega * z * inv_eps2;
    for (std::size_t i = 0; i < n; ++i) {
      phase[i] = active[i] ? std::polar(1.0, arg * lam_r[i])
                           : std::complex<double>(1.0, 0.0);
    }
    for (std::size_t j = 0; j < offsets.size(); ++j) {
      const std::complex<double> cj =
          strength[j] * theta_rows(static_cast<Eigen::Index>(row),
                                   static_cast<Eigen::Index>(j));
      const std::ptrdiff_t off = offsets[j];
      const std::ptrdiff_t nn = static_cast<std::ptrdiff_t>(n);
      const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, off);
      const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(nn, nn + off);
      for (std::ptrdiff_t i = lo; i < hi; ++i) {
        if (!active[static_cast<std::size_t>(i)]) continue;
        const std::ptrdiff_t p = i - off;
        if (!active[static_cast<std::size_t>(p)]) continue;
        const std::complex<double> eminus = phase[p] * std::conj(phase[i]);
        const std::complex<double> eplus = phase[p] * phase[i];
        if (diag) {
          out.a[i] += cj * (eminus * x.a[p]);
          out.b[i] -= cj * (std::conj(eminus) * x.b[p]);
        }
        if (offdiag) {
          out.a[i] += cj * (std::conj(eplus) * x.b[p]);
          out.b[i] -= cj * (eplus * x.a[p]);
        }
      }
    }
    if (absorbing) {
      for (std::size_t i = 0; i < n; ++i) {
        out.a[i] -= gamma[i] * x.a[i];
        out.b[i] -= gamma[i] * x.b[i];
      }
    }
  }

  // independent single-block evaluation for the forward-only model
  void stage_forward(double z, std::size_t row,
                     const std::vector<std::complex<double>>& x,
                     std::vector<std::complex<double>>& out) {
    const std::size_t n = grid->size();
    std::fill(out.begin(), out.end(), std::complex<double>(0.0, 0.0));
    const double arg = k_omega * z * inv_eps2;
    for (std::size_t i = 0; i < n; ++i) {
      phase[i] = active[i] ? std::polar(1.0, arg * lam_r[i])
                           : std::complex<double>(1.0, 0.0);
    }
    for (std::size_t j = 0; j < offsets.size(); ++j) {
      const std::complex<double> cj =
          strength[j] * theta_rows(static_cast<Eigen::Index>(row),
                                   static_cast<Eigen::Index>(j));
      const std::ptrdiff_t off = offsets[j];
      const std::ptrdiff_t nn = static_cast<std::ptrdiff_t>(n);
      const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, off);
      const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(nn, nn + off);
      for (std::ptrdiff_t i = lo; i < hi; ++i) {
        if (!active[static_cast<std::size_t>(i)]) continue;
        const std::ptrdiff_t p = i - off;
        if (!active[static_cast<std::size_t>(p)]) continue;
        const std::complex<double> eminus = phase[p] * std::conj(phase[i]);
        out[i] += cj * (eminus * x[p]);
      }
    }
    if (absorbing) {
      for (std::size_t i = 0; i < n; ++i) out[i] -= gamma[i] * x[i];
    }
  }

  double absorbed_rate(const ModePair& x) const {
    if (!absorbing) return 0.0;
    double r = 0.0;
    for (std::size_t i = 0; i < x.a.size(); ++i) {
      r += gamma[i] * (std::norm(x.a[i]) - std::norm(x.b[i]));
    }
    return 2.0 * r * dk;
  }

  double rotation_rate() const {
    // fast-phase budget: |phi_+| rate is at most 2 |k| / eps^2 on the band
    double rate = 2.0 * std::abs(k_omega) * inv_eps2;
    for (std::size_t j = 0; j < strength.size(); ++j) {
      rate += std::abs(strength[j]) *
              theta_rows.col(static_cast<Eigen::Index>(j)).cwiseAbs().maxCoeff();
    }
    double gmax = 0.0;
    for (double g : gamma) gmax = std::max(gmax, g);
    return rate + gmax;
  }
};

Coupler build_coupler(const EpsRegime& regime, const FieldSample& bfrak,
                      const AtomicMeasure& measure, const ThetaSpec& theta,
                      double k_omega, const KappaGrid& grid, CouplingMask mask,
                      const std::string& who) {
  regime.validate();
  grid.validate();
  measure.validate();
  theta.validate();
  if (k_omega == 0.0) {
    throw std::invalid_argument(who + ": zero wavenumber");
  }
  Coupler c;
  c.grid = &grid;
  c.k_omega = k_omega;
  c.inv_eps2 = 1.0 / (regime.eps * regime.eps);
  c.dk = grid.dk;
  c.diag = mask != CouplingMask::off_diagonal_only;
  c.offdiag = mask != CouplingMask::diagonal_only;
  c.absorbing = regime.alpha_eps > 0.0;
  const std::size_t n = grid.size();
  c.active.assign(n, 0);
  c.lam_r.assign(n, 0.0);
  c.gamma.assign(n, 0.0);
  const double band = std::abs(k_omega) / regime.eps;
  for (std::size_t i = 0; i < n; ++i) {
    const double kappa = grid.node(i);
    if (std::abs(kappa) < band) {
      c.active[i] = 1;
      c.lam_r[i] = lambda_r(kappa, regime, k_omega);
      if (c.absorbing) {
        c.gamma[i] = std::abs(k_omega) *
                     std::imag(lambda_eps(kappa, regime, k_omega)) * c.inv_eps2;
      }
    }
  }
  const auto cols = atom_columns(bfrak, measure, who);
  const double spow = std::pow(regime.eps, regime.s() - 2.0);
  c.offsets.resize(measure.atoms.size());
  c.strength.resize(measure.atoms.size());
  c.theta_rows.resize(bfrak.values.rows(),
                      static_cast<Eigen::Index>(measure.atoms.size()));
  for (std::size_t j = 0; j < measure.atoms.size(); ++j) {
    const Atom& atom = measure.atoms[j];
    c.offsets[j] = grid.offset_of(atom.q);
    c.strength[j] =
        std::complex<double>(0.0, 0.5 * k_omega * spow) * (atom.a * atom.U);
    for (Eigen::Index r = 0; r < bfrak.values.rows(); ++r) {
      c.theta_rows(r, static_cast<Eigen::Index>(j)) =
          theta(bfrak.values(r, static_cast<Eigen::Index>(cols[j])));
    }
  }
  c.phase.assign(n, std::complex<double>(1.0, 0.0));
  return c;
}

void check_rotation(const Coupler& c, double h, const std::string& who) {
  const double rate = c.rotation_rate();
  const double rot = rate * h;
  if (rot > 0.25 * kPi) {
    std::ostringstream msg;
    msg << who << ": phase rotation " << rot
        << " rad per step exceeds pi/4; suggested step dz <= "
        << 0.25 * kPi / rate
        << " (stretched medium spacing du <= dz / (2 eps))";
    throw std::invalid_argument(msg.str());
  }
}

std::vector<std::size_t> slice_steps(const std::vector<double>& z_out,
                                     double h, std::size_t n_rows,
                                     const std::string& who) {
  if (z_out.empty()) {
    throw std::invalid_argument(who + ": need at least one output slice");
  }
  std::vector<std::size_t> steps(z_out.size());
  long long prev = -1;
  for (std::size_t s = 0; s < z_out.size(); ++s) {
    const long long m = std::llround(z_out[s] / h);
    if (m < 0 ||
        std::abs(z_out[s] - h * static_cast<double>(m)) >
            grid_tol(z_out.back())) {
      std::ostringstream msg;
      msg << who << ": slice z = " << z_out[s]
          << " does not sit on the RK4 grid (step h = " << h << ")";
      throw std::invalid_argument(msg.str());
    }
    if (m <= prev) {
      throw std::invalid_argument(who +
                                  ": output slices must increase strictly");
    }
    if (2 * m + 1 > static_cast<long long>(n_rows)) {
      std::ostringstream msg;
      msg << who << ": slice z = " << z_out[s]
          << " lies beyond the sampled medium";
      throw std::invalid_argument(msg.str());
    }
    prev = m;
    steps[s] = static_cast<std::size_t>(m);
  }
  return steps;
}

void axpy(ModePair& out, const ModePair& x, double w, const ModePair& k) {
  const std::size_t n = x.a.size();
  for (std::size_t i = 0; i < n; ++i) {
    out.a[i] = x.a[i] + w * k.a[i];
    out.b[i] = x.b[i] + w * k.b[i];
  }
}

ModePair sized_pair(std::size_t n) {
  ModePair p;
  p.a.assign(n, std::complex<double>(0.0, 0.0));
  p.b.assign(n, std::complex<double>(0.0, 0.0));
  return p;
}

const char* mask_name(CouplingMask mask) {
  switch (mask) {
    case CouplingMask::full:
      return "full";
    case CouplingMask::diagonal_only:
      return "diag";
    case CouplingMask::off_diagonal_only:
      return "offdiag";
  }
  return "?";
}

double weighted_norm(const std::vector<std::complex<double>>& v, double dk) {
  double s = 0.0;
  for (const auto& x : v) s += std::norm(x);
  return std::sqrt(s * dk);
}

}  // namespace

double EpsRegime::alpha_omega(double k_omega) const {
  if (k_omega == 0.0) {
    throw std::invalid_argument("EpsRegime: zero wavenumber");
  }
  const double e2 = eps * eps;
  return alpha_eps * e2 * e2 / (k_omega * k_omega);
}

void EpsRegime::validate() const {
  if (!(eps > 0.0) || !(eps < 1.0)) {
    throw std::invalid_argument("EpsRegime: eps must lie in (0, 1)");
  }
  if (!(alpha_eps >= 0.0)) {
    throw std::invalid_argument("EpsRegime: alpha_eps must be >= 0");
  }
  if (alpha_eps > std::pow(eps, 2.5) * (1.0 + 1e-12)) {
    throw std::invalid_argument(
        "EpsRegime: alpha_eps exceeds the eps^{5/2} absorption budget");
  }
  if (!(hurst_frak > 0.0) || !(hurst_frak < 1.0)) {
    throw std::invalid_argument("EpsRegime: hurst_frak must lie in (0, 1)");
  }
}

std::complex<double> lambda_eps(double kappa, const EpsRegime& regime,
                                double k_omega) {
  regime.validate();
  if (k_omega == 0.0) {
    throw std::invalid_argument("lambda_eps: zero wavenumber");
  }
  const double ratio = regime.eps * kappa / k_omega;
  // principal sqrt; the alpha = 0 evanescent branch keeps Im >= 0 because
  // the imaginary part enters as +0.0
  return std::sqrt(
      std::complex<double>(1.0 - ratio * ratio, regime.alpha_omega(k_omega)));
}

double lambda_r(double kappa, const EpsRegime& regime, double k_omega) {
  regime.validate();
  if (k_omega == 0.0) {
    throw std::invalid_argument("lambda_r: zero wavenumber");
  }
  const double ratio = regime.eps * kappa / k_omega;
  const double arg = 1.0 - ratio * ratio;
  if (arg < 0.0) {
    throw std::domain_error(
        "lambda_r: kappa outside the propagating band |k_omega| / eps");
  }
  return std::sqrt(arg);
}

WaveField phi_eps(const SourceSpec& src, const EpsRegime& regime, double omega,
                  const KappaGrid& grid) {
  src.validate();
  regime.validate();
  grid.validate();
  WaveField f;
  f.omega = omega;
  f.k_omega = src.k(omega);
  f.grid = grid;
  f.z = {0.0};
  f.kind = WaveKind::x_eps;
  f.values.assign(1, std::vector<std::complex<double>>(
                         grid.size(), std::complex<double>(0.0, 0.0)));
  if (std::abs(omega) < src.omega_c) {
    std::ostringstream msg;
    msg << "phi_eps: omega " << omega << " below band edge " << src.omega_c
        << "; zero field";
    f.provenance = msg.str();
    return f;
  }
  if (f.k_omega == 0.0) {
    throw std::invalid_argument("phi_eps: zero wavenumber");
  }
  // exponent -i k (lambda - 1) L_S / eps^2
  const double scale = f.k_omega * src.L_S / (regime.eps * regime.eps);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double kappa = grid.node(i);
    const std::complex<double> lam = lambda_eps(kappa, regime, f.k_omega);
    const std::complex<double> expo =
        std::complex<double>(0.0, -scale) * (lam - 1.0);
    f.values[0][i] =
        0.5 * std::sqrt(lam) * src.fhat0(omega, kappa) * std::exp(expo);
  }
  std::ostringstream prov;
  prov << "phi_eps eps=" << regime.eps << " alpha_eps=" << regime.alpha_eps;
  f.provenance = prov.str();
  f.validate();
  return f;
}

double ModeTrajectory::norm_a(std::size_t slice) const {
  if (slice >= slices.size()) {
    throw std::out_of_range("ModeTrajectory: slice index");
  }
  return weighted_norm(slices[slice].a, grid.dk);
}

double ModeTrajectory::norm_b(std::size_t slice) const {
  if (slice >= slices.size()) {
    throw std::out_of_range("ModeTrajectory: slice index");
  }
  return weighted_norm(slices[slice].b, grid.dk);
}

double ModeTrajectory::flux(std::size_t slice) const {
  if (slice >= slices.size()) {
    throw std::out_of_range("ModeTrajectory: slice index");
  }
  double s = 0.0;
  const ModePair& p = slices[slice];
  for (std::size_t i = 0; i < p.a.size(); ++i) {
    s += std::norm(p.a[i]) - std::norm(p.b[i]);
  }
  return s * grid.dk;
}

ModeTrajectory propagate_modes_from(const ModePair& init, double omega,
                                    double k_omega, const EpsRegime& regime,
                                    const FieldSample& bfrak,
                                    const AtomicMeasure& measure,
                                    const ThetaSpec& theta,
                                    const KappaGrid& grid,
                                    const std::vector<double>& z_out,
                                    CouplingMask mask) {
  const std::string who = "propagate_modes";
  Coupler c = build_coupler(regime, bfrak, measure, theta, k_omega, grid, mask,
                            who);
  const double du = medium_spacing(bfrak, who);
  const double h = 2.0 * regime.eps * du;
  check_rotation(c, h, who);
  const auto steps = slice_steps(z_out, h, bfrak.z_grid.size(), who);
  const std::size_t n = grid.size();
  if (init.a.size() != n || init.b.size() != n) {
    throw std::invalid_argument(who +
                                ": boundary data does not match the lattice");
  }

  ModeTrajectory tr;
  tr.omega = omega;
  tr.k_omega = k_omega;
  tr.eps = regime.eps;
  tr.grid = grid;
  tr.z = z_out;
  tr.slices.reserve(z_out.size());
  tr.absorbed.assign(z_out.size(), 0.0);

  ModePair x = sized_pair(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (c.active[i]) {
      x.a[i] = init.a[i];
      x.b[i] = init.b[i];
    }
  }
  ModePair k1 = sized_pair(n), k2 = sized_pair(n), k3 = sized_pair(n),
           k4 = sized_pair(n), tmp = sized_pair(n);
  double absorbed = 0.0;
  std::size_t cursor = 0;
  auto capture = [&](std::size_t t) {
    while (cursor < steps.size() && steps[cursor] == t) {
      tr.slices.push_back(x);
      tr.absorbed[cursor] = absorbed;
      ++cursor;
    }
  };
  capture(0);
  const std::size_t last = steps.back();
  for (std::size_t t = 0; t < last; ++t) {
    const double z0 = h * static_cast<double>(t);
    const std::size_t row = 2 * t;
    c.stage(z0, row, x, k1);
    const double e1 = c.absorbed_rate(x);
    axpy(tmp, x, 0.5 * h, k1);
    c.stage(z0 + 0.5 * h, row + 1, tmp, k2);
    const double e2 = c.absorbed_rate(tmp);
    axpy(tmp, x, 0.5 * h, k2);
    c.stage(z0 + 0.5 * h, row + 1, tmp, k3);
    const double e3 = c.absorbed_rate(tmp);
    axpy(tmp, x, h, k3);
    c.stage(z0 + h, row + 2, tmp, k4);
    const double e4 = c.absorbed_rate(tmp);
    const double w = h / 6.0;
    for (std::size_t i = 0; i < n; ++i) {
      x.a[i] += w * (k1.a[i] + 2.0 * k2.a[i] + 2.0 * k3.a[i] + k4.a[i]);
      x.b[i] += w * (k1.b[i] + 2.0 * k2.b[i] + 2.0 * k3.b[i] + k4.b[i]);
    }
    absorbed += w * (e1 + 2.0 * e2 + 2.0 * e3 + e4);
    capture(t + 1);
  }

  std::ostringstream prov;
  prov << "propagate_modes rk4 h=" << h << " steps=" << last
       << " eps=" << regime.eps << " alpha_eps=" << regime.alpha_eps
       << " mask=" << mask_name(mask);
  tr.provenance = prov.str();
  return tr;
}

ModeTrajectory propagate_modes(const EpsRegime& regime,
                               const FieldSample& bfrak,
                               const AtomicMeasure& measure,
                               const ThetaSpec& theta, const SourceSpec& src,
                               double omega, const KappaGrid& grid,
                               const std::vector<double>& z_out,
                               CouplingMask mask) {
  const WaveField f0 = phi_eps(src, regime, omega, grid);
  ModePair init;
  init.a = f0.values[0];
  init.b.assign(grid.size(), std::complex<double>(0.0, 0.0));
  return propagate_modes_from(init, omega, f0.k_omega, regime, bfrak, measure,
                              theta, grid, z_out, mask);
}

WaveField forward_only(const EpsRegime& regime, const FieldSample& bfrak,
                       const AtomicMeasure& measure, const ThetaSpec& theta,
                       const SourceSpec& src, double omega,
                       const KappaGrid& grid,
                       const std::vector<double>& z_out) {
  const std::string who = "forward_only";
  const WaveField f0 = phi_eps(src, regime, omega, grid);
  Coupler c = build_coupler(regime, bfrak, measure, theta, f0.k_omega, grid,
                            CouplingMask::diagonal_only, who);
  const double du = medium_spacing(bfrak, who);
  const double h = 2.0 * regime.eps * du;
  check_rotation(c, h, who);
  const auto steps = slice_steps(z_out, h, bfrak.z_grid.size(), who);
  const std::size_t n = grid.size();

  WaveField f;
  f.omega = omega;
  f.k_omega = f0.k_omega;
  f.grid = grid;
  f.z = z_out;
  f.kind = WaveKind::x_eps;
  f.values.reserve(z_out.size());

  std::vector<std::complex<double>> x(n, std::complex<double>(0.0, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    if (c.active[i]) x[i] = f0.values[0][i];
  }
  std::vector<std::complex<double>> k1(n), k2(n), k3(n), k4(n), tmp(n);
  std::size_t cursor = 0;
  auto capture = [&](std::size_t t) {
    while (cursor < steps.size() && steps[cursor] == t) {
      f.values.push_back(x);
      ++cursor;
    }
  };
  capture(0);
  const std::size_t last = steps.back();
  for (std::size_t t = 0; t < last; ++t) {
    const double z0 = h * static_cast<double>(t);
    const std::size_t row = 2 * t;
    c.stage_forward(z0, row, x, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
    c.stage_forward(z0 + 0.5 * h, row + 1, tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
    c.stage_forward(z0 + 0.5 * h, row + 1, tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
    c.stage_forward(z0 + h, row + 2, tmp, k4);
    const double w = h / 6.0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += w * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    capture(t + 1);
  }

  std::ostringstream prov;
  prov << "forward_only rk4 h=" << h << " steps=" << last
       << " eps=" << regime.eps << " alpha_eps=" << regime.alpha_eps;
  f.provenance = prov.str();
  f.validate();
  return f;
}

std::vector<SweepPoint> backscatter_sweep(const SweepConfig& cfg,
                                          const KernelEigen& kernel,
                                          const LongRangeLaw& law,
                                          const AtomicMeasure& measure,
                                          const ThetaSpec& theta,
                                          const SourceSpec& src,
                                          const KappaGrid& grid) {
  if (cfg.eps_list.empty()) {
    throw std::invalid_argument("backscatter_sweep: empty eps list");
  }
  if (!(cfg.travel > 0.0)) {
    throw std::invalid_argument("backscatter_sweep: travel must be positive");
  }
  if (cfg.steps_per_quarter < 1) {
    throw std::invalid_argument(
        "backscatter_sweep: steps_per_quarter must be >= 1");
  }
  const double k = src.k(cfg.omega);
  std::vector<double> atom_q(measure.atoms.size());
  for (std::size_t j = 0; j < measure.atoms.size(); ++j) {
    atom_q[j] = measure.atoms[j].q;
  }
  std::vector<SweepPoint> report;
  report.reserve(cfg.eps_list.size());
  for (std::size_t idx = 0; idx < cfg.eps_list.size(); ++idx) {
    const double eps = cfg.eps_list[idx];
    EpsRegime regime;
    regime.eps = eps;
    regime.alpha_eps = cfg.alpha_eps;
    regime.hurst_frak = law.hurst_frak;
    regime.validate();
    // budget the step against the fast phase, the coupling strength, and
    // the medium band, then refine by steps_per_quarter
    const double coupling = 0.5 * std::abs(k) *
                            std::pow(eps, regime.s() - 2.0) *
                            measure.total_variation() * theta.sup_abs();
    const double rate =
        2.0 * std::abs(k) / (eps * eps) + law.kappa_c / eps + coupling + 1.0;
    const double h_target =
        0.25 * kPi / (rate * static_cast<double>(cfg.steps_per_quarter));
    const auto n_steps =
        static_cast<std::size_t>(std::ceil(cfg.travel / h_target));
    const double h = cfg.travel / static_cast<double>(n_steps);
    const double du = h / (2.0 * eps);
    std::vector<double> u(2 * n_steps + 1);
    for (std::size_t i = 0; i < u.size(); ++i) {
      u[i] = du * static_cast<double>(i);
    }
    RngStream rng(cfg.master_seed, "mode-sweep",
                  static_cast<std::uint64_t>(idx));
    const FieldSample bfrak = sample_bfrak(kernel, law, u, atom_q, rng);
    const std::vector<double> z_out{0.0, cfg.travel};
    const ModeTrajectory tr =
        propagate_modes(regime, bfrak, measure, theta, src, cfg.omega, grid,
                        z_out, CouplingMask::full);
    const WaveField xw = forward_only(regime, bfrak, measure, theta, src,
                                      cfg.omega, grid, z_out);
    SweepPoint p;
    p.eps = eps;
    p.norm_in = tr.norm_a(0);
    p.norm_out = tr.norm_a(1);
    if (!(p.norm_in > 0.0)) {
      throw std::invalid_argument(
          "backscatter_sweep: boundary field vanishes on the lattice");
    }
    p.backscatter = tr.norm_b(1) / p.norm_in;
    double err2 = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      err2 += std::norm(tr.slices[1].a[i] - xw.values[1][i]);
    }
    p.forward_error = std::sqrt(err2 * grid.dk);
    const double f0 = tr.flux(0);
    p.flux_drift = std::abs(tr.flux(1) + tr.absorbed[1] - f0) / f0;
    p.seed = cfg.master_seed;
    p.index = idx;
    report.push_back(p);
  }
  return report;
}

}  // namespace fracwave
