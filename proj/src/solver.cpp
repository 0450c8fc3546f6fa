#include "fracwave/solver.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace fracwave {

namespace {

using cplx = std::complex<double>;

constexpr std::size_t kResync = 64;

double grid_tol(double scale) { return 1e-9 * std::max(1.0, std::abs(scale)); }

// Spacing of a uniform noise grid anchored at 0.
double noise_spacing(const FieldSample& noise) {
  const auto& z = noise.z_grid;
  if (z.size() < 2) {
    throw std::invalid_argument("noise grid needs at least two nodes");
  }
  if (z.front() != 0.0) {
    throw std::invalid_argument("noise grid must start at z = 0");
  }
  const double dz = z.back() / static_cast<double>(z.size() - 1);
  if (!(dz > 0.0)) {
    throw std::invalid_argument("noise grid must be increasing");
  }
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (std::abs(z[i] - static_cast<double>(i) * dz) > grid_tol(z.back())) {
      throw std::invalid_argument("noise grid must be uniform");
    }
  }
  if (static_cast<std::size_t>(noise.values.rows()) != z.size() ||
      static_cast<std::size_t>(noise.values.cols()) != noise.cols.size()) {
    throw std::invalid_argument("noise sample shape mismatch");
  }
  return dz;
}

// Column per atom, matched by wavevector value. Atoms sharing a wavevector
// share the column, which is exactly the field restriction b(z, q).
std::vector<std::size_t> atom_columns(const FieldSample& noise,
                                      const AtomicMeasure& measure) {
  if (noise.kind != FieldKind::bH_derivative) {
    throw std::invalid_argument("noise must hold b_H^A derivative samples");
  }
  if (measure.atoms.empty()) {
    throw std::invalid_argument("measure has no atoms");
  }
  std::vector<std::size_t> cols(measure.atoms.size());
  for (std::size_t j = 0; j < measure.atoms.size(); ++j) {
    const double q = measure.atoms[j].q;
    bool found = false;
    for (std::size_t c = 0; c < noise.cols.size(); ++c) {
      if (std::abs(noise.cols[c] - q) <= 1e-12 * std::max(1.0, std::abs(q))) {
        cols[j] = c;
        found = true;
        break;
      }
    }
    if (!found) {
      std::ostringstream msg;
      msg << "no noise column for atom wavevector " << q;
      throw std::invalid_argument(msg.str());
    }
  }
  return cols;
}

// out[i] = e^{-i (q^2 - 2 kappa_i q) t / (2 k)}, geometric in i; the running
// product is resynced every kResync nodes to stop drift.
void shift_phases(const KappaGrid& grid, double q, double t, double k_omega,
                  std::vector<cplx>& out) {
  const std::size_t n = grid.size();
  out.resize(n);
  const double base = -0.5 * q * q * t / k_omega;
  const cplx step = std::polar(1.0, grid.dk * q * t / k_omega);
  cplx ph(1.0, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (i % kResync == 0) {
      ph = std::polar(1.0, base + grid.node(i) * q * t / k_omega);
    } else {
      ph *= step;
    }
    out[i] = ph;
  }
}

// Right-hand side of the lattice ODE. Shifts falling off the lattice read
// zero; together with mirror-closed atoms this keeps Re<X, F> = 0 exactly,
// so the truncation never leaks norm.
struct Generator {
  const KappaGrid* grid;
  double k_omega;
  double sigma_H;
  const AtomicMeasure* measure;
  const FieldSample* noise;
  std::vector<std::size_t> cols;
  std::vector<std::ptrdiff_t> offsets;
  std::vector<cplx> phase;

  void apply(double t, std::size_t row, const std::vector<cplx>& x,
             std::vector<cplx>& out) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
    out.assign(x.size(), cplx(0.0, 0.0));
    for (std::size_t j = 0; j < measure->atoms.size(); ++j) {
      const Atom& at = measure->atoms[j];
      const double b =
          noise->values(static_cast<Eigen::Index>(row),
                        static_cast<Eigen::Index>(cols[j]));
      const cplx c = cplx(0.0, k_omega * sigma_H * at.a * b) * at.U;
      shift_phases(*grid, at.q, t, k_omega, phase);
      const std::ptrdiff_t off = offsets[j];
      const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, off);
      const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n, n + off);
      for (std::ptrdiff_t i = lo; i < hi; ++i) {
        out[static_cast<std::size_t>(i)] +=
            (c * phase[static_cast<std::size_t>(i)]) *
            x[static_cast<std::size_t>(i - off)];
      }
    }
  }
};

Generator make_generator(const KappaGrid& grid, double k_omega, double sigma_H,
                         const AtomicMeasure& measure,
                         const FieldSample& noise) {
  Generator gen;
  gen.grid = &grid;
  gen.k_omega = k_omega;
  gen.sigma_H = sigma_H;
  gen.measure = &measure;
  gen.noise = &noise;
  gen.cols = atom_columns(noise, measure);
  gen.offsets.resize(measure.atoms.size());
  for (std::size_t j = 0; j < measure.atoms.size(); ++j) {
    gen.offsets[j] = grid.offset_of(measure.atoms[j].q);
  }
  return gen;
}

// Phase rotation rate of the integrand: deterministic shift phases at the
// lattice edges plus the total-variation bound on the noise coupling.
double rotation_rate(const Generator& gen, std::size_t row_hi) {
  const KappaGrid& grid = *gen.grid;
  const double k_lo = grid.node(0);
  const double k_hi = grid.node(grid.size() - 1);
  double det = 0.0;
  double coupling = 0.0;
  for (std::size_t j = 0; j < gen.measure->atoms.size(); ++j) {
    const Atom& at = gen.measure->atoms[j];
    const double q = at.q;
    det = std::max(det, std::abs(q * q - 2.0 * k_lo * q));
    det = std::max(det, std::abs(q * q - 2.0 * k_hi * q));
    double bmax = 0.0;
    for (std::size_t r = 0; r <= row_hi; ++r) {
      bmax = std::max(bmax, std::abs(gen.noise->values(
                                static_cast<Eigen::Index>(r),
                                static_cast<Eigen::Index>(gen.cols[j]))));
    }
    coupling += std::abs(gen.k_omega) * gen.sigma_H * at.a * std::abs(at.U) *
                bmax;
  }
  return det / (2.0 * std::abs(gen.k_omega)) + coupling;
}

void check_phi0(const WaveField& phi0) {
  phi0.validate();
  if (phi0.n_slices() != 1 || phi0.z[0] != 0.0) {
    throw std::invalid_argument("phi0 must be a single slice at z = 0");
  }
  if (phi0.k_omega == 0.0) {
    throw std::invalid_argument("k_omega must be nonzero");
  }
}

}  // namespace

std::vector<double> KappaGrid::nodes() const {
  std::vector<double> out(size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = node(i);
  return out;
}

int KappaGrid::offset_of(double q) const {
  const double raw = q / dk;
  const long long j = std::llround(raw);
  if (std::abs(q - static_cast<double>(j) * dk) >
      1e-9 * std::max(1.0, std::abs(q))) {
    std::ostringstream msg;
    msg << "wavevector " << q << " is off the lattice (dk = " << dk << ")";
    throw std::invalid_argument(msg.str());
  }
  return static_cast<int>(j);
}

void KappaGrid::validate() const {
  if (!(dk > 0.0)) throw std::invalid_argument("dk must be positive");
  if (half_span < 0) throw std::invalid_argument("half_span must be >= 0");
}

KappaGrid KappaGrid::for_scattering(double dk, double r_source,
                                    double r_support, int n_max, int pad) {
  if (!(dk > 0.0)) throw std::invalid_argument("dk must be positive");
  if (r_source < 0.0 || r_support < 0.0 || n_max < 0 || pad < 0) {
    throw std::invalid_argument("negative extent");
  }
  const double reach = r_source + static_cast<double>(n_max) * r_support;
  KappaGrid grid;
  grid.dk = dk;
  grid.half_span = static_cast<int>(std::ceil(reach / dk - 1e-9)) + pad;
  return grid;
}

double WaveField::norm(std::size_t slice) const {
  const auto& v = values.at(slice);
  double s2 = 0.0;
  for (const auto& c : v) s2 += std::norm(c);
  return std::sqrt(s2 * grid.dk);
}

void WaveField::validate() const {
  grid.validate();
  if (values.size() != z.size()) {
    throw std::invalid_argument("slice count mismatch");
  }
  for (const auto& v : values) {
    if (v.size() != grid.size()) {
      throw std::invalid_argument("slice length does not match the lattice");
    }
  }
  for (std::size_t s = 1; s < z.size(); ++s) {
    if (!(z[s] > z[s - 1])) {
      throw std::invalid_argument("slice coordinates must increase");
    }
  }
}

void SourceSpec::validate() const {
  if (!fhat0) throw std::invalid_argument("fhat0 is not set");
  if (!(c0 > 0.0)) throw std::invalid_argument("c0 must be positive");
  if (L_S > 0.0) throw std::invalid_argument("source plane must have L_S <= 0");
  if (omega_c < 0.0) throw std::invalid_argument("omega_c must be >= 0");
}

WaveField initial_condition(const SourceSpec& src, double omega,
                            const KappaGrid& grid) {
  src.validate();
  grid.validate();
  WaveField f;
  f.omega = omega;
  f.k_omega = src.k(omega);
  f.grid = grid;
  f.z = {0.0};
  f.kind = WaveKind::x_a;
  f.values.assign(1, std::vector<cplx>(grid.size(), cplx(0.0, 0.0)));
  if (std::abs(omega) < src.omega_c) {
    std::ostringstream msg;
    msg << "initial_condition: omega " << omega << " below band edge "
        << src.omega_c << "; zero field";
    f.provenance = msg.str();
    return f;
  }
  if (f.k_omega == 0.0) {
    throw std::invalid_argument("k_omega must be nonzero");
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double kappa = grid.node(i);
    const double angle = 0.5 * kappa * kappa * src.L_S / f.k_omega;
    f.values[0][i] = 0.5 * src.fhat0(omega, kappa) * std::polar(1.0, angle);
  }
  f.provenance = "initial_condition";
  return f;
}

WaveField born_term(std::size_t n, const FieldSample& noise,
                    const AtomicMeasure& measure, const WaveField& phi0,
                    double z, const ThetaConstants& constants,
                    std::size_t n_max) {
  check_phi0(phi0);
  if (n > n_max) {
    std::ostringstream msg;
    msg << "scattering order " << n << " exceeds the budget " << n_max;
    throw std::invalid_argument(msg.str());
  }
  const double dzn = noise_spacing(noise);
  const long long mz = std::llround(z / dzn);
  if (mz < 0 || std::abs(z - static_cast<double>(mz) * dzn) >
                    grid_tol(noise.z_grid.back()) ||
      static_cast<std::size_t>(mz) >= noise.z_grid.size()) {
    throw std::invalid_argument("z must sit on the noise grid");
  }

  WaveField out;
  out.omega = phi0.omega;
  out.k_omega = phi0.k_omega;
  out.grid = phi0.grid;
  out.z = {z};
  out.kind = WaveKind::x_a;
  std::ostringstream prov;
  prov << "born_term n=" << n << " cumulative4 dz=" << dzn;
  out.provenance = prov.str();

  if (n == 0) {
    out.values = {phi0.values[0]};
    return out;
  }
  const std::size_t K = phi0.grid.size();
  if (mz == 0) {
    out.values.assign(1, std::vector<cplx>(K, cplx(0.0, 0.0)));
    return out;
  }
  if (mz < 3) {
    throw std::invalid_argument(
        "noise grid too coarse for the cumulative rule (need 4 nodes)");
  }

  Generator gen = make_generator(phi0.grid, phi0.k_omega, constants.sigma_H,
                                 measure, noise);
  const std::size_t M = static_cast<std::size_t>(mz);

  // cur row i holds T^{m-1}(u_i, .); level m integrates the driven rows
  // cumulatively, exact on cubics per interval.
  std::vector<std::vector<cplx>> cur(M + 1, phi0.values[0]);
  std::vector<std::vector<cplx>> g(M + 1), nxt(M + 1);
  for (std::size_t lvl = 1; lvl <= n; ++lvl) {
    for (std::size_t i = 0; i <= M; ++i) {
      gen.apply(dzn * static_cast<double>(i), i, cur[i], g[i]);
    }
    nxt[0].assign(K, cplx(0.0, 0.0));
    for (std::size_t i = 0; i < M; ++i) {
      std::size_t s0;
      double w0, w1, w2, w3;
      if (i == 0) {
        s0 = 0;
        w0 = 9.0 / 24.0, w1 = 19.0 / 24.0, w2 = -5.0 / 24.0, w3 = 1.0 / 24.0;
      } else if (i == M - 1) {
        s0 = M - 3;
        w0 = 1.0 / 24.0, w1 = -5.0 / 24.0, w2 = 19.0 / 24.0, w3 = 9.0 / 24.0;
      } else {
        s0 = i - 1;
        w0 = -1.0 / 24.0, w1 = 13.0 / 24.0, w2 = 13.0 / 24.0, w3 = -1.0 / 24.0;
      }
      nxt[i + 1].resize(K);
      const auto& a0 = g[s0];
      const auto& a1 = g[s0 + 1];
      const auto& a2 = g[s0 + 2];
      const auto& a3 = g[s0 + 3];
      for (std::size_t idx = 0; idx < K; ++idx) {
        nxt[i + 1][idx] =
            nxt[i][idx] +
            dzn * (w0 * a0[idx] + w1 * a1[idx] + w2 * a2[idx] + w3 * a3[idx]);
      }
    }
    cur.swap(nxt);
  }
  out.values = {cur[M]};
  return out;
}

WaveField solve_regularized(const FieldSample& noise,
                            const AtomicMeasure& measure,
                            const WaveField& phi0,
                            const std::vector<double>& z_out,
                            const ThetaConstants& constants) {
  check_phi0(phi0);
  if (z_out.empty()) {
    throw std::invalid_argument("no output slices requested");
  }
  const double dzn = noise_spacing(noise);
  const double h = 2.0 * dzn;
  const std::size_t n_rows = noise.z_grid.size();

  std::vector<std::size_t> steps(z_out.size());
  for (std::size_t s = 0; s < z_out.size(); ++s) {
    const long long m = std::llround(z_out[s] / h);
    if (m < 0 ||
        std::abs(z_out[s] - static_cast<double>(m) * h) >
            grid_tol(noise.z_grid.back()) ||
        2 * static_cast<std::size_t>(m) >= n_rows) {
      std::ostringstream msg;
      msg << "slice z = " << z_out[s]
          << " does not sit on the RK4 grid (step " << h << ")";
      throw std::invalid_argument(msg.str());
    }
    steps[s] = static_cast<std::size_t>(m);
    if (s > 0 && steps[s] <= steps[s - 1]) {
      throw std::invalid_argument("output slices must strictly increase");
    }
  }

  Generator gen = make_generator(phi0.grid, phi0.k_omega, constants.sigma_H,
                                 measure, noise);
  const std::size_t last = steps.back();
  const double rate = rotation_rate(gen, 2 * last);
  const double quarter_pi = std::numbers::pi / 4.0;
  if (rate * h > quarter_pi) {
    std::ostringstream msg;
    msg << "phase rotation " << rate * h
        << " rad per step exceeds pi/4; suggested step dz <= "
        << quarter_pi / rate << " (noise spacing half of that)";
    throw std::invalid_argument(msg.str());
  }

  WaveField out;
  out.omega = phi0.omega;
  out.k_omega = phi0.k_omega;
  out.grid = phi0.grid;
  out.z = z_out;
  out.kind = WaveKind::x_a;
  std::ostringstream prov;
  prov << "solve_regularized rk4 h=" << h << " steps=" << last;
  out.provenance = prov.str();
  out.values.reserve(z_out.size());

  std::vector<cplx> x = phi0.values[0];
  const std::size_t K = x.size();
  std::vector<cplx> k1, k2, k3, k4, stage(K);
  std::size_t next = 0;
  if (steps[next] == 0) {
    out.values.push_back(x);
    ++next;
  }
  for (std::size_t step = 0; step < last; ++step) {
    const double t = h * static_cast<double>(step);
    const std::size_t r0 = 2 * step;
    gen.apply(t, r0, x, k1);
    for (std::size_t i = 0; i < K; ++i) stage[i] = x[i] + 0.5 * h * k1[i];
    gen.apply(t + 0.5 * h, r0 + 1, stage, k2);
    for (std::size_t i = 0; i < K; ++i) stage[i] = x[i] + 0.5 * h * k2[i];
    gen.apply(t + 0.5 * h, r0 + 1, stage, k3);
    for (std::size_t i = 0; i < K; ++i) stage[i] = x[i] + h * k3[i];
    gen.apply(t + h, r0 + 2, stage, k4);
    for (std::size_t i = 0; i < K; ++i) {
      x[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    if (next < steps.size() && steps[next] == step + 1) {
      out.values.push_back(x);
      ++next;
    }
  }
  return out;
}

namespace {

WaveField free_phase(const WaveField& in, double sign, WaveKind out_kind) {
  in.validate();
  if (in.k_omega == 0.0) {
    throw std::invalid_argument("k_omega must be nonzero");
  }
  WaveField out = in;
  out.kind = out_kind;
  for (std::size_t s = 0; s < in.n_slices(); ++s) {
    const double z = in.z[s];
    if (z == 0.0) continue;  // phase is exactly 1
    for (std::size_t i = 0; i < in.grid.size(); ++i) {
      const double kappa = in.grid.node(i);
      const double angle = sign * 0.5 * kappa * kappa * z / in.k_omega;
      out.values[s][i] = in.values[s][i] * std::polar(1.0, angle);
    }
  }
  return out;
}

}  // namespace

WaveField to_psi(const WaveField& x_field) {
  if (x_field.kind == WaveKind::psi) {
    throw std::invalid_argument("field already carries the free phase");
  }
  return free_phase(x_field, -1.0, WaveKind::psi);
}

WaveField from_psi(const WaveField& psi_field) {
  if (psi_field.kind != WaveKind::psi) {
    throw std::invalid_argument("from_psi expects a psi field");
  }
  return free_phase(psi_field, 1.0, WaveKind::x_a);
}

ConservationReport conservation_report(const WaveField& trajectory) {
  trajectory.validate();
  if (trajectory.n_slices() == 0) {
    throw std::invalid_argument("empty trajectory");
  }
  ConservationReport rep;
  rep.z = trajectory.z;
  rep.norms.resize(trajectory.n_slices());
  for (std::size_t s = 0; s < trajectory.n_slices(); ++s) {
    rep.norms[s] = trajectory.norm(s);
  }
  const double n0 = rep.norms[0];
  const double floor = std::max(n0, 1e-300);
  rep.max_rel_drift = 0.0;
  for (double ns : rep.norms) {
    rep.max_rel_drift = std::max(rep.max_rel_drift,
                                 std::abs(ns - n0) / floor);
  }
  return rep;
}

}  // namespace fracwave
