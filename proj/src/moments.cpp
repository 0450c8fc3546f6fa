#include "fracwave/moments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "fracwave/fbm.hpp"

namespace fracwave {
namespace {

constexpr double kPi = std::numbers::pi;

double factorial(std::size_t n) {
  double f = 1.0;
  for (std::size_t i = 2; i <= n; ++i) f *= static_cast<double>(i);
  return f;
}

void enumerate_rec(std::vector<int>& free_idx, Pairing& cur,
                   std::vector<Pairing>& out) {
  if (free_idx.empty()) {
    out.push_back(cur);
    return;
  }
  const int a = free_idx.front();
  for (std::size_t j = 1; j < free_idx.size(); ++j) {
    const int b = free_idx[j];
    std::vector<int> rest;
    rest.reserve(free_idx.size() - 2);
    for (std::size_t k = 1; k < free_idx.size(); ++k) {
      if (k != j) rest.push_back(free_idx[k]);
    }
    cur.pairs.push_back({a, b});
    enumerate_rec(rest, cur, out);
    cur.pairs.pop_back();
  }
}

// Gauss-Legendre nodes and weights on [0, 1] by Newton iteration from the
// Chebyshev initial guess.
void gauss_legendre_01(std::size_t g, std::vector<double>& x,
                       std::vector<double>& w) {
  x.resize(g);
  w.resize(g);
  const auto n = static_cast<double>(g);
  for (std::size_t i = 0; i < g; ++i) {
    double t = std::cos(kPi * (static_cast<double>(i) + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      // Legendre recurrence for P_n(t), P'_n(t)
      double p0 = 1.0, p1 = t;
      for (std::size_t k = 2; k <= g; ++k) {
        const double kd = static_cast<double>(k);
        const double p2 = ((2.0 * kd - 1.0) * t * p1 - (kd - 1.0) * p0) / kd;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (t * p1 - p0) / (t * t - 1.0);
      const double step = p1 / dp;
      t -= step;
      if (std::abs(step) < 1e-15) break;
    }
    x[g - 1 - i] = 0.5 * (1.0 + t);
    w[g - 1 - i] = 1.0 / ((1.0 - t * t) * dp * dp);
  }
}

// Inverse CDF of the gap density (z - w) w^{-h} / (Z/2) on (0, z), Newton
// with a bisection bracket.
double sample_gap(double z, double h, double u01) {
  const double zhalf =
      std::pow(z, 2.0 - h) * (1.0 / (1.0 - h) - 1.0 / (2.0 - h));
  const double target = u01 * zhalf;
  const auto cdf = [&](double w) {
    return z * std::pow(w, 1.0 - h) / (1.0 - h) -
           std::pow(w, 2.0 - h) / (2.0 - h);
  };
  double lo = 0.0, hi = z;
  // density is integrable but unbounded at 0: start from the pure-power
  // inverse, which is exact as w -> 0
  double w = std::pow(target * (1.0 - h) / z, 1.0 / (1.0 - h));
  w = std::min(w, z * (1.0 - 1e-12));
  for (int it = 0; it < 60; ++it) {
    const double f = cdf(w) - target;
    if (f > 0.0) {
      hi = w;
    } else {
      lo = w;
    }
    const double dens = (z - w) * std::pow(w, -h);
    double step = dens > 0.0 ? f / dens : 0.0;
    double next = w - step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - w) < 1e-14 * z) {
      w = next;
      break;
    }
    w = next;
  }
  return w;
}

struct RhoTable {
  double z = 0.0;
  double step = 0.0;
  std::vector<double> val;

  double operator()(double delta) const {
    const double d = std::abs(delta);
    const double t = d / step;
    auto i = static_cast<std::size_t>(t);
    if (i >= val.size() - 1) return val.back();
    const double frac = t - static_cast<double>(i);
    return val[i] * (1.0 - frac) + val[i + 1] * frac;
  }
};

RhoTable build_rho_table(const ThetaConstants& tc, double A, double dr,
                         double z, std::size_t n_nodes) {
  RhoTable tab;
  tab.z = z;
  tab.step = z / static_cast<double>(n_nodes - 1);
  tab.val.resize(n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    tab.val[i] = pair_kernel_A(tc, A, dr, tab.step * static_cast<double>(i));
  }
  return tab;
}

}  // namespace

PairingSet enumerate_pairings(std::size_t n) {
  if (n > 12) {
    throw std::invalid_argument(
        "enumerate_pairings: n exceeds the combinatorial budget (12)");
  }
  PairingSet out;
  if (n % 2 == 1) {
    out.zero_moment = true;
    return out;
  }
  if (n == 0) {
    out.pairings.push_back({});
    return out;
  }
  std::vector<int> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
  Pairing cur;
  enumerate_rec(idx, cur, out.pairings);
  return out;
}

MomentEstimate pairing_moment(
    std::size_t n, const LongRangeLaw& law, const Eigen::MatrixXd& rhat,
    double z, const std::function<double(const std::vector<double>&)>& weight,
    RngStream& rng, double theta1, double tol, std::size_t max_draws) {
  const double h = law.hurst_frak;
  if (!(h > 0.0 && h < 1.0)) {
    throw std::invalid_argument("pairing_moment: hurst_frak outside (0,1)");
  }
  if (n == 0 || n % 2 == 1) {
    throw std::invalid_argument("pairing_moment: n must be even, n >= 2");
  }
  if (rhat.rows() < static_cast<Eigen::Index>(n) ||
      rhat.cols() < static_cast<Eigen::Index>(n)) {
    throw std::invalid_argument("pairing_moment: rhat must be at least n x n");
  }
  if (!(z > 0.0)) {
    throw std::invalid_argument("pairing_moment: z must be positive");
  }
  const PairingSet pset = enumerate_pairings(n);
  const double big_c = law.c_frak * theta1 * theta1;
  const double zc = 2.0 * std::pow(z, 2.0 - h) / ((1.0 - h) * (2.0 - h));
  const std::size_t half = n / 2;
  const double pref =
      std::pow(big_c, static_cast<double>(half)) *
      std::pow(zc, static_cast<double>(half)) / factorial(n);

  std::vector<double> kf(pset.pairings.size());
  for (std::size_t f = 0; f < pset.pairings.size(); ++f) {
    double prod = 1.0;
    for (const auto& [a, b] : pset.pairings[f].pairs) {
      prod *= rhat(a, b);
    }
    kf[f] = prod;
  }

  MomentEstimate out;
  if (!weight) {
    // unit weight: the summed integrand is permutation symmetric, so the
    // simplex integral is 1/n! of the cube integral, and each couple
    // integrates to Z there
    for (double k : kf) out.value += pref * k;
    return out;
  }

  // Monte Carlo over the cube with the canonical couple density
  // prod |u_{2j} - u_{2j+1}|^{-h} / Z^{n/2}. Sorting maps the draw onto the
  // simplex; the couples land on a permuted pairing, so the rhat product is
  // read off the pairing induced on sorted positions. Averaged over draws
  // this sweeps every pairing with equal multiplicity 2^{n/2} (n/2)!, which
  // the (n-1)!!/n! prefactor cancels.
  const double scale = std::pow(big_c, static_cast<double>(half)) *
                       std::pow(zc, static_cast<double>(half)) *
                       static_cast<double>(pset.pairings.size()) /
                       factorial(n);
  double mean = 0.0, m2 = 0.0;
  std::size_t draws = 0;
  std::vector<std::pair<double, int>> tagged(n);
  std::vector<double> sorted(n);
  std::vector<int> pos(n);
  const std::size_t batch = 2048;
  while (true) {
    for (std::size_t d = 0; d < batch; ++d) {
      for (std::size_t c = 0; c < half; ++c) {
        const double gap = sample_gap(z, h, rng.uniform01());
        const double base = rng.uniform(0.0, z - gap);
        const bool flip = rng.uniform01() < 0.5;
        tagged[2 * c] = {flip ? base : base + gap, static_cast<int>(2 * c)};
        tagged[2 * c + 1] = {flip ? base + gap : base,
                             static_cast<int>(2 * c + 1)};
      }
      std::sort(tagged.begin(), tagged.end(),
                [](const auto& l, const auto& r) { return l.first > r.first; });
      double kprod = 1.0;
      for (std::size_t i = 0; i < n; ++i) {
        sorted[i] = tagged[i].first;
        pos[static_cast<std::size_t>(tagged[i].second)] =
            static_cast<int>(i);
      }
      for (std::size_t c = 0; c < half; ++c) {
        const int pa = pos[2 * c], pb = pos[2 * c + 1];
        kprod *= rhat(std::min(pa, pb), std::max(pa, pb));
      }
      const double x = kprod * weight(sorted);
      const double delta = x - mean;
      mean += delta / static_cast<double>(draws + d + 1);
      m2 += delta * (x - mean);
    }
    draws += batch;
    out.value = scale * mean;
    out.stderr_ = scale * std::sqrt(m2 / (static_cast<double>(draws) *
                                          static_cast<double>(draws - 1)));
    out.draws = draws;
    if (out.stderr_ <= tol) return out;
    if (draws >= max_draws) {
      std::ostringstream os;
      os << "pairing_moment: draw budget " << max_draws
         << " exhausted; achieved stderr " << out.stderr_ << " above tol "
         << tol;
      throw std::runtime_error(os.str());
    }
  }
}

MomentEstimate mc_medium_moment(const std::vector<FieldSample>& replicas,
                                std::size_t n, double epsilon, double z,
                                const ThetaSpec& theta,
                                const LongRangeLaw& law) {
  if (replicas.size() < 100) {
    throw std::invalid_argument("mc_medium_moment: ensemble below 100");
  }
  if (n == 0) {
    throw std::invalid_argument("mc_medium_moment: n must be positive");
  }
  if (!(epsilon > 0.0 && z > 0.0)) {
    throw std::invalid_argument("mc_medium_moment: need epsilon, z > 0");
  }
  const double h = law.hurst_frak;
  const double horizon = z / epsilon;
  const double scale =
      std::pow(epsilon, static_cast<double>(n) * (1.0 - 0.5 * h)) /
      factorial(n);

  std::vector<double> vals;
  vals.reserve(replicas.size());
  for (const FieldSample& rep : replicas) {
    if (rep.kind != FieldKind::bfrak) {
      throw std::invalid_argument(
          "mc_medium_moment: replicas must be bfrak samples");
    }
    if (rep.z_grid.size() < 2 || rep.values.rows() <
                                     static_cast<Eigen::Index>(
                                         rep.z_grid.size())) {
      throw std::invalid_argument("mc_medium_moment: malformed sample");
    }
    if (rep.z_grid.back() < horizon * (1.0 - 1e-9)) {
      throw std::invalid_argument(
          "mc_medium_moment: sample grid does not reach z / epsilon");
    }
    // trapezoid of Theta(B) up to the horizon, last cell cut by linear
    // interpolation of B
    double acc = 0.0;
    double prev_t = rep.z_grid[0];
    double prev_f = theta(rep.values(0, 0));
    for (std::size_t i = 1; i < rep.z_grid.size(); ++i) {
      double t = rep.z_grid[i];
      double b = rep.values(static_cast<Eigen::Index>(i), 0);
      if (t >= horizon) {
        const double t0 = rep.z_grid[i - 1];
        const double frac = (horizon - t0) / (t - t0);
        b = rep.values(static_cast<Eigen::Index>(i - 1), 0) * (1.0 - frac) +
            b * frac;
        t = horizon;
      }
      const double f = theta(b);
      acc += 0.5 * (f + prev_f) * (t - prev_t);
      prev_t = t;
      prev_f = f;
      if (t >= horizon) break;
    }
    vals.push_back(scale * std::pow(acc, static_cast<double>(n)));
  }

  MomentEstimate out;
  double mean = 0.0;
  for (double v : vals) mean += v;
  mean /= static_cast<double>(vals.size());
  double var = 0.0;
  for (double v : vals) var += (v - mean) * (v - mean);
  var /= static_cast<double>(vals.size() - 1);
  out.value = mean;
  out.stderr_ = std::sqrt(var / static_cast<double>(vals.size()));
  out.draws = vals.size();
  return out;
}

void MomentSpec::validate() const {
  if (m1 + m2 < 1) {
    throw std::invalid_argument("MomentSpec: m1 + m2 must be at least 1");
  }
  if (!phi) {
    throw std::invalid_argument("MomentSpec: test function not set");
  }
  if (n_max > 12) {
    throw std::invalid_argument(
        "MomentSpec: Born order budget is 12 in total");
  }
  if (!frequencies.empty() && frequencies.size() != m1 + m2) {
    throw std::invalid_argument(
        "MomentSpec: frequencies must match the factor count");
  }
}

double pair_kernel_A(const ThetaConstants& tc, double A, double dr,
                     double delta) {
  if (!(A > 0.0 && dr > 0.0)) {
    throw std::invalid_argument("pair_kernel_A: need A, dr > 0");
  }
  const auto m = static_cast<std::size_t>(
      std::max<long long>(1, std::llround(A / dr)));
  const double p = 2.0 - 2.0 * tc.H;
  double acc = 0.0;
  // stepped phase over the bin midpoints, resynced periodically
  const double c = std::cos(dr * delta), s = std::sin(dr * delta);
  double ph_c = std::cos(0.5 * dr * delta), ph_s = std::sin(0.5 * dr * delta);
  double lo_p = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    if (k % 64 == 0) {
      const double rd = (static_cast<double>(k) + 0.5) * dr * delta;
      ph_c = std::cos(rd);
      ph_s = std::sin(rd);
    }
    const double hi = static_cast<double>(k + 1) * dr;
    const double hi_p = std::pow(hi, p);
    acc += ph_c * (hi_p - lo_p) / p;
    lo_p = hi_p;
    const double nc = ph_c * c - ph_s * s;
    ph_s = ph_c * s + ph_s * c;
    ph_c = nc;
  }
  return 2.0 * tc.sigma_H * tc.sigma_H * tc.C_H * acc;
}

std::complex<double> wick_moment_XA(const MomentSpec& spec,
                                    const AtomicMeasure& measure,
                                    const KernelEigen& kernel,
                                    const WaveField& phi0, double z, double A,
                                    double dr, const ThetaConstants& tc) {
  using cplx = std::complex<double>;
  spec.validate();
  if (spec.m1 + spec.m2 != 1) {
    throw std::invalid_argument(
        "wick_moment_XA: only single-factor moments are implemented");
  }
  measure.validate();
  if (phi0.n_slices() != 1 || std::abs(phi0.z[0]) > 1e-12) {
    throw std::invalid_argument(
        "wick_moment_XA: phi0 must be a single slice at z = 0");
  }
  if (!(z > 0.0)) {
    throw std::invalid_argument("wick_moment_XA: z must be positive");
  }
  const KappaGrid& grid = phi0.grid;
  const double dk = grid.dk;
  const double k_omega = phi0.k_omega;
  const std::size_t n_atoms = measure.atoms.size();
  const std::size_t n_nodes = grid.size();

  const RhoTable rho = build_rho_table(tc, A, dr, z, 4097);

  // conj(phi) on the lattice once
  std::vector<cplx> phi_conj(n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    phi_conj[i] = std::conj(spec.phi(grid.node(i)));
  }

  // order zero
  cplx total(0.0, 0.0);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    total += phi0.values[0][i] * phi_conj[i];
  }
  total *= dk;

  std::vector<double> glx, glw;
  std::vector<double> u(12), theta_rate(12);
  std::vector<int> word(12);

  for (std::size_t n = 2; n <= spec.n_max; n += 2) {
    const PairingSet pset = enumerate_pairings(n);
    const std::size_t g = n <= 2 ? 32 : (n <= 4 ? 12 : 8);
    gauss_legendre_01(g, glx, glw);

    // R-products per pairing depend on the word; the simplex integral is
    // evaluated once per (kappa, word) with all pairings folded into the
    // leaf factor
    cplx order_acc(0.0, 0.0);
    std::vector<double> rprod(pset.pairings.size());

    for (std::size_t ik = 0; ik < n_nodes; ++ik) {
      if (std::abs(phi_conj[ik]) < 1e-300) continue;
      const double kappa = grid.node(ik);

      std::fill(word.begin(), word.begin() + static_cast<long>(n), 0);
      while (true) {
        // phases, endpoint, couplings for this word
        cplx couple(1.0, 0.0);
        double q_prev = kappa;
        bool on_lattice = true;
        for (std::size_t m = 0; m < n; ++m) {
          const Atom& at = measure.atoms[static_cast<std::size_t>(word[m])];
          couple *= at.a * at.U;
          const double q_new = q_prev - at.q;
          theta_rate[m] =
              -(q_new * q_new - q_prev * q_prev) / (2.0 * k_omega);
          q_prev = q_new;
        }
        cplx phi0_end(0.0, 0.0);
        {
          const double off_real = (q_prev - grid.node(0)) / dk;
          const auto off = std::llround(off_real);
          if (std::abs(off_real - static_cast<double>(off)) > 1e-9) {
            throw std::invalid_argument(
                "wick_moment_XA: atom shifts must be lattice-exact");
          }
          if (off >= 0 && off < static_cast<long long>(n_nodes)) {
            phi0_end = phi0.values[0][static_cast<std::size_t>(off)];
          } else {
            on_lattice = false;
          }
        }

        if (on_lattice && std::abs(phi0_end) > 0.0) {
          for (std::size_t f = 0; f < pset.pairings.size(); ++f) {
            double rp = 1.0;
            for (const auto& [a, b] : pset.pairings[f].pairs) {
              const double qa = std::abs(
                  measure.atoms[static_cast<std::size_t>(word[a])].q);
              const double qb = std::abs(
                  measure.atoms[static_cast<std::size_t>(word[b])].q);
              rp *= kernel.reconstruct(qa, qb);
            }
            rprod[f] = rp;
          }

          // iterated GL over the decreasing simplex
          cplx integral(0.0, 0.0);
          auto rec = [&](auto&& self, std::size_t level, double upper,
                         double wprod, double phase) -> void {
            if (level == n) {
              double s = 0.0;
              for (std::size_t f = 0; f < pset.pairings.size(); ++f) {
                double pr = rprod[f];
                for (const auto& [a, b] : pset.pairings[f].pairs) {
                  pr *= rho(u[static_cast<std::size_t>(a)] -
                            u[static_cast<std::size_t>(b)]);
                }
                s += pr;
              }
              integral += wprod * s * std::polar(1.0, phase);
              return;
            }
            for (std::size_t j = 0; j < g; ++j) {
              const double uj = upper * glx[j];
              u[level] = uj;
              self(self, level + 1, uj, wprod * upper * glw[j],
                   phase + theta_rate[level] * uj);
            }
          };
          rec(rec, 0, z, 1.0, 0.0);
          order_acc += phi_conj[ik] * couple * phi0_end * integral;
        }

        // odometer over the word
        std::size_t m = 0;
        while (m < n) {
          if (static_cast<std::size_t>(++word[m]) < n_atoms) break;
          word[m] = 0;
          ++m;
        }
        if (m == n) break;
      }
    }
    // (i k)^n, n even; the sigma_H^n factor lives inside pair_kernel_A
    const double ikn = std::pow(k_omega, static_cast<double>(n)) *
                       (n % 4 == 0 ? 1.0 : -1.0);
    total += ikn * dk * order_acc;
  }
  return total;
}

}  // namespace fracwave
