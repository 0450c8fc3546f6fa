#pragma once

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "fracwave/medium.hpp"
#include "fracwave/special_fn.hpp"

namespace fracwave {

// Uniform transverse frequency lattice kappa_i = (i - half_span) dk. Atom
// wavevectors must land on the lattice exactly, so every scattering shift
// X(z, kappa - q) is an integer index move and never interpolates.
struct KappaGrid {
  double dk = 1.0;
  int half_span = 0;

  std::size_t size() const {
    return 2 * static_cast<std::size_t>(half_span) + 1;
  }
  double node(std::size_t i) const {
    return (static_cast<int>(i) - half_span) * dk;
  }
  std::vector<double> nodes() const;
  // Lattice offset of a shift q; throws if q is off-lattice.
  int offset_of(double q) const;
  void validate() const;

  // n scattering events move support by at most n * r_support, so the lattice
  // covers r_source + n_max * r_support plus pad nodes on each side.
  static KappaGrid for_scattering(double dk, double r_source, double r_support,
                                  int n_max, int pad = 8);
};

enum class WaveKind { x_a, x_eps, psi };

struct WaveField {
  double omega = 0.0;
  double k_omega = 0.0;
  KappaGrid grid;
  std::vector<double> z;  // stored slices
  std::vector<std::vector<std::complex<double>>> values;  // [slice][node]
  WaveKind kind = WaveKind::x_a;
  std::string provenance;

  std::size_t n_slices() const { return z.size(); }
  // Lattice-weighted l2 norm sqrt(sum_i |v_i|^2 dk) of one slice.
  double norm(std::size_t slice) const;
  void validate() const;
};

struct SourceSpec {
  // fhat0(omega, kappa); even in omega and zero for |omega| < omega_c.
  std::function<std::complex<double>(double, double)> fhat0;
  double omega_c = 1.0;
  double L_S = 0.0;  // source plane, <= 0
  double c0 = 1.0;   // background speed

  double k(double omega) const { return omega / c0; }
  void validate() const;
};

// phi0(kappa) = (1/2) fhat0(omega, kappa) e^{i kappa^2 L_S / (2 k_omega)}:
// free back-propagation from the source plane plus the splitting half, so
// norm(phi0) = (1/2) norm(fhat0(omega, .)) node for node. A frequency below
// the band returns the zero field and records a warning in provenance.
WaveField initial_condition(const SourceSpec& src, double omega,
                            const KappaGrid& grid);

// n-th term of the scattering series at depth z,
//   X^n(z, kappa) = (i k_omega sigma_H)^n  sum over length-n atom words
//     int_{0 < u_n < ... < u_1 < z} prod_m [a U]_m b(u_m, q_m)
//       e^{-i(|Q_m|^2 - |Q_{m-1}|^2) u_m / (2 k_omega)} phi0(Q_n) du,
// with Q_m = kappa - q_1 - ... - q_m. Evaluated by iterating the prefix
// integral on the noise grid (fourth-order cumulative rule), which sums all
// atom words at once. noise must hold b_H^A samples on a uniform grid from 0
// covering z, with one column per distinct atom wavevector; z itself must sit
// on that grid with at least four nodes below it. n > n_max is a budget
// error.
WaveField born_term(std::size_t n, const FieldSample& noise,
                    const AtomicMeasure& measure, const WaveField& phi0,
                    double z, const ThetaConstants& constants,
                    std::size_t n_max = 6);

// Integrates d/dz X(z, kappa) = i k_omega sigma_H sum_atoms a U
//   e^{-i(|kappa-q|^2 - |kappa|^2) z / (2 k_omega)} b_H^A(z, q) X(z, kappa-q)
// with classical RK4. The step is pinned to the noise grid: h = 2 dz_noise,
// stages read b at consecutive rows, and every requested slice must sit on
// the even sub-grid. Shifts that leave the lattice read zero, which keeps the
// mirror-pair cancellation in d|X|^2/dz exact on the truncated lattice, so
// norm drift measures the integrator alone. Refuses with a suggested step
// when the phase rotation per step exceeds pi/4.
WaveField solve_regularized(const FieldSample& noise,
                            const AtomicMeasure& measure,
                            const WaveField& phi0,
                            const std::vector<double>& z_out,
                            const ThetaConstants& constants);

// Psi(z, kappa) = e^{-i kappa^2 z / (2 k_omega)} X(z, kappa) slice by slice;
// from_psi inverts it. The z = 0 slice is copied untouched.
WaveField to_psi(const WaveField& x_field);
WaveField from_psi(const WaveField& psi_field);

struct ConservationReport {
  std::vector<double> z;
  std::vector<double> norms;          // lattice-weighted l2 per slice
  double max_rel_drift = 0.0;         // max_s |n_s - n_0| / n_0
};

ConservationReport conservation_report(const WaveField& trajectory);

}  // namespace fracwave
