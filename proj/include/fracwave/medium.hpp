#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fracwave/rng.hpp"
#include "fracwave/special_fn.hpp"

namespace fracwave {

// One spectral atom (a, U, q). Measures are closed under the mirror map
// (U, q) -> (conj(U), -q), which keeps every synthesized field real.
struct Atom {
  double a;
  std::complex<double> U;
  double q;
};

struct AtomicMeasure {
  std::vector<Atom> atoms;  // full list, mirrors included
  double support_radius;    // all |q| <= support_radius
  double tv_cap;            // sum_j a_j |U_j| over the full list stays below

  double total_variation() const;
  void validate() const;
  // Indices of one representative per mirror pair (atoms are stored in
  // representative/mirror order).
  std::vector<std::size_t> half_set() const;
};

struct MeasureSpec {
  std::size_t n_atoms = 8;     // representatives; mirrors double the list
  double atom_weight = 1.0;    // a_j
  double disk_radius = 1.0;    // |U_j| bound
  bool complex_disk = true;    // false: U_j real uniform on [-rho, rho]
  double support_radius = 3.0;
  double x_period = 6.283185307179586;  // dual lattice spacing 2 pi / period
  double tv_cap = 0.0;         // <= 0: tight cap 2 n a rho

  double effective_cap() const;
  double e_u2() const;                  // E|U|^2 under the amplitude law
  std::vector<double> lattice() const;  // admissible wavevectors
};

// E_m-average profile R_0(x) = sum over atoms (mirrors included) of
// a^2 E|U|^2 E_q[e^{-iqx}]; R_0(0) equals the total mass of the weights.
double measure_r0(const MeasureSpec& spec, double x);

struct KernelSpec {
  std::string id;
  std::function<double(double, double)> eval;  // R-hat(p, q)

  static KernelSpec gaussian_sym(double ell);  // exp(-(|p|-|q|)^2 / 2 ell^2)
  static KernelSpec gaussian(double ell);      // exp(-(p-q)^2 / 2 ell^2)
  static KernelSpec constant();                // R-hat == 1 (rank one)
};

struct KernelEigen {
  std::vector<double> nodes;    // quadrature nodes spanning [-rS, rS]
  std::vector<double> weights;  // trapezoid weights
  Eigen::VectorXd eigvals;      // beta_n >= 0, descending, truncated
  Eigen::MatrixXd eigvecs;      // column n = e_n at nodes
  KernelSpec kernel;

  std::size_t rank() const { return static_cast<std::size_t>(eigvals.size()); }
  // Nystrom extension of e_n off the node set.
  double eval_eigvec(std::size_t n, double q) const;
  // sum_n beta_n e_n(p) e_n(q).
  double reconstruct(double p, double q) const;
};

KernelEigen build_kernel(const KernelSpec& spec, double support_radius,
                         std::size_t node_count);

enum class FieldKind { bfrak, bH_exact, bH_spectral, bH_derivative, wfield };

struct FieldSample {
  std::vector<double> z_grid;
  std::vector<double> cols;  // wavevector (or x) per column; empty if modal
  Eigen::MatrixXd values;    // rows: z, columns: q / mode / x
  FieldKind kind;
  std::string provenance;
};

struct MediumSample {
  std::vector<double> z_grid;
  std::vector<double> x_grid;
  Eigen::MatrixXd v;  // V(z, x), real
  double imag_residue;
  std::string provenance;
};

AtomicMeasure sample_measure(const MeasureSpec& spec, RngStream& rng);

// Stationary autocorrelation r_frak(z) = int_0^1 cos(kappa_c z t^{1/h}) dt,
// the normalized Fourier transform of the cutoff density 1_{|k|<kappa_c}
// |k|^{h-1}.
double rfrak_autocorrelation(const LongRangeLaw& law, double z);

// B_frak(z, q) on the atom wavevectors: sum_n sqrt(beta_n) e_n(q) xi_n(z)
// with each xi_n stationary Gaussian, autocorrelation r_frak, synthesized
// directly from the band-limited spectral density. Mirror pairs share one
// sample path, so B(z, q) = B(z, -q) exactly.
FieldSample sample_bfrak(const KernelEigen& kernel, const LongRangeLaw& law,
                         const std::vector<double>& z_grid,
                         const std::vector<double>& atom_q, RngStream& rng);

MediumSample synthesize_V(const AtomicMeasure& measure,
                          const FieldSample& bfrak, const ThetaSpec& theta,
                          const std::vector<double>& x_grid);

struct DecayFit {
  double exponent;   // fitted decay power of the z-autocovariance
  double amplitude;  // prefactor at lag 1
  std::vector<double> used_lags;
  std::vector<double> autocov;
};

// Log-log least squares on the ensemble z-autocovariance of V at a fixed
// transverse pair; nonpositive-autocovariance lags are dropped with a
// warning, and dropping all of them is an error.
DecayFit fit_decay_exponent(const std::vector<MediumSample>& ensemble,
                            const std::vector<double>& lags,
                            std::size_t ix = 0, std::size_t iy = 0);

}  // namespace fracwave
