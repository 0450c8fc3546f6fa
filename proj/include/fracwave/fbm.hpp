#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "fracwave/medium.hpp"
#include "fracwave/rng.hpp"

namespace fracwave {

// C_H = H Gamma(2H) sin(pi H) / pi, the spectral normalization under which
// C_H int |e^{irt}-1|^2 |r|^{-1-2H} dr = t^{2H}.
double spectral_constant(double H);

// Complex Gaussian spectral increments on the symmetric grid [-A, A] with
// Hermitian symmetry w(-r) = conj(w(r)); only the positive bins are stored.
// Bin k covers ((k) dr, (k+1) dr], E|w_k|^2 = dr. The r = 0 bin does not
// exist by construction.
struct SpectralNoise {
  double A = 0.0;
  double dr = 0.0;
  std::vector<std::vector<std::complex<double>>> w;  // [mode][bin]

  std::size_t n_modes() const { return w.size(); }
  std::size_t n_bins() const { return w.empty() ? 0 : w[0].size(); }
  double r_lo(std::size_t k) const { return static_cast<double>(k) * dr; }
  double r_hi(std::size_t k) const { return static_cast<double>(k + 1) * dr; }
  double r_mid(std::size_t k) const {
    return (static_cast<double>(k) + 0.5) * dr;
  }
  // Prefix of the bins with r <= A_small; exact nesting by construction.
  SpectralNoise restricted(double A_small) const;
  void validate() const;
};

double default_spectral_dr(double A, double z_max);

SpectralNoise make_spectral_noise(double A, double dr, std::size_t n_modes,
                                  RngStream& rng);

// Exact-law fBm on a uniform grid via circulant embedding of fractional
// Gaussian noise; Cholesky fallback for grids <= 2048 nodes.
FieldSample fbm_exact(double H, const std::vector<double>& z_grid,
                      RngStream& rng, bool force_cholesky = false);

// max |L L^T - Gamma| for the fallback factorization on this grid.
double fbm_cholesky_residual(double H, const std::vector<double>& z_grid);

struct FbmPair {
  FieldSample B;  // B^A, B^A(0) = 0 exactly
  FieldSample b;  // derivative b^A, the exact z-derivative of B^A
};

// Band-limited fBm from one noise mode:
//   B^A(u) = C_H^{1/2} sum_r (e^{iru}-1)/(ir) |r|^{1/2-H} w(r),
//   b^A(u) = C_H^{1/2} sum_r e^{iru} |r|^{1/2-H} w(r),
// summed over the symmetric grid as 2 Re(.) over positive bins. The singular
// factor |r|^{1/2-H} enters through its per-bin root mean square so the bin
// sum reproduces the continuum variance integral exactly on each bin.
FbmPair fbm_spectral(double H, double A, const std::vector<double>& z_grid,
                     const SpectralNoise& noise, std::size_t mode = 0);

// Deterministic E[B^A(t)^2] for the bin rule above (no sampling).
double spectral_variance(double H, double A, double dr, double t);

// Infinite-dimensional regularized field on the kernel eigenbasis:
// B_H^A(z, q) = sum_n sqrt(beta_n) e_n(q) W_{H,n}^A(z) with one independent
// noise mode per retained eigenvector. Mirror wavevectors share the
// representative's value so the field is even in q. The noise is retained
// for coupled reuse by the solver.
struct FieldBH {
  FieldSample B;
  FieldSample b;
  SpectralNoise noise;
  std::vector<double> q_list;
  double H = 0.0;
  double A = 0.0;
};

FieldBH field_BH(const KernelEigen& kernel, double H, double A,
                 const std::vector<double>& z_grid,
                 const std::vector<double>& q_list, RngStream& rng);

// W_H^A(z, x) = sigma_H sum_atoms a U e^{-iqx} B_H^A(z, q); real output.
FieldSample field_WH(const AtomicMeasure& measure, const FieldBH& bh,
                     const std::vector<double>& x_grid, double sigma_H);

}  // namespace fracwave
