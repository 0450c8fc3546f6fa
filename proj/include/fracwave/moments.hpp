#pragma once
// Moment calculus for the scattering series. Three routes to the same
// asymptotic objects, kept independent so they can cross-check each other:
// the Gaussian-pairing limit functional on the ordered simplex, empirical
// scaled moments over medium replicas, and Wick expectations of Born terms
// over the spectral noise.

#include <Eigen/Dense>
#include <complex>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "fracwave/medium.hpp"
#include "fracwave/rng.hpp"
#include "fracwave/solver.hpp"
#include "fracwave/special_fn.hpp"

namespace fracwave {

// One pairing of {0,...,n-1}: n/2 couples (alpha, beta) with alpha < beta
// and every index used exactly once.
struct Pairing {
  std::vector<std::pair<int, int>> pairs;
};

struct PairingSet {
  std::vector<Pairing> pairings;
  bool zero_moment = false;  // odd n: the moment vanishes by symmetry
};

// All (n-1)!! pairings in deterministic order: the smallest free index is
// coupled with each larger partner in turn. Odd n returns an empty set
// flagged zero_moment; n > 12 is refused (combinatorial budget).
PairingSet enumerate_pairings(std::size_t n);

struct MomentEstimate {
  double value = 0.0;
  double stderr_ = 0.0;   // zero when the evaluation is exact
  std::size_t draws = 0;  // MC draws or replicas behind the estimate
};

// Pairing functional on the decreasing simplex z >= u_1 >= ... >= u_n >= 0:
//   C^{n/2} sum_F int_{Delta_n(z)} prod_{(a,b) in F} rhat(a,b)
//          |u_a - u_b|^{-h} weight(u) du,      C = c_frak * theta1^2.
// With a null weight (unit) the cube identity factorizes the integral over
// the couples and the value is exact, stderr 0. Otherwise Monte Carlo:
// every couple draws from the matched density |u-v|^{-h}/Z on the square,
// the singular factors cancel against the density, and only the weight,
// read on the descending rearrangement of u, is averaged. Sampling stops
// when the standard error reaches tol; exhausting max_draws first raises a
// budget error that reports the achieved stderr.
MomentEstimate pairing_moment(
    std::size_t n, const LongRangeLaw& law, const Eigen::MatrixXd& rhat,
    double z, const std::function<double(const std::vector<double>&)>& weight,
    RngStream& rng, double theta1 = 1.0, double tol = 1e-4,
    std::size_t max_draws = 2000000);

// Scaled empirical moment at finite epsilon:
//   eps^{-n h/2} int_{Delta_n(z)} prod_j Theta(B(u_j / eps)) du
// per replica, averaged over the ensemble with its standard error. All
// factors share one transverse representative (the limit is uniform in the
// p_j; spot checks fix one), so the iterated integral collapses to
// (eps int_0^{z/eps} Theta(B))^n / n!. Replicas are bfrak paths whose grid
// reaches z/eps; column 0 is read.
MomentEstimate mc_medium_moment(const std::vector<FieldSample>& replicas,
                                std::size_t n, double epsilon, double z,
                                const ThetaSpec& theta,
                                const LongRangeLaw& law);

struct MomentSpec {
  std::size_t m1 = 1;               // unconjugated factors
  std::size_t m2 = 0;               // conjugated factors
  std::vector<double> frequencies;  // per factor; empty means "caller's"
  std::function<std::complex<double>(double)> phi;  // test function of kappa
  std::size_t n_max = 4;            // Born truncation of the expectation

  void validate() const;  // m1 + m2 >= 1, phi set, n_max <= 12
};

// Pair kernel of the synthesized derivative field, scaled by sigma_H^2 so
// it is exactly the quantity Wick pairings multiply:
//   sigma_H^2 E[b(u,q) b(v,q')] = pair_kernel_A(tc, A, dr, u-v) R(q,q').
// Evaluated as the binned truncated spectral integral
//   2 sigma_H^2 C_H sum_k cos(r_k d) int_bin r^{1-2H} dr
// over the same bin tiling the sampler uses, so the kernel matches the
// realized field with no quadrature gap; its A -> infinity, dr -> 0 limit
// is C_frak |d|^{-(2-2H)}.
double pair_kernel_A(const ThetaConstants& tc, double A, double dr,
                     double delta);

// Expectation E<X^A(z), phi> truncated at Born order spec.n_max, with
// <X, phi> = sum_kappa X(kappa) conj(phi(kappa)) dk on the lattice of phi0.
// Odd orders vanish; each even order n is the Isserlis pairing of the n
// noise factors,
//   (i k)^n sum_words prod_m (a U)_m  sum_F prod_{(a,b) in F}
//     R(|q_a|,|q_b|) int_{Delta_n} prod_F pair_kernel_A(u_a - u_b)
//     e^{i G_n(u; kappa, word)} phi0(kappa - sum q) du,
// integrated by iterated Gauss-Legendre on the simplex. Only single-factor
// moments are wired (m1 + m2 == 1); products of factors would pair across
// factors and are not needed by any check here. A total order above 12 is
// a budget error.
std::complex<double> wick_moment_XA(const MomentSpec& spec,
                                    const AtomicMeasure& measure,
                                    const KernelEigen& kernel,
                                    const WaveField& phi0, double z, double A,
                                    double dr, const ThetaConstants& tc);

}  // namespace fracwave
