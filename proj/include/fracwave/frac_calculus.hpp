#pragma once

#include <complex>
#include <vector>

namespace fracwave {

// Path sampled on a strictly increasing grid starting at 0; evaluation is
// piecewise-linear. All fractional operators below integrate the interpolant
// exactly per cell, so singular kernels never see raw quadrature.
struct SampledPath {
  std::vector<double> z;
  std::vector<double> v;

  double L() const { return z.back(); }
  double operator()(double u) const;
  std::size_t cell_of(double u) const;
  void validate() const;  // throws on bad grids
};

// Left Weyl-Marchaud derivative D^alpha_{0+} f at z in (0, L], alpha in (0,1).
double weyl_left(const SampledPath& f, double alpha, double z);

struct WeylRightValue {
  // Real-convention value: the (-1)^alpha phase dropped.
  double real_convention;
  // Complex-phased value e^{i pi alpha} * real_convention (principal branch).
  std::complex<double> phased;
};

// Right Weyl-Marchaud derivative of g_{L-} = g - g(L) at z in [0, L).
WeylRightValue weyl_right(const SampledPath& g, double alpha, double z);

// As above but with right endpoint zcap <= L playing the role of L
// (the D^{1-alpha}_{z-} g_{z-} operator entering lambda_alpha).
WeylRightValue weyl_right_capped(const SampledPath& g, double alpha, double u,
                                 double zcap);

// Pathwise (generalized Stieltjes) integral int_0^L f dg; the branch is
// pinned by requiring f == 1 to return g(L) - g(0):
//   int f dg = - int_0^L D^alpha_{0+} f (u) * D^{1-alpha}_{L-} g_{L-}(u) du
// with real-convention operators. Throws a roughness error when grid
// refinement disagrees (integrand too rough for this alpha).
double stieltjes_integral(const SampledPath& f, const SampledPath& g,
                          double alpha);

// Same driver path g for complex-valued f given as two real paths.
std::complex<double> stieltjes_integral(const SampledPath& f_re,
                                        const SampledPath& f_im,
                                        const SampledPath& g, double alpha);

// int_{z_lo}^{z_hi} f dg computed as int_0^L f * 1_(z_lo, z_hi) dg; the
// windowed integrand keeps the full memory kernel, it does not restrict the
// paths. stieltjes_prefix is the z_lo = 0 case.
double stieltjes_window(const SampledPath& f, const SampledPath& g,
                        double alpha, double z_lo, double z_hi);
double stieltjes_prefix(const SampledPath& f, const SampledPath& g,
                        double alpha, double z);

// Lambda_alpha(g) = (1/(Gamma(1-alpha)Gamma(alpha))) sup_{0<u<z<L}
// |D^{1-alpha}_{z-} g_{z-}(u)|, sup over (thinned) grid pairs.
double lambda_alpha(const SampledPath& g, double alpha);

struct PathNorms {
  double walpha_norm;    // sup_z [|f(z)| + int_0^z |f(z)-f(u)|/(z-u)^{a+1} du]
  double holder_norm;    // sup |f| + sup |increment| / dz^beta
  double holder_constant_estimate;  // Garsia-type Z for exponent beta (p = 8)
};
PathNorms norms(const SampledPath& path, double alpha, double beta);

// ||f||_{alpha,1} = int_0^L (|f(u)|/u^alpha
//                            + int_0^u |f(u)-f(v)|/(u-v)^{alpha+1} dv) du.
double norm_alpha_l1(const SampledPath& f, double alpha);

// Log-log regression of the mean-square increment over dyadic lags; returns
// the estimated Holder exponent. Diagnostic only, never gates a result.
double holder_exponent_estimate(const SampledPath& f);

}  // namespace fracwave
