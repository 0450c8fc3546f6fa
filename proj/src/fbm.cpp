#include "fracwave/fbm.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "fracwave/fft.hpp"

namespace fracwave {
namespace {

constexpr double kPi = std::numbers::pi;

void check_h(double H, const char* who) {
  if (!(H > 0.0 && H < 1.0)) {
    std::ostringstream os;
    os << who << ": H=" << H << " outside (0,1)";
    throw std::invalid_argument(os.str());
  }
}

double uniform_spacing(const std::vector<double>& z, const char* who) {
  if (z.size() < 2) {
    throw std::invalid_argument(std::string(who) + ": need >= 2 grid nodes");
  }
  if (std::abs(z.front()) > 1e-12) {
    throw std::invalid_argument(std::string(who) + ": grid must start at 0");
  }
  const double dz = (z.back() - z.front()) / static_cast<double>(z.size() - 1);
  for (std::size_t i = 1; i < z.size(); ++i) {
    if (std::abs(z[i] - z[i - 1] - dz) > 1e-9 * dz) {
      throw std::invalid_argument(std::string(who) + ": grid not uniform");
    }
  }
  return dz;
}

// fGn autocovariance at integer lag j, spacing dz.
double fgn_cov(double H, double dz, std::size_t j) {
  const double jd = static_cast<double>(j);
  const double a = std::pow(std::abs(jd + 1.0), 2.0 * H);
  const double b = std::pow(jd, 2.0 * H);
  const double c = std::pow(std::abs(jd - 1.0), 2.0 * H);
  return 0.5 * std::pow(dz, 2.0 * H) * (a - 2.0 * b + c);
}

Eigen::MatrixXd fbm_covariance(double H, const std::vector<double>& z) {
  // Nodes beyond z = 0 only; the origin row is pinned at 0.
  const std::size_t n = z.size() - 1;
  Eigen::MatrixXd gamma(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double u = z[i + 1];
      const double v = z[j + 1];
      gamma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          0.5 * (std::pow(u, 2.0 * H) + std::pow(v, 2.0 * H) -
                 std::pow(std::abs(u - v), 2.0 * H));
    }
  }
  return gamma;
}

// RMS of r^{1/2-H} over one bin: the bin sum then matches the continuum
// integral of the singular density exactly on every bin.
double bin_rms(double H, double rlo, double rhi) {
  const double p = 2.0 - 2.0 * H;
  return std::sqrt((std::pow(rhi, p) - std::pow(rlo, p)) /
                   (p * (rhi - rlo)));
}

}  // namespace

double spectral_constant(double H) {
  check_h(H, "spectral_constant");
  return H * std::tgamma(2.0 * H) * std::sin(kPi * H) / kPi;
}

SpectralNoise SpectralNoise::restricted(double A_small) const {
  if (!(A_small > 0.0 && A_small <= A * (1.0 + 1e-9))) {
    throw std::invalid_argument("SpectralNoise::restricted: bad radius");
  }
  const std::size_t m =
      static_cast<std::size_t>(std::floor(A_small / dr + 1e-9));
  if (m == 0) {
    throw std::invalid_argument(
        "SpectralNoise::restricted: radius below one bin");
  }
  SpectralNoise out;
  out.A = static_cast<double>(m) * dr;
  out.dr = dr;
  out.w.resize(w.size());
  for (std::size_t n = 0; n < w.size(); ++n) {
    out.w[n].assign(w[n].begin(), w[n].begin() + static_cast<long>(m));
  }
  return out;
}

void SpectralNoise::validate() const {
  if (!(A > 0.0 && dr > 0.0) || w.empty()) {
    throw std::invalid_argument("SpectralNoise: empty or bad grid");
  }
  const std::size_t m = w[0].size();
  if (m == 0 || std::abs(static_cast<double>(m) * dr - A) > 1e-9 * A) {
    throw std::invalid_argument("SpectralNoise: bins do not tile [0, A]");
  }
  for (const auto& mode : w) {
    if (mode.size() != m) {
      throw std::invalid_argument("SpectralNoise: ragged modes");
    }
  }
}

double default_spectral_dr(double A, double z_max) {
  return std::min(kPi / (2.0 * z_max), A / 512.0);
}

SpectralNoise make_spectral_noise(double A, double dr, std::size_t n_modes,
                                  RngStream& rng) {
  if (!(A > 0.0 && dr > 0.0 && n_modes > 0)) {
    throw std::invalid_argument("make_spectral_noise: bad parameters");
  }
  const std::size_t m =
      static_cast<std::size_t>(std::max<long long>(1, std::llround(A / dr)));
  SpectralNoise out;
  out.dr = dr;
  out.A = static_cast<double>(m) * dr;  // exact bin tiling
  out.w.resize(n_modes);
  const double scale = std::sqrt(dr);
  for (std::size_t n = 0; n < n_modes; ++n) {
    out.w[n].resize(m);
    for (std::size_t k = 0; k < m; ++k) {
      out.w[n][k] = scale * rng.normal_complex();
    }
  }
  return out;
}

double fbm_cholesky_residual(double H, const std::vector<double>& z_grid) {
  check_h(H, "fbm_cholesky_residual");
  uniform_spacing(z_grid, "fbm_cholesky_residual");
  const Eigen::MatrixXd gamma = fbm_covariance(H, z_grid);
  Eigen::LLT<Eigen::MatrixXd> llt(gamma);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("fbm_cholesky_residual: factorization failed");
  }
  const Eigen::MatrixXd l = llt.matrixL();
  return (l * l.transpose() - gamma).cwiseAbs().maxCoeff();
}

FieldSample fbm_exact(double H, const std::vector<double>& z_grid,
                      RngStream& rng, bool force_cholesky) {
  check_h(H, "fbm_exact");
  const double dz = uniform_spacing(z_grid, "fbm_exact");
  const std::size_t steps = z_grid.size() - 1;

  std::vector<double> incr;
  std::string method;

  if (!force_cholesky) {
    // Davies-Harte: embed the fGn covariance in a circulant of size m,
    // diagonalize by FFT, and color a Hermitian Gaussian vector.
    const std::size_t m = next_pow2(2 * steps);
    std::vector<std::complex<double>> c(m);
    for (std::size_t j = 0; j < m; ++j) {
      c[j] = fgn_cov(H, dz, std::min(j, m - j));
    }
    fft_pow2(c, false);
    double lmax = 0.0, lmin = 0.0;
    for (const auto& x : c) {
      lmax = std::max(lmax, x.real());
      lmin = std::min(lmin, x.real());
    }
    if (lmin > -1e-9 * lmax) {
      std::vector<std::complex<double>> y(m);
      y[0] = std::sqrt(std::max(0.0, c[0].real())) * rng.normal();
      y[m / 2] = std::sqrt(std::max(0.0, c[m / 2].real())) * rng.normal();
      for (std::size_t k = 1; k < m / 2; ++k) {
        const double s = std::sqrt(std::max(0.0, c[k].real()) * 0.5);
        const std::complex<double> g(rng.normal(), rng.normal());
        y[k] = s * g;
        y[m - k] = std::conj(y[k]);
      }
      fft_pow2(y, false);
      const double norm = 1.0 / std::sqrt(static_cast<double>(m));
      incr.resize(steps);
      for (std::size_t j = 0; j < steps; ++j) {
        incr[j] = norm * y[j].real();
      }
      method = "davies-harte";
    }
  }

  if (incr.empty()) {
    if (steps > 2048) {
      throw std::length_error(
          "fbm_exact: Cholesky fallback limited to 2048 steps");
    }
    const Eigen::MatrixXd gamma = fbm_covariance(H, z_grid);
    Eigen::LLT<Eigen::MatrixXd> llt(gamma);
    if (llt.info() != Eigen::Success) {
      throw std::runtime_error("fbm_exact: covariance not positive definite");
    }
    Eigen::VectorXd g(static_cast<Eigen::Index>(steps));
    for (std::size_t i = 0; i < steps; ++i) {
      g(static_cast<Eigen::Index>(i)) = rng.normal();
    }
    const Eigen::VectorXd path = Eigen::MatrixXd(llt.matrixL()) * g;
    incr.resize(steps);
    for (std::size_t j = 0; j < steps; ++j) {
      incr[j] = path(static_cast<Eigen::Index>(j)) -
                (j == 0 ? 0.0 : path(static_cast<Eigen::Index>(j - 1)));
    }
    method = "cholesky";
  }

  FieldSample out;
  out.z_grid = z_grid;
  out.values.resize(static_cast<Eigen::Index>(z_grid.size()), 1);
  out.values(0, 0) = 0.0;
  double acc = 0.0;
  for (std::size_t j = 0; j < steps; ++j) {
    acc += incr[j];
    out.values(static_cast<Eigen::Index>(j + 1), 0) = acc;
  }
  out.kind = FieldKind::bH_exact;
  std::ostringstream prov;
  prov << "fbm_exact H=" << H << " " << method;
  out.provenance = prov.str();
  return out;
}

FbmPair fbm_spectral(double H, double A, const std::vector<double>& z_grid,
                     const SpectralNoise& noise, std::size_t mode) {
  check_h(H, "fbm_spectral");
  noise.validate();
  if (mode >= noise.n_modes()) {
    throw std::out_of_range("fbm_spectral: mode index");
  }
  if (!(A > 0.0 && A <= noise.A * (1.0 + 1e-9))) {
    throw std::invalid_argument("fbm_spectral: noise does not cover [-A, A]");
  }
  const std::size_t m = static_cast<std::size_t>(
      std::min<double>(static_cast<double>(noise.n_bins()),
                       std::floor(A / noise.dr + 1e-9)));
  const double sqrt_ch = std::sqrt(spectral_constant(H));

  std::vector<std::complex<double>> amp(m);
  for (std::size_t k = 0; k < m; ++k) {
    amp[k] = sqrt_ch * bin_rms(H, noise.r_lo(k), noise.r_hi(k)) *
             noise.w[mode][k];
  }

  const std::size_t nz = z_grid.size();
  FieldSample bfield, dfield;
  bfield.z_grid = z_grid;
  dfield.z_grid = z_grid;
  bfield.values.resize(static_cast<Eigen::Index>(nz), 1);
  dfield.values.resize(static_cast<Eigen::Index>(nz), 1);
  for (std::size_t iz = 0; iz < nz; ++iz) {
    const double z = z_grid[iz];
    // e^{i r_k z} over the bin midpoints by stepping; resync periodically.
    const std::complex<double> step(std::cos(noise.dr * z),
                                    std::sin(noise.dr * z));
    std::complex<double> ph(std::cos(noise.r_mid(0) * z),
                            std::sin(noise.r_mid(0) * z));
    double bsum = 0.0, dsum = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      if (k % 64 == 0) {
        const double rz = noise.r_mid(k) * z;
        ph = {std::cos(rz), std::sin(rz)};
      }
      const double r = noise.r_mid(k);
      const std::complex<double> psi =
          (ph - 1.0) / std::complex<double>(0.0, r);
      bsum += 2.0 * std::real(psi * amp[k]);
      dsum += 2.0 * std::real(ph * amp[k]);
      ph *= step;
    }
    bfield.values(static_cast<Eigen::Index>(iz), 0) = bsum;
    dfield.values(static_cast<Eigen::Index>(iz), 0) = dsum;
  }
  if (std::abs(z_grid.front()) < 1e-300) {
    bfield.values(0, 0) = 0.0;  // psi(r, 0) = 0 identically
  }
  bfield.kind = FieldKind::bH_spectral;
  dfield.kind = FieldKind::bH_derivative;
  std::ostringstream prov;
  prov << "fbm_spectral H=" << H << " A=" << static_cast<double>(m) * noise.dr
       << " dr=" << noise.dr << " mode=" << mode;
  bfield.provenance = prov.str();
  dfield.provenance = prov.str();
  return {std::move(bfield), std::move(dfield)};
}

double spectral_variance(double H, double A, double dr, double t) {
  check_h(H, "spectral_variance");
  const std::size_t m =
      static_cast<std::size_t>(std::max<long long>(1, std::llround(A / dr)));
  const double ch = spectral_constant(H);
  double var = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double rlo = static_cast<double>(k) * dr;
    const double rhi = static_cast<double>(k + 1) * dr;
    const double r = 0.5 * (rlo + rhi);
    const double s = std::sin(0.5 * r * t);
    const double rms = bin_rms(H, rlo, rhi);
    var += 2.0 * ch * (4.0 * s * s / (r * r)) * rms * rms * dr;
  }
  return var;
}

FieldBH field_BH(const KernelEigen& kernel, double H, double A,
                 const std::vector<double>& z_grid,
                 const std::vector<double>& q_list, RngStream& rng) {
  check_h(H, "field_BH");
  if (kernel.rank() == 0) {
    throw std::invalid_argument("field_BH: kernel has no retained modes");
  }
  const double zmax =
      *std::max_element(z_grid.begin(), z_grid.end());
  FieldBH out;
  out.H = H;
  out.A = A;
  out.q_list = q_list;
  out.noise = make_spectral_noise(A, default_spectral_dr(A, std::max(zmax, 1.0)),
                                  kernel.rank(), rng);

  const std::size_t nz = z_grid.size();
  const std::size_t nq = q_list.size();
  Eigen::MatrixXd bmodes(static_cast<Eigen::Index>(nz),
                         static_cast<Eigen::Index>(kernel.rank()));
  Eigen::MatrixXd dmodes(static_cast<Eigen::Index>(nz),
                         static_cast<Eigen::Index>(kernel.rank()));
  for (std::size_t n = 0; n < kernel.rank(); ++n) {
    const FbmPair pair = fbm_spectral(H, out.noise.A, z_grid, out.noise, n);
    bmodes.col(static_cast<Eigen::Index>(n)) = pair.B.values.col(0);
    dmodes.col(static_cast<Eigen::Index>(n)) = pair.b.values.col(0);
  }

  // Coefficients sqrt(beta_n) e_n(|q|): mirror wavevectors evaluate at the
  // same representative, so B(z, q) = B(z, -q) holds bitwise.
  Eigen::MatrixXd coef(static_cast<Eigen::Index>(kernel.rank()),
                       static_cast<Eigen::Index>(nq));
  for (std::size_t j = 0; j < nq; ++j) {
    const double qa = std::abs(q_list[j]);
    for (std::size_t n = 0; n < kernel.rank(); ++n) {
      coef(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(j)) =
          std::sqrt(kernel.eigvals(static_cast<Eigen::Index>(n))) *
          kernel.eval_eigvec(n, qa);
    }
  }

  out.B.z_grid = z_grid;
  out.b.z_grid = z_grid;
  out.B.cols = q_list;
  out.b.cols = q_list;
  out.B.values = bmodes * coef;
  out.b.values = dmodes * coef;
  out.B.kind = FieldKind::bH_spectral;
  out.b.kind = FieldKind::bH_derivative;
  std::ostringstream prov;
  prov << "field_BH H=" << H << " A=" << out.noise.A
       << " rank=" << kernel.rank();
  out.B.provenance = prov.str();
  out.b.provenance = prov.str();
  return out;
}

FieldSample field_WH(const AtomicMeasure& measure, const FieldBH& bh,
                     const std::vector<double>& x_grid, double sigma_H) {
  measure.validate();
  if (bh.q_list.size() != measure.atoms.size()) {
    throw std::invalid_argument("field_WH: atom/sample count mismatch");
  }
  for (std::size_t j = 0; j < bh.q_list.size(); ++j) {
    if (std::abs(bh.q_list[j] - measure.atoms[j].q) > 1e-12) {
      throw std::invalid_argument("field_WH: atom wavevector mismatch");
    }
  }
  const std::size_t nz = bh.B.z_grid.size();
  const std::size_t nx = x_grid.size();
  FieldSample out;
  out.z_grid = bh.B.z_grid;
  out.cols = x_grid;
  out.values.resize(static_cast<Eigen::Index>(nz),
                    static_cast<Eigen::Index>(nx));
  double max_im = 0.0, max_re = 0.0;
  for (std::size_t ix = 0; ix < nx; ++ix) {
    std::vector<std::complex<double>> phase(measure.atoms.size());
    for (std::size_t j = 0; j < measure.atoms.size(); ++j) {
      const Atom& at = measure.atoms[j];
      phase[j] = at.a * at.U *
                 std::complex<double>(std::cos(at.q * x_grid[ix]),
                                      -std::sin(at.q * x_grid[ix]));
    }
    for (std::size_t iz = 0; iz < nz; ++iz) {
      std::complex<double> acc = 0.0;
      for (std::size_t j = 0; j < measure.atoms.size(); ++j) {
        acc += phase[j] * bh.B.values(static_cast<Eigen::Index>(iz),
                                      static_cast<Eigen::Index>(j));
      }
      acc *= sigma_H;
      max_im = std::max(max_im, std::abs(acc.imag()));
      max_re = std::max(max_re, std::abs(acc.real()));
      out.values(static_cast<Eigen::Index>(iz),
                 static_cast<Eigen::Index>(ix)) = acc.real();
    }
  }
  if (max_im > 1e-9 * std::max(1.0, max_re)) {
    throw std::runtime_error("field_WH: symmetric sum left an imaginary part");
  }
  out.kind = FieldKind::wfield;
  out.provenance = "field_WH from " + bh.B.provenance;
  return out;
}

}  // namespace fracwave
