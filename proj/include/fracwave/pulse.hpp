#pragma once

#include <string>
#include <vector>

#include "fracwave/solver.hpp"

#include <Eigen/Dense>

namespace fracwave {

struct OmegaNode {
  double omega = 0.0;
  double weight = 0.0;
};

// Two mirrored frequency bands [-hi, -lo] and [lo, hi] outside the spectral
// gap (-omega_c, omega_c), quadratured by composite Gauss-Legendre with
// `panels` panels of `order` nodes per band.
struct PulseBand {
  double omega_c = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t panels = 1;
  std::size_t order = 12;

  void validate() const;
  std::size_t n_nodes() const { return 2 * panels * order; }
  // All nodes ascending in omega; the negative band is the exact mirror of
  // the positive one (same weights), so node i and node n-1-i pair up.
  std::vector<OmegaNode> nodes() const;

  // Panel count from the phase budget: a panel of width w contributes at
  // most w * t_abs_max radians to e^{-i omega t}, kept below order/2 per
  // panel so the rule stays spectrally accurate on the whole time window.
  static PulseBand for_window(double omega_c, double lo, double hi,
                              double t_abs_max, std::size_t order = 12);
};

// Transmitted pulse p(t, x) on a uniform time/space grid, real by the
// conjugate symmetry of the per-frequency fields.
struct PulseField {
  std::vector<double> t_grid;
  std::vector<double> x_grid;
  Eigen::MatrixXd values;  // rows t, cols x
  PulseBand band;
  std::string provenance;

  // Riemann energy sum |p|^2 dt dx over the stored window.
  double energy() const;
  void validate() const;
};

// Support scan of fhat0 over [-omega_max, omega_max] (n_omega odd so the
// probe set is exactly symmetric) at the given transverse probes. Verifies
// evenness in omega and emptiness of the gap (-omega_c, omega_c); throws a
// configuration error naming the offending frequency otherwise, or when the
// band reaches the probe boundary. Returns the detected band edges.
struct BandReport {
  double omega_lo = 0.0;
  double omega_hi = 0.0;
  double peak = 0.0;      // max |fhat0| over the probe set
  double asym = 0.0;      // worst |fhat0(w) - fhat0(-w)| relative to peak
  std::size_t n_omega = 0;
  std::string provenance;
};

BandReport band_check(const SourceSpec& src, double omega_max,
                      std::size_t n_omega = 513,
                      const std::vector<double>& kappa_probes = {
                          0.0, 0.5, 1.0, 2.0, 4.0});

// Mirror partner at -omega: values conjugated and reflected in kappa, which
// is the symmetry a real source and a real medium propagate.
WaveField mirror_field(const WaveField& field);

// p(t, x) = sum_i w_i e^{-i omega_i t} sum_j e^{-i kappa_j x}
//           Psi_{omega_i}(L, kappa_j) dk,
// assembled as 2 Re(positive-band sum) after checking each mirrored pair for
// conjugate consistency, so the output is real by construction. One field
// per quadrature node, matched by omega; the last stored slice of each field
// is used. Missing or unmatched frequencies are a quadrature error listing
// the nodes.
PulseField synthesize_pulse(const PulseBand& band,
                            const std::vector<WaveField>& fields,
                            const std::vector<double>& t_grid,
                            const std::vector<double>& x_grid);

}  // namespace fracwave
