#pragma once

#include <vector>

#include "qrm/eigensolver.hpp"
#include "qrm/operators.hpp"

namespace qrm {

// Parameters of the generalized Rabi Hamiltonian (hbar = 1)
//
//   H = omega a^dag a + omega0 F_z + 2 g (a + a^dag) F_x
//       + g_eps F_x + g2 (a + a^dag)^2 F_x
//
// which is the standard QRM for F = 1/2. Rates may carry any consistent unit
// (rad/s, or a dimensionless scale). g, omega0, g_eps and g2 are signed: the
// magnitude is the physical rate and the sign is the orientation metadata that
// a lattice comparison needs to align eigenvectors.
struct ModelParams {
  double omega = 1.0;
  double g = 0.0;
  double omega0 = 0.0;
  double g_eps = 0.0;
  double g2 = 0.0;
  Spin F;
  int fock_cutoff = 32;

  void validate() const;
  BasisSpec basis() const { return {fock_cutoff, F}; }
};

// omega a^dag a + omega0 F_z + 2 g (a + a^dag) F_x.
OperatorMatrix build_qrm(const ModelParams& p);
// build_qrm + g_eps F_x.
OperatorMatrix build_driven_qrm(const ModelParams& p);

struct QuadraticModel {
  OperatorMatrix hamiltonian;
  // 4 |g2| F >= omega: at least one spin branch is unbounded below in the
  // untruncated model, so truncated spectra depend on the cutoff.
  bool beyond_collapse = false;
};

// build_qrm (linear term kept if g != 0) + g2 (a + a^dag)^2 F_x.
QuadraticModel build_quadratic_qrm(const ModelParams& p);

// Every term present in p; used by the dynamics and cutoff search.
OperatorMatrix build_generalized(const ModelParams& p);

bool beyond_spectral_collapse(const ModelParams& p);

// Dicke model of N two-level systems in the symmetric (F = N/2) subspace:
//   omega a^dag a + omega0 F_z + (2 g / sqrt(N)) (a + a^dag) F_x.
OperatorMatrix build_dicke(int n_atoms, double omega, double omega0, double g, int fock_cutoff);

struct CutoffResult {
  int cutoff = 0;
  double max_rel_change = 0.0;  // between cutoff and 2 * cutoff
  ModelParams params;           // input with fock_cutoff replaced
};

inline constexpr int kMaxFockCutoff = 4096;

// Doubling search: smallest cutoff c in {c0, 2 c0, ...} such that the lowest
// n_states energies of build_generalized move by less than tol (relative to
// max(|E|, omega)) between c and 2c. Throws ConvergenceError past max_cutoff
// or beyond the spectral collapse.
CutoffResult check_cutoff_convergence(const ModelParams& p, int n_states, double tol,
                                      int max_cutoff = kMaxFockCutoff);

// Uniform grid of node positions; x_i = x_min + i dx.
struct PositionGrid {
  double x_min = 0.0;
  double dx = 0.0;
  int n_points = 0;

  double x(int i) const { return x_min + i * dx; }
  double x_max() const { return x(n_points - 1); }
};

struct PositionWavefunction {
  PositionGrid grid;
  Eigen::MatrixXcd amplitudes;  // (grid point, spin index), sum |psi|^2 dx = 1
};

// Harmonic-oscillator eigenfunctions phi_n(x) for x = x0 (a + a^dag) centred
// at x_center, n = 0 .. n_max - 1, evaluated on the grid with a stable
// three-term recurrence (rows: n, cols: grid point). Normalized in the
// continuum, i.e. int |phi_n|^2 dx = 1.
Eigen::MatrixXd hermite_functions(int n_max, const PositionGrid& grid, double x_center, double x0);

inline constexpr double kSynthesisNormTolerance = 1e-8;

// Position-spin representation of Fock-space eigenvectors:
//   psi(x, m) = sum_n c_{n,m} phi_n((x - x_center) / x0).
// Levels above the highest one carrying weight 1e-10 (plus a guard band) are
// dropped. The grid must hold the states: a grid norm outside
// 1 +- kSynthesisNormTolerance raises ValidationError with the extent
// 4 x0 sqrt(n_occ + 1) around x_center as guidance.
std::vector<PositionWavefunction> synthesize_position_states(const BasisSpec& basis, const Spectrum& spectrum,
                                                             double x_center, double x0,
                                                             const PositionGrid& grid);

}  // namespace qrm
