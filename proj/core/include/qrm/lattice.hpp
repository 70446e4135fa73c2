#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "qrm/eigensolver.hpp"
#include "qrm/models.hpp"
#include "qrm/operators.hpp"
#include "qrm/units.hpp"

namespace qrm {

// Trapping lattice wavelength over coupling lattice wavelength:
// LinThetaLin 1, TwoLattice2to1 2, TwoLattice3to2 3/2.
enum class LatticeGeometry { LinThetaLin, TwoLattice2to1, TwoLattice3to2 };

std::string_view to_string(LatticeGeometry g);
LatticeGeometry geometry_from_string(std::string_view name);
double wavelength_ratio(LatticeGeometry g);

// Single-atom lattice Hamiltonian
//   H = p^2 / 2M + (V0 / 2)(1 - cos 2 k_t x)
//       + g_F mu_B [(B_x sin(2 k_c x + phase) + eps) F_x + B_z F_z].
struct LatticeConfig {
  AtomSpecies species;
  double lambda_t = 0.0;  // m
  double lambda_c = 0.0;  // m
  double V0 = 0.0;        // units of E_r
  double Bx = 0.0;        // T
  double Bz = 0.0;        // T
  double eps = 0.0;       // T
  double phase = 0.0;     // rad
  LatticeGeometry configuration = LatticeGeometry::LinThetaLin;

  void validate() const;
  double k_t() const { return 2.0 * constants::pi / lambda_t; }
  double k_c() const { return 2.0 * constants::pi / lambda_c; }
  double recoil_energy() const { return qrm::recoil_energy(lambda_t, species); }
  // Zeeman energy of one unit of F_x per tesla, in E_r.
  double zeeman_per_tesla() const;
};

// Cell-centred uniform grid on [x_min, x_max]: x_i = x_min + (i + 1/2) dx,
// dx = (x_max - x_min) / n_points, wavefunction zero outside.
struct Grid {
  double x_min = 0.0;  // m
  double x_max = 0.0;  // m
  int n_points = 2048;

  void validate() const;
  double dx() const { return (x_max - x_min) / n_points; }
  double x(int i) const { return x_min + (i + 0.5) * dx(); }
  PositionGrid nodes() const { return {x(0), dx(), n_points}; }

  // The trapping site centred at site * lambda_t / 2, bounded by the two
  // neighbouring maxima of the trap.
  static Grid site(const LatticeConfig& config, int n_points = 2048, int site = 0);
};

inline constexpr int kDefaultGridPoints = 2048;

struct PotentialSample {
  double scalar = 0.0;   // J
  double field_x = 0.0;  // T, fictitious field plus eps
};

PotentialSample potential_profile(const LatticeConfig& config, double x);

// Real symmetric banded matrix of dimension n_points (2F+1) in the
// position-major GridSpinBasis. Energies are in units of E_r. Throws
// ValidationError unless the grid spans exactly one trapping site.
OperatorMatrix build_lattice_hamiltonian(const LatticeConfig& config, const Grid& grid);

// Lower bound on the spectrum of build_lattice_hamiltonian: the kinetic
// term is positive semi-definite, so min over nodes of the lowest local
// potential-plus-Zeeman eigenvalue bounds every eigenvalue from below.
double lattice_spectral_lower_bound(const LatticeConfig& config, const Grid& grid);

struct LatticeSpectrum {
  Spectrum spectrum;           // energies in E_r, discrete-normalized vectors
  GridSpinBasis basis;         // node positions in m
  double recoil_energy = 0.0;  // J

  // Eigenvectors scaled to sum |psi|^2 dx = 1 (dx in m).
  Eigen::MatrixXcd wavefunctions() const;
  // Energies in rad/s.
  Eigen::VectorXd angular_energies() const;
};

LatticeSpectrum lattice_spectrum(const LatticeConfig& config, const Grid& grid, int n_states,
                                 SolverMethod method = SolverMethod::Auto);

struct EffectiveParams {
  double omega_eff = 0.0;  // rad/s
  double g_eff = 0.0;      // rad/s
  double x_star = 0.0;     // m, branch minimum measured from the site centre
  double curvature = 0.0;  // J/m^2
  double branch = 0.0;     // m_F of the stretched high-field seeking state
  double x0_eff = 0.0;     // m
  // Orientation of the linear coupling in the spin-F reference model,
  // sign(g_F B_x cos(phase)); +1 when the coupling vanishes.
  int g_sign = 1;

  double ratio() const { return g_eff / omega_eff; }
};

// Effective oscillator of the stretched branch m_F = -F sign(g_F B_x) with
// B_z = 0: V_branch = V_trap + g_F mu_B B_fict m_F. The minimum x* is located
// by bisection on V' (tolerance 1e-12 lambda_t) starting downhill from the
// site centre; omega_eff = sqrt(V''(x*) / M) from the closed-form second
// derivative, g_eff = |x*| omega_eff / (4 F x0_eff).
// Throws DomainError if the branch has no interior minimum in the site.
EffectiveParams extract_effective_params(const LatticeConfig& config, int site = 0);

// Field amplitude |B_x| (carrying the sign of config.Bx, + if zero) for which
// extract_effective_params gives g_eff = g_target (1e-3 relative or better).
// Throws DomainError naming the largest reachable g_eff if out of range.
double amplitude_for_target_g(const LatticeConfig& config, double g_target);
// Same for the ratio g_eff / omega_eff.
double amplitude_for_target_ratio(const LatticeConfig& config, double ratio);

struct SiteMinimum {
  double x = 0.0;  // m
  int g_sign = 1;  // sign of dB_fict/dx at the minimum (+1 if it vanishes)
};

std::vector<SiteMinimum> site_minima(const LatticeConfig& config, int n_sites);

// Quadratic coupling at a field extremum (phase = pi/2): g2 from the field
// curvature b_xx = d^2 B_fict / dx^2 at the site centre and the bare trap
// oscillator length.
struct QuadraticParams {
  double omega = 0.0;  // rad/s, bare trap
  double x0 = 0.0;     // m
  double bxx = 0.0;    // T/m^2
  SignedRate g2;       // rad/s
};

QuadraticParams extract_quadratic_params(const LatticeConfig& config);

// Fock-space model with the extracted parameters and the lattice's spin
// orientation: omega = omega_eff, g = g_sign g_eff, omega0 = g_F mu_B B_z / hbar,
// g_eps = g_F mu_B eps / hbar (all rad/s).
ModelParams reference_model(const LatticeConfig& config, const EffectiveParams& eff, int fock_cutoff);

}  // namespace qrm
