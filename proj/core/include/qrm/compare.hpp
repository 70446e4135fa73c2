#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qrm/lattice.hpp"
#include "qrm/models.hpp"

namespace qrm {

struct ComparisonOptions {
  int n_states = 30;
  // Extra states computed on both sides so that clusters straddling the
  // last compared level are complete.
  int margin = 6;
  int n_points = kDefaultGridPoints;
  // Levels closer than cluster_gap * (E[n_states-1] - E[0]) form a cluster.
  double cluster_gap = 1e-6;
  double cutoff_tol = 1e-9;
  SolverMethod method = SolverMethod::Auto;
  // Worker threads for sweeps; 0 picks the hardware concurrency.
  int threads = 0;
};

struct Matching {
  std::vector<Index> partner;     // th index -> exp index
  std::vector<double> overlap2;   // |<th_n|exp_partner(n)>|^2
  std::vector<double> infidelity; // 1 - subspace fidelity of the cluster of n
  std::vector<int> cluster;       // cluster id per th index
};

// Pairs the lowest n states of two sets sampled on the same position-spin
// grid. Columns are wavefunctions normalized as sum |psi|^2 dx = 1. Energies
// are referenced to their own ground state before clustering; clusters are
// the union of near-degenerate runs in either spectrum, inside which the
// assignment maximizing total overlap^2 is chosen. Throws ValidationError if
// either set has fewer than n states or the shapes disagree.
Matching match_states(const Eigen::VectorXd& e_th, const Eigen::MatrixXcd& psi_th, const Eigen::VectorXd& e_exp,
                      const Eigen::MatrixXcd& psi_exp, double dx, int n, double cluster_gap = 1e-6);

// Optimal assignment for a square cost matrix (minimum total cost).
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

struct StatePair {
  double e_th = 0.0;   // referenced to the ground state, rad/s
  double e_exp = 0.0;  // referenced to the ground state, rad/s
  double overlap2 = 0.0;
  double infidelity = 0.0;
  int cluster = 0;
  bool energy_excluded = false;  // degenerate with the ground state: 0/0
};

struct EnergyDiscrepancy {
  double value = 0.0;
  int terms = 0;
  std::vector<int> excluded;  // indices n >= 1 left out of the sum
};

// (1 / terms) sum_{n=1}^{N-1} |1 - E_exp / E_th| over ground-referenced
// energies. Levels with |E_th| <= zero_tol * (E_th[N-1] - E_th[0]) are
// reported as excluded instead of dividing by (nearly) zero.
EnergyDiscrepancy mean_energy_discrepancy(const std::vector<StatePair>& pairs, double zero_tol = 1e-6);

// (1 / N) sum_n infidelity_n.
double mean_infidelity(const std::vector<StatePair>& pairs);

struct ComparisonReport {
  bool ok = false;
  std::string error;

  int n_states = 0;
  std::vector<StatePair> pairs;
  double delta_E_bar = 0.0;
  double infidelity_bar = 0.0;
  int energy_terms = 0;
  std::vector<int> energy_excluded;

  double target_ratio = 0.0;
  LatticeConfig config;
  EffectiveParams effective;
  ModelParams model;
  int n_points = 0;
  double cutoff_change = 0.0;  // relative energy change at the chosen cutoff
};

// Lattice spectrum of config against the spin-F reference model built from
// its extracted effective parameters, both represented on the site grid.
ComparisonReport compare_point(const LatticeConfig& config, const ComparisonOptions& options = {});

struct SweepSpec {
  LatticeConfig base;          // V0 and B_x are overwritten per point
  std::vector<double> ratios;  // g_eff / omega_eff
  std::vector<double> depths;  // V0 in E_r
  // Resonant omega0 = omega_eff per point unless a fixed B_z is given.
  std::optional<double> Bz;
};

// One report per (depth, ratio), ordered by depth then ratio. Failing points
// carry ok = false and the error message; the sweep continues.
std::vector<ComparisonReport> sweep(const SweepSpec& spec, const ComparisonOptions& options = {});

}  // namespace qrm
