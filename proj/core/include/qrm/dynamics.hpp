#pragma once

#include <variant>
#include <vector>

#include "qrm/lattice.hpp"
#include "qrm/models.hpp"

namespace qrm {

// Lattice Hamiltonian on one site grid; times in s.
struct LatticeSegment {
  LatticeConfig config;
  Grid grid;
};

using SegmentHamiltonian = std::variant<ModelParams, LatticeSegment>;

struct Segment {
  double duration = 0.0;  // s (or 1/[rate] for dimensionless model rates)
  SegmentHamiltonian hamiltonian;
};

// |n> (x) |m_F>, with m_F given by its spin index (0 <-> -F).
struct FockSpinState {
  int n = 0;
  int spin_index = 0;
};
// Ground state of the given Hamiltonian.
struct GroundState {
  SegmentHamiltonian hamiltonian;
};
// Coherent state |alpha> (x) |m_F>; Fock bases only.
struct CoherentState {
  cplx alpha = 0.0;
  int spin_index = 0;
};
// Explicit amplitudes in the segment basis.
struct ExplicitState {
  Eigen::VectorXcd amplitudes;
};

using InitialState = std::variant<FockSpinState, GroundState, CoherentState, ExplicitState>;

struct QuenchProtocol {
  std::vector<Segment> segments;
  InitialState initial;
};

struct EvolutionResult {
  std::vector<double> times;
  Eigen::MatrixXd populations;   // (sample, spin index)
  Eigen::MatrixXd motional;      // (sample, Fock level)
  std::vector<double> fidelity;  // |<psi(0)|psi(t)>|^2
  std::vector<double> parity;    // <Pi>
  std::vector<double> energy;    // <H> of the active segment, rad/s
  std::vector<double> norm;      // <psi|psi>
  Eigen::VectorXcd final_state;
};

// For lattice states the motional distribution is the projection onto
// oscillator eigenfunctions of this frame.
struct MotionalFrame {
  double x_center = 0.0;  // m
  double x0 = 0.0;        // m
  int n_max = 64;
};

// psi(t) = V exp(-i E t rate_scale) V^dagger psi0 from a full
// eigendecomposition. rate_scale converts matrix entries to angular
// frequencies (E_r / hbar for lattice matrices). Throws ValidationError if
// psi0 is not normalized to 1e-10.
EvolutionResult evolve_constant(const OperatorMatrix& h, const Eigen::VectorXcd& psi0, const std::vector<double>& times,
                                double rate_scale = 1.0, const MotionalFrame& frame = {});

// Segment-wise exact evolution sampled at t_k = k / sample_rate over the
// total duration (the end time is always included). Errors raised while
// building a segment are rethrown with the segment index.
EvolutionResult run_protocol(const QuenchProtocol& protocol, double sample_rate);

struct RampResult {
  EvolutionResult evolution;  // sampled at the n_steps + 1 step boundaries
  double final_overlap = 0.0; // |<gs(to)|psi(T)>|^2
  double spin_entropy = 0.0;  // von Neumann entropy (nats) of the spin state at T
};

// Starts in the ground state of `from` and evolves through n_steps
// piecewise-constant Hamiltonians whose parameters are linearly interpolated
// at the step midpoints. F and the Fock cutoff must agree.
RampResult adiabatic_ramp(const ModelParams& from, const ModelParams& to, double total_time, int n_steps);

// Reduced spin density matrix and its entropy for a Fock (x) spin state.
Eigen::MatrixXcd reduced_spin_density(const BasisSpec& basis, const Eigen::VectorXcd& psi);
double spin_entropy(const BasisSpec& basis, const Eigen::VectorXcd& psi);

// Normalized initial state for a basis; GroundState solves its Hamiltonian.
Eigen::VectorXcd prepare_state(const InitialState& initial, const BasisTag& basis);

}  // namespace qrm
