#pragma once

// Independent reference computations for the tests. Everything here is built
// from plain Eigen matrices, not from the library's operator builders.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "qrm/eigensolver.hpp"
#include "qrm/models.hpp"

namespace oracle {

inline Eigen::MatrixXd annihilation(int cutoff) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(cutoff, cutoff);
  for (int n = 1; n < cutoff; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

inline Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// N explicit qubits and one mode:
//   omega a^dag a + (omega0 / 2) sum sigma_z + (g / sqrt N)(a + a^dag) sum sigma_x,
// restricted to the permutation-symmetric subspace (Dicke states built as
// normalized sums over computational basis states of fixed excitation).
inline Eigen::VectorXd symmetric_dicke_spectrum(int n_atoms, double omega, double omega0, double g, int cutoff) {
  const int q = 1 << n_atoms;
  Eigen::MatrixXd sz_sum = Eigen::MatrixXd::Zero(q, q), sx_sum = Eigen::MatrixXd::Zero(q, q);
  for (int b = 0; b < q; ++b) {
    for (int k = 0; k < n_atoms; ++k) {
      sz_sum(b, b) += (b >> k & 1) ? 1.0 : -1.0;
      sx_sum(b ^ (1 << k), b) += 1.0;
    }
  }
  Eigen::MatrixXd sym = Eigen::MatrixXd::Zero(q, n_atoms + 1);
  for (int b = 0; b < q; ++b) sym(b, __builtin_popcount(static_cast<unsigned>(b))) = 1.0;
  for (int e = 0; e <= n_atoms; ++e) sym.col(e).normalize();

  const Eigen::MatrixXd a = annihilation(cutoff);
  const Eigen::MatrixXd num = a.transpose() * a, x = a + a.transpose();
  const Eigen::MatrixXd spin_z = sym.transpose() * sz_sum * sym, spin_x = sym.transpose() * sx_sum * sym;
  const Eigen::MatrixXd id_s = Eigen::MatrixXd::Identity(n_atoms + 1, n_atoms + 1);
  const Eigen::MatrixXd id_f = Eigen::MatrixXd::Identity(cutoff, cutoff);
  const Eigen::MatrixXd h = omega * kron(num, id_s) + 0.5 * omega0 * kron(id_f, spin_z) +
                            g / std::sqrt(static_cast<double>(n_atoms)) * kron(x, spin_x);
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(h, Eigen::EigenvaluesOnly).eigenvalues();
}

// Library spectrum of the quadratic model (F = 1/2, omega0 = 0) split into
// the F_x = +1/2 and F_x = -1/2 sectors by the expectation of an
// independently built F_x. The cutoff is grown until the requested levels
// are converged.
struct BranchSpectra {
  Eigen::VectorXd upper;  // branch with + g2
  Eigen::VectorXd lower;  // soft branch
};

inline BranchSpectra quadratic_branches(qrm::ModelParams p, int levels) {
  const qrm::CutoffResult cut = qrm::check_cutoff_convergence(p, 2 * levels + 8, 1e-11);
  p = cut.params;
  const qrm::Spectrum s = qrm::hermitian_eigensolve(qrm::build_generalized(p));
  Eigen::MatrixXd fx(2, 2);
  fx << 0.0, 0.5, 0.5, 0.0;
  const Eigen::MatrixXcd big = kron(Eigen::MatrixXd::Identity(p.fock_cutoff, p.fock_cutoff), fx).cast<std::complex<double>>();
  std::vector<double> up, down;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double m = (s.states.col(i).adjoint() * big * s.states.col(i))(0).real();
    (m * p.g2 > 0 ? up : down).push_back(s.energies(i));
    if (static_cast<int>(up.size()) > levels && static_cast<int>(down.size()) > levels) break;
  }
  BranchSpectra out;
  out.upper = Eigen::Map<Eigen::VectorXd>(up.data(), static_cast<Eigen::Index>(up.size()));
  out.lower = Eigen::Map<Eigen::VectorXd>(down.data(), static_cast<Eigen::Index>(down.size()));
  return out;
}

// Deep-lattice asymptotics for -psi'' + V0 sin^2(u) psi = E psi (energies in
// E_r): E_n = (2n+1) sqrt(V0) - ((2n+1)^2 + 1) / 8 + O(V0^{-1/2}).
inline double deep_lattice_level(int n, double V0) {
  const double k = 2.0 * n + 1.0;
  return k * std::sqrt(V0) - (k * k + 1.0) / 8.0;
}

// Bound on the first neglected term, (k^3 + 3k) / (2^7 sqrt(V0 / 4)) with k = 2n+1.
inline double deep_lattice_error(int n, double V0) {
  const double k = 2.0 * n + 1.0;
  return (k * k * k + 3.0 * k) / (128.0 * std::sqrt(V0 / 4.0));
}

}  // namespace oracle
