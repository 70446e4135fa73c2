#pragma once

#include <optional>
#include <vector>

#include "qrm/operators.hpp"

namespace qrm {

struct Spectrum {
  Eigen::VectorXd energies;   // ascending
  Eigen::MatrixXcd states;    // orthonormal columns, gauge-fixed
  Eigen::VectorXd residuals;  // ||H v - E v|| per pair
  double norm_bound = 0.0;    // upper bound on ||H||_2 used for the contracts

  Index size() const { return energies.size(); }
  double orthonormality_defect() const;
  double max_residual() const;
  // Groups of consecutive indices whose neighbouring gaps are below
  // rel_gap * (E_max - E_min).
  std::vector<std::vector<Index>> clusters(double rel_gap = 1e-9) const;
};

enum class SolverMethod { Auto, Dense, Partial };

struct EigenOptions {
  std::optional<Index> count;      // lowest k pairs; all when empty
  SolverMethod method = SolverMethod::Auto;
  // Partial path: spectral lower bound used as the shift-invert pole. The
  // shifted matrix must be positive definite; Gershgorin bound by default.
  std::optional<double> shift;
  int block_size = 8;
  Index max_basis = 0;             // 0: chosen from count and block size
  double tolerance = 1e-11;        // residual target relative to norm_bound
};

// Contracts checked on every solve (ConvergenceError if violated).
inline constexpr double kOrthonormalityBound = 1e-10;
inline constexpr double kResidualBound = 1e-10;

// Lowest eigenpairs of a Hermitian operator. Dense matrices go through a
// tridiagonal QR solver (real arithmetic when the matrix is real). Banded
// matrices with a partial request use shift-invert block Lanczos with full
// reorthogonalization. Each eigenvector is phased so that its largest entry is
// real and positive.
Spectrum hermitian_eigensolve(const OperatorMatrix& h, const EigenOptions& options = {});
Spectrum hermitian_eigensolve(const OperatorMatrix& h, Index count);

// Throws ConvergenceError if the residual or orthonormality bounds fail.
void check_spectrum_contracts(const Spectrum& spectrum);

}  // namespace qrm
