#include <gtest/gtest.h>

#include <random>

#include "qrm/eigensolver.hpp"
#include "qrm/errors.hpp"

using namespace qrm;

namespace {

Eigen::MatrixXcd random_hermitian(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  Eigen::MatrixXcd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = cplx(d(rng), d(rng));
  return 0.5 * (m + m.adjoint());
}

// Discretized -d^2/dx^2 + x^2 on a uniform grid, with a spin-like
// two-component coupling to give the matrix a bandwidth > 1.
BandedSymmetric banded_oscillator(int n, double dx) {
  BandedSymmetric b(2 * n, 3);
  for (int i = 0; i < n; ++i) {
    const double x = (i - 0.5 * (n - 1)) * dx;
    for (int s = 0; s < 2; ++s) {
      const Index k = 2 * i + s;
      b.lower(k, k) = 2.0 / (dx * dx) + x * x + (s ? 0.3 : -0.3);
      if (i + 1 < n) b.lower(k + 2, k) = -1.0 / (dx * dx);
    }
    b.lower(2 * i + 1, 2 * i) = 0.2 * x;
  }
  return b;
}

}  // namespace

TEST(Eigensolver, DiagonalMatrix) {
  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(5, 5);
  const double values[] = {3.0, -1.0, 2.5, 0.0, 7.0};
  for (int i = 0; i < 5; ++i) d(i, i) = values[i];
  const Spectrum s = hermitian_eigensolve(OperatorMatrix(d, NoBasis{}, true));
  const double sorted[] = {-1.0, 0.0, 2.5, 3.0, 7.0};
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(s.energies(i), sorted[i], 1e-14);
}

TEST(Eigensolver, PauliX) {
  Eigen::MatrixXcd sx(2, 2);
  sx << 0, 1, 1, 0;
  const Spectrum s = hermitian_eigensolve(OperatorMatrix(sx, NoBasis{}, true));
  EXPECT_NEAR(s.energies(0), -1.0, 1e-15);
  EXPECT_NEAR(s.energies(1), 1.0, 1e-15);
}

TEST(Eigensolver, RandomReconstruction) {
  const Eigen::MatrixXcd h = random_hermitian(50, 42);
  const Spectrum s = hermitian_eigensolve(OperatorMatrix(h, NoBasis{}, true));
  const Eigen::MatrixXcd rebuilt = s.states * s.energies.asDiagonal() * s.states.adjoint();
  EXPECT_LT((rebuilt - h).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE(s.orthonormality_defect(), kOrthonormalityBound);
  EXPECT_LE(s.max_residual(), kResidualBound * s.norm_bound);
  for (Index i = 1; i < s.size(); ++i) EXPECT_LE(s.energies(i - 1), s.energies(i));
  EXPECT_NO_THROW(check_spectrum_contracts(s));
}

TEST(Eigensolver, GaugeLargestEntryRealPositive) {
  const Eigen::MatrixXcd h = random_hermitian(20, 5);
  const Spectrum s = hermitian_eigensolve(OperatorMatrix(h, NoBasis{}, true));
  for (Index k = 0; k < s.size(); ++k) {
    Index imax = 0;
    s.states.col(k).cwiseAbs().maxCoeff(&imax);
    EXPECT_GT(s.states(imax, k).real(), 0.0);
    EXPECT_NEAR(s.states(imax, k).imag(), 0.0, 1e-14);
  }
  // Deterministic: a second solve gives identical vectors.
  const Spectrum again = hermitian_eigensolve(OperatorMatrix(h, NoBasis{}, true));
  EXPECT_EQ((again.states - s.states).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Eigensolver, CountTruncates) {
  const Eigen::MatrixXcd h = random_hermitian(30, 9);
  const Spectrum all = hermitian_eigensolve(OperatorMatrix(h, NoBasis{}, true));
  const Spectrum few = hermitian_eigensolve(OperatorMatrix(h, NoBasis{}, true), Index{4});
  ASSERT_EQ(few.size(), 4);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(few.energies(i), all.energies(i), 1e-12);
  EXPECT_THROW(hermitian_eigensolve(OperatorMatrix(h, NoBasis{}, true), Index{31}), ValidationError);
}

TEST(Eigensolver, PartialMatchesDenseOnBanded) {
  const BandedSymmetric b = banded_oscillator(600, 0.03);
  const OperatorMatrix op(b);
  EigenOptions dense;
  dense.count = 24;
  dense.method = SolverMethod::Dense;
  EigenOptions partial = dense;
  partial.method = SolverMethod::Partial;
  const Spectrum sd = hermitian_eigensolve(op, dense);
  const Spectrum sp = hermitian_eigensolve(op, partial);
  ASSERT_EQ(sp.size(), 24);
  EXPECT_LT((sd.energies - sp.energies).cwiseAbs().maxCoeff(), 1e-9 * sd.norm_bound);
  EXPECT_NO_THROW(check_spectrum_contracts(sp));
  // Same gauge convention on both paths (non-degenerate levels).
  for (Index k = 0; k < 24; ++k) {
    const double overlap = std::abs(sd.states.col(k).dot(sp.states.col(k)));
    EXPECT_NEAR(overlap, 1.0, 1e-8);
  }
}

TEST(Eigensolver, ContractViolationDetected) {
  const Eigen::MatrixXcd h = random_hermitian(6, 1);
  Spectrum s = hermitian_eigensolve(OperatorMatrix(h, NoBasis{}, true));
  s.states.col(0) *= 1.01;
  EXPECT_THROW(check_spectrum_contracts(s), ConvergenceError);
}

TEST(Spectrum, Clusters) {
  Spectrum s;
  s.energies.resize(5);
  s.energies << 0.0, 1e-12, 1.0, 2.0, 2.0 + 1e-13;
  const auto c = s.clusters(1e-9);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[0].size(), 2u);
  EXPECT_EQ(c[1].size(), 1u);
  EXPECT_EQ(c[2].size(), 2u);
}
