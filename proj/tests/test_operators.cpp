#include <gtest/gtest.h>

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>

#include "qrm/errors.hpp"
#include "qrm/models.hpp"
#include "qrm/operators.hpp"

using namespace qrm;

namespace {

Eigen::MatrixXcd random_hermitian(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> d;
  Eigen::MatrixXcd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = cplx(d(rng), d(rng));
  return 0.5 * (m + m.adjoint());
}

std::string temp_path(const char* name) { return testing::TempDir() + name; }

}  // namespace

TEST(Ladder, Elements) {
  const LadderOperators l = fock_ladder(6);
  const Eigen::MatrixXcd a = l.a.dense(), ad = l.adag.dense();
  EXPECT_EQ(a(0, 1), cplx(1.0));
  EXPECT_NEAR(std::abs(a(2, 3) - std::sqrt(3.0)), 0.0, 1e-15);
  const Eigen::MatrixXcd num = ad * a;
  for (int n = 0; n < 6; ++n) {
    EXPECT_NEAR(num(n, n).real(), n, 1e-14);
    for (int m = 0; m < 6; ++m)
      if (m != n) EXPECT_EQ(num(n, m), cplx(0.0));
  }
  EXPECT_THROW(fock_ladder(1), DomainError);
}

TEST(Ladder, TruncatedCommutator) {
  const int n = 7;
  const LadderOperators l = fock_ladder(n);
  const Eigen::MatrixXcd c = commutator(l.a.dense(), l.adag.dense());
  Eigen::MatrixXcd expected = Eigen::MatrixXcd::Identity(n, n);
  expected(n - 1, n - 1) = 1.0 - n;
  EXPECT_LT((c - expected).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(SpinOps, HalfIsPauliOverTwo) {
  const SpinOperators s = spin_operators(Spin::from_value(0.5));
  Eigen::Matrix2cd sx, sy, sz;
  sx << 0, 1, 1, 0;
  // Spin index 0 is m = -1/2, so the usual Pauli matrices appear with the
  // basis order reversed.
  sy << 0, cplx(0, 1), cplx(0, -1), 0;
  sz << -1, 0, 0, 1;
  EXPECT_LT((s.Fx.dense() - 0.5 * sx).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((s.Fy.dense() - 0.5 * sy).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((s.Fz.dense() - 0.5 * sz).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(SpinOps, CasimirAndAlgebra) {
  for (int twice = 1; twice <= 6; ++twice) {
    const Spin F = Spin::from_twice(twice);
    const SpinOperators s = spin_operators(F);
    const Eigen::MatrixXcd x = s.Fx.dense(), y = s.Fy.dense(), z = s.Fz.dense();
    const Eigen::MatrixXcd cas = x * x + y * y + z * z;
    const double f = F.value();
    EXPECT_LT((cas - f * (f + 1) * Eigen::MatrixXcd::Identity(F.dim(), F.dim())).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((commutator(x, y) - cplx(0, 1) * z).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((commutator(y, z) - cplx(0, 1) * x).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Parity, SquaresToIdentityWithSignedDiagonal) {
  const BasisSpec b{10, Spin::from_value(0.5)};
  const Eigen::MatrixXcd p = parity_operator(b).dense();
  EXPECT_LT((p * p - Eigen::MatrixXcd::Identity(b.dim(), b.dim())).cwiseAbs().maxCoeff(), 0.0 + 1e-15);
  for (int n = 0; n < 10; ++n) {
    for (int s = 0; s < 2; ++s) {
      const double expected = ((n + s) % 2 == 0) ? 1.0 : -1.0;
      EXPECT_EQ(p(b.index(n, s), b.index(n, s)).real(), expected);
    }
  }
}

TEST(Parity, CommutesWithRandomQrm) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int k = 0; k < 100; ++k) {
    ModelParams p;
    p.omega = 0.1 + std::abs(u(rng));
    p.g = u(rng);
    p.omega0 = u(rng);
    p.F = Spin::from_twice(1 + k % 6);
    p.fock_cutoff = 16;
    const OperatorMatrix h = build_qrm(p);
    const Eigen::MatrixXcd c = commutator(parity_operator(p.basis()).dense(), h.dense());
    EXPECT_LE(c.cwiseAbs().maxCoeff(), 1e-12 * h.max_abs());
  }
}

TEST(Kron, Dimensions) {
  const Eigen::MatrixXcd a = Eigen::MatrixXcd::Identity(3, 3), b = Eigen::MatrixXcd::Ones(2, 2);
  const Eigen::MatrixXcd k = kron(a, b);
  EXPECT_EQ(k.rows(), 6);
  EXPECT_EQ(k(0, 1), cplx(1.0));
  EXPECT_EQ(k(0, 2), cplx(0.0));
}

TEST(OperatorMatrix, HermitianFlagChecked) {
  Eigen::MatrixXcd m(2, 2);
  m << 1, 2, 3, 4;
  EXPECT_THROW(OperatorMatrix(m, NoBasis{}, true), ValidationError);
  EXPECT_NO_THROW(OperatorMatrix(m, NoBasis{}, false));
  Eigen::MatrixXcd h(2, 2);
  h << 1, cplx(2, 1), cplx(2, -1), 4;
  const OperatorMatrix op(h, NoBasis{}, true);
  EXPECT_TRUE(op.hermitian());
  EXPECT_EQ(op.hermiticity_defect(), 0.0);
  EXPECT_THROW(op.banded(), ValidationError);
}

TEST(BandedSymmetric, MatchesDense) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> d;
  BandedSymmetric b(40, 3);
  for (Index j = 0; j < 40; ++j)
    for (Index i = j; i < std::min<Index>(40, j + 4); ++i) b.lower(i, j) = d(rng);
  const Eigen::MatrixXd dense = b.to_dense();
  EXPECT_LT((dense - dense.transpose()).cwiseAbs().maxCoeff(), 0.0 + 1e-300);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(40, 3);
  EXPECT_LT((b.apply(x) - dense * x).cwiseAbs().maxCoeff(), 1e-12);
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(dense).eigenvalues();
  EXPECT_LE(b.gershgorin_lower(), ev.minCoeff());
  EXPECT_GE(b.inf_norm(), ev.cwiseAbs().maxCoeff());

  // Shifted Cholesky solve.
  const double shift = b.gershgorin_lower() - 1.0;
  const BandedCholesky chol(b, shift);
  Eigen::MatrixXd rhs = x;
  chol.solve_in_place(rhs);
  const Eigen::MatrixXd shifted = dense - shift * Eigen::MatrixXd::Identity(40, 40);
  EXPECT_LT((shifted * rhs - x).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_THROW(BandedCholesky(b, ev.maxCoeff() + 1.0), ValidationError);
}

TEST(MatrixDump, RoundTripDense) {
  std::mt19937_64 rng(11);
  const BasisSpec basis{5, Spin::from_value(1.5)};
  const OperatorMatrix m(random_hermitian(static_cast<int>(basis.dim()), rng), basis, true);
  const std::string path = temp_path("dense.qrmd");
  write_matrix_dump(path, m);
  const OperatorMatrix back = read_matrix_dump(path);
  EXPECT_EQ(back.dim(), m.dim());
  EXPECT_EQ((back.to_dense() - m.to_dense()).cwiseAbs().maxCoeff(), 0.0);
  ASSERT_TRUE(std::holds_alternative<BasisSpec>(back.basis()));
  EXPECT_EQ(std::get<BasisSpec>(back.basis()), basis);
}

TEST(MatrixDump, HeaderLayout) {
  const BasisSpec basis{3, Spin::from_value(1)};
  const OperatorMatrix m(Eigen::MatrixXcd::Identity(9, 9), basis, true);
  const std::string path = temp_path("header.qrmd");
  write_matrix_dump(path, m);
  std::ifstream f(path, std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), {});
  ASSERT_EQ(bytes.size(), 32u + 9u * 9u * 16u);
  EXPECT_EQ(std::memcmp(bytes.data(), "QRMD", 4), 0);
  std::uint64_t dim = 0, extent = 0;
  std::uint32_t kind = 0, twice = 0;
  std::memcpy(&dim, bytes.data() + 8, 8);
  std::memcpy(&kind, bytes.data() + 16, 4);
  std::memcpy(&twice, bytes.data() + 20, 4);
  std::memcpy(&extent, bytes.data() + 24, 8);
  EXPECT_EQ(dim, 9u);
  EXPECT_EQ(kind, 1u);
  EXPECT_EQ(twice, 2u);
  EXPECT_EQ(extent, 3u);
  // First payload entry is (re, im) of element (0, 0).
  double re = 0, im = 0;
  std::memcpy(&re, bytes.data() + 32, 8);
  std::memcpy(&im, bytes.data() + 40, 8);
  EXPECT_EQ(re, 1.0);
  EXPECT_EQ(im, 0.0);
}

TEST(MatrixDump, Errors) {
  const std::string path = temp_path("garbage.qrmd");
  {
    std::ofstream f(path, std::ios::binary);
    f << "not a dump at all, definitely more than thirty-two bytes";
  }
  EXPECT_THROW(read_matrix_dump(path), ValidationError);
  EXPECT_THROW(read_matrix_dump("/nonexistent/m.qrmd"), IoError);
  EXPECT_THROW(write_matrix_dump("/nonexistent/dir/m.qrmd", OperatorMatrix(Eigen::MatrixXcd::Identity(2, 2))),
               IoError);
}
