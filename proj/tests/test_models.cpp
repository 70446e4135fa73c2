#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "qrm/errors.hpp"
#include "qrm/models.hpp"

using namespace qrm;

namespace {

ModelParams half(double g, double omega0 = 0.0, int cutoff = 32) {
  ModelParams p;
  p.g = g;
  p.omega0 = omega0;
  p.F = Spin::from_value(0.5);
  p.fock_cutoff = cutoff;
  return p;
}

Eigen::VectorXd energies(const OperatorMatrix& h) { return hermitian_eigensolve(h).energies; }

}  // namespace

TEST(Params, Validation) {
  ModelParams p;
  p.omega = 0.0;
  EXPECT_THROW(p.validate(), ValidationError);
  p.omega = 1.0;
  p.fock_cutoff = 1;
  EXPECT_THROW(p.validate(), ValidationError);
  p.fock_cutoff = 4;
  p.g = std::nan("");
  EXPECT_THROW(p.validate(), ValidationError);
  EXPECT_THROW(build_qrm(p), ValidationError);
}

TEST(Qrm, UncoupledSpectrum) {
  for (int twice = 1; twice <= 4; ++twice) {
    ModelParams p;
    p.omega = 1.3;
    p.omega0 = -0.41;
    p.F = Spin::from_twice(twice);
    p.fock_cutoff = 12;
    std::vector<double> exact;
    for (int n = 0; n < p.fock_cutoff; ++n)
      for (int s = 0; s < p.F.dim(); ++s) exact.push_back(n * p.omega + p.F.m(s) * p.omega0);
    std::sort(exact.begin(), exact.end());
    const Eigen::VectorXd e = energies(build_qrm(p));
    ASSERT_EQ(e.size(), static_cast<Index>(exact.size()));
    for (Index i = 0; i < e.size(); ++i) EXPECT_NEAR(e(i), exact[i], 1e-10);
  }
}

TEST(Qrm, DisplacedOscillatorDoublets) {
  for (double g : {0.3, 1.0, 2.0}) {
    const CutoffResult cut = check_cutoff_convergence(half(g), 20, 1e-12);
    const Eigen::VectorXd e = hermitian_eigensolve(build_qrm(cut.params), Index{20}).energies;
    for (int k = 0; k < 20; ++k) EXPECT_NEAR(e(k), (k / 2) - g * g, 1e-8) << "g = " << g << ", k = " << k;
  }
}

TEST(Qrm, VacuumRabiSplitting) {
  const double g = 0.05;
  const ModelParams p = half(g, 1.0, 20);
  const Eigen::VectorXd e = energies(build_qrm(p));
  const double split = e(2) - e(1);
  EXPECT_NEAR(split / (2 * g), 1.0, 5 * g * g);
}

TEST(Qrm, CouplingSignInvariance) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int k = 0; k < 20; ++k) {
    ModelParams p;
    p.g = u(rng);
    p.omega0 = u(rng);
    p.F = Spin::from_twice(1 + k % 4);
    p.fock_cutoff = 20;
    ModelParams q = p;
    q.g = -p.g;
    EXPECT_LT((energies(build_qrm(p)) - energies(build_qrm(q))).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Driven, ZeroDriveIsQrm) {
  ModelParams p = half(0.4, 0.7, 10);
  EXPECT_EQ((build_driven_qrm(p).dense() - build_qrm(p).dense()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Driven, BreaksParity) {
  ModelParams p = half(0.4, 0.7, 10);
  p.g_eps = 0.2;
  const OperatorMatrix h = build_driven_qrm(p);
  EXPECT_GT(commutator(parity_operator(p.basis()).dense(), h.dense()).cwiseAbs().maxCoeff(), 0.1);
}

TEST(Driven, TwoLevelOracle) {
  ModelParams p = half(0.0, 0.8, 6);
  for (double eps : {1e-3, 0.05, 0.3}) {
    p.g_eps = eps;
    const double e0 = energies(build_driven_qrm(p))(0);
    EXPECT_NEAR(e0, -0.5 * std::sqrt(p.omega0 * p.omega0 + eps * eps), 1e-13);
  }
}

TEST(Quadratic, ReducesToQrm) {
  ModelParams p = half(0.4, 0.7, 10);
  const QuadraticModel q = build_quadratic_qrm(p);
  EXPECT_FALSE(q.beyond_collapse);
  EXPECT_EQ((q.hamiltonian.dense() - build_qrm(p).dense()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Quadratic, BogoliubovBranches) {
  for (double g2 : {0.1, 0.2, 0.3, 0.4}) {
    ModelParams p = half(0.0);
    p.g2 = g2;
    const oracle::BranchSpectra b = oracle::quadratic_branches(p, 10);
    const double wp = std::sqrt(1.0 + 2 * g2), wm = std::sqrt(1.0 - 2 * g2);
    for (int n = 0; n < 10; ++n) {
      EXPECT_NEAR(b.upper(n), wp * (n + 0.5) - 0.5, 1e-6);
      EXPECT_NEAR(b.lower(n), wm * (n + 0.5) - 0.5, 1e-6);
    }
  }
}

TEST(Quadratic, SoftBranchSpacingShrinks) {
  std::vector<double> previous(10, 1e9);
  for (double g2 : {0.1, 0.2, 0.3, 0.4, 0.45, 0.49}) {
    ModelParams p = half(0.0);
    p.g2 = g2;
    const oracle::BranchSpectra b = oracle::quadratic_branches(p, 11);
    for (int n = 0; n < 10; ++n) {
      const double spacing = b.lower(n + 1) - b.lower(n);
      EXPECT_LT(spacing, previous[n]);
      previous[n] = spacing;
    }
  }
}

TEST(Quadratic, CollapseFlag) {
  ModelParams p = half(0.0);
  p.g2 = 0.49;
  EXPECT_FALSE(beyond_spectral_collapse(p));
  p.g2 = -0.5;
  EXPECT_TRUE(beyond_spectral_collapse(p));
  EXPECT_TRUE(build_quadratic_qrm(p).beyond_collapse);
  p.F = Spin::from_value(1);
  p.g2 = 0.26;
  EXPECT_TRUE(beyond_spectral_collapse(p));
}

TEST(Dicke, SingleAtomIsQrm) {
  const ModelParams p = half(0.7, 0.9, 24);
  const Eigen::VectorXd a = energies(build_dicke(1, p.omega, p.omega0, p.g, p.fock_cutoff));
  EXPECT_LT((a - energies(build_qrm(p))).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Dicke, ExplicitQubits) {
  for (int n : {2, 3}) {
    const Eigen::VectorXd e = hermitian_eigensolve(build_dicke(n, 1.0, 1.1, 0.5, 30), Index{20}).energies;
    const Eigen::VectorXd o = oracle::symmetric_dicke_spectrum(n, 1.0, 1.1, 0.5, 30);
    for (int i = 0; i < 20; ++i) EXPECT_NEAR(e(i), o(i), 1e-10);
  }
}

TEST(Dicke, TotalSpinConserved) {
  for (int n : {2, 3, 5}) {
    const OperatorMatrix h = build_dicke(n, 1.0, 0.6, 0.8, 12);
    const SpinOperators s = spin_operators(Spin::from_twice(n));
    const Eigen::MatrixXcd f2 = s.Fx.dense() * s.Fx.dense() + s.Fy.dense() * s.Fy.dense() +
                                s.Fz.dense() * s.Fz.dense();
    const Eigen::MatrixXcd big = kron(Eigen::MatrixXcd::Identity(12, 12), f2);
    EXPECT_LE(commutator(big, h.dense()).cwiseAbs().maxCoeff(), 1e-12 * h.max_abs());
  }
}

TEST(Cutoff, UncoupledMinimal) {
  ModelParams p;
  p.F = Spin::from_value(1);
  p.omega0 = 0.3;
  const CutoffResult r = check_cutoff_convergence(p, 10, 1e-10);
  EXPECT_GE(r.cutoff, static_cast<int>(std::ceil(10.0 / 3.0)) + 1);
  EXPECT_LE(r.max_rel_change, 1e-10);
  EXPECT_EQ(r.params.fock_cutoff, r.cutoff);
}

TEST(Cutoff, DeepStrongNeedsHundreds) {
  const CutoffResult r = check_cutoff_convergence(half(3.0), 30, 1e-10);
  EXPECT_GE(r.cutoff, 64);
  EXPECT_LE(r.cutoff, 1024);
}

TEST(Cutoff, TighterToleranceNeverSmaller) {
  int last = 0;
  for (double tol : {1e-4, 1e-6, 1e-8, 1e-10, 1e-12}) {
    const int c = check_cutoff_convergence(half(1.5, 0.5), 20, tol).cutoff;
    EXPECT_GE(c, last);
    last = c;
  }
}

TEST(Cutoff, BeyondCollapseDoesNotConverge) {
  ModelParams p = half(0.0);
  p.g2 = 0.6;
  EXPECT_THROW(check_cutoff_convergence(p, 10, 1e-10, 512), ConvergenceError);
}

TEST(Hermite, OrthonormalOnFineGrid) {
  const PositionGrid grid{-30.0, 0.01, 6001};
  const Eigen::MatrixXd phi = hermite_functions(40, grid, 0.0, 1.0);
  const Eigen::MatrixXd gram = grid.dx * phi * phi.transpose();
  EXPECT_LT((gram - Eigen::MatrixXd::Identity(40, 40)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Hermite, LargeOrderStaysFinite) {
  const PositionGrid grid{-80.0, 0.05, 3201};
  const Eigen::MatrixXd phi = hermite_functions(1500, grid, 0.0, 1.0);
  EXPECT_TRUE(phi.allFinite());
  EXPECT_NEAR(grid.dx * phi.row(1499).squaredNorm(), 1.0, 1e-6);
}

TEST(Synthesis, GroundStateWidth) {
  const double x0 = 0.7;
  const ModelParams p = half(0.0, 1.0, 8);
  const Spectrum s = hermitian_eigensolve(build_qrm(p), Index{2});
  const PositionGrid grid{-10.0, 0.005, 4001};
  const auto psi = synthesize_position_states(p.basis(), s, 0.0, x0, grid);
  double norm = 0.0, second = 0.0;
  for (int i = 0; i < grid.n_points; ++i) {
    const double w = psi[0].amplitudes.row(i).squaredNorm() * grid.dx;
    norm += w;
    second += w * grid.x(i) * grid.x(i);
  }
  EXPECT_NEAR(norm, 1.0, 1e-8);
  // x = x0 (a + a^dag): <x^2> = x0^2 in the vacuum.
  EXPECT_NEAR(std::sqrt(second), x0, 1e-8);
}

TEST(Synthesis, DisplacedPair) {
  const double g = 1.2, x0 = 0.5;
  const CutoffResult cut = check_cutoff_convergence(half(g), 4, 1e-12);
  const Spectrum s = hermitian_eigensolve(build_qrm(cut.params), Index{2});
  const PositionGrid grid{-12.0, 0.004, 6001};
  const auto psi = synthesize_position_states(cut.params.basis(), s, 0.0, x0, grid);
  // In the sigma_x eigenbasis each ground-doublet component is a Gaussian
  // centred at -+ 2 g x0 / omega.
  const Eigen::Vector2cd plus(std::sqrt(0.5), std::sqrt(0.5)), minus(std::sqrt(0.5), -std::sqrt(0.5));
  for (const auto& st : psi) {
    double norm = 0.0;
    for (int i = 0; i < grid.n_points; ++i) norm += st.amplitudes.row(i).squaredNorm() * grid.dx;
    EXPECT_NEAR(norm, 1.0, 1e-8);
    for (const auto& [axis, centre] : {std::pair{plus, -2 * g * x0}, std::pair{minus, 2 * g * x0}}) {
      double w = 0.0, mean = 0.0;
      for (int i = 0; i < grid.n_points; ++i) {
        const double d = std::norm(axis.dot(st.amplitudes.row(i).transpose())) * grid.dx;
        w += d;
        mean += d * grid.x(i);
      }
      if (w > 1e-6) EXPECT_NEAR(mean / w, centre, 1e-7);
    }
  }
}

TEST(Synthesis, GridTooSmallRejected) {
  const ModelParams p = half(2.0, 0.0, 96);
  const Spectrum s = hermitian_eigensolve(build_qrm(p), Index{2});
  const PositionGrid grid{-1.0, 0.01, 201};
  EXPECT_THROW(synthesize_position_states(p.basis(), s, 0.0, 1.0, grid), ValidationError);
}
