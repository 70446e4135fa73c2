#include "qrm/eigensolver.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "qrm/errors.hpp"

namespace qrm {

double Spectrum::orthonormality_defect() const {
  if (states.cols() == 0) return 0.0;
  const Eigen::MatrixXcd gram = states.adjoint() * states;
  return (gram - Eigen::MatrixXcd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

double Spectrum::max_residual() const { return residuals.size() ? residuals.maxCoeff() : 0.0; }

std::vector<std::vector<Index>> Spectrum::clusters(double rel_gap) const {
  std::vector<std::vector<Index>> out;
  if (size() == 0) return out;
  const double spread = energies(size() - 1) - energies(0);
  const double limit = rel_gap * (spread > 0.0 ? spread : 1.0);
  out.push_back({0});
  for (Index i = 1; i < size(); ++i) {
    if (energies(i) - energies(i - 1) < limit) {
      out.back().push_back(i);
    } else {
      out.push_back({i});
    }
  }
  return out;
}

namespace {

void fix_gauge(Eigen::MatrixXcd& states) {
  for (Index j = 0; j < states.cols(); ++j) {
    Index best = 0;
    double best_abs = -1.0;
    for (Index i = 0; i < states.rows(); ++i) {
      const double a = std::abs(states(i, j));
      if (a > best_abs * (1.0 + 1e-12)) {
        best_abs = a;
        best = i;
      }
    }
    if (best_abs > 0.0) states.col(j) *= std::conj(states(best, j)) / best_abs;
  }
}

Eigen::VectorXd residual_norms(const OperatorMatrix& h, const Eigen::VectorXd& e, const Eigen::MatrixXcd& v) {
  const Eigen::MatrixXcd r = h.apply(v) - v * e.cast<cplx>().asDiagonal();
  return r.colwise().norm().transpose();
}

Spectrum dense_solve(const OperatorMatrix& h, Index k) {
  Spectrum out;
  if (h.is_real()) {
    const Eigen::MatrixXd m = h.is_banded() ? h.banded().to_dense() : Eigen::MatrixXd(h.dense().real());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    if (es.info() != Eigen::Success) throw ConvergenceError("dense eigensolver: QR iteration did not converge");
    out.energies = es.eigenvalues().head(k);
    out.states = es.eigenvectors().leftCols(k).cast<cplx>();
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h.dense());
    if (es.info() != Eigen::Success) throw ConvergenceError("dense eigensolver: QR iteration did not converge");
    out.energies = es.eigenvalues().head(k);
    out.states = es.eigenvectors().leftCols(k);
  }
  return out;
}

// Appends the columns of block to basis(:, 0:used) after two passes of
// classical Gram-Schmidt. Columns that vanish are replaced with random ones.
Index append_orthonormal(Eigen::MatrixXd& basis, Index used, Eigen::MatrixXd block, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  for (Index c = 0; c < block.cols() && used < basis.cols(); ++c) {
    Eigen::VectorXd v = block.col(c);
    for (int attempt = 0; attempt < 4; ++attempt) {
      const double before = v.norm();
      for (int pass = 0; pass < 2; ++pass) {
        if (used > 0) {
          const Eigen::VectorXd proj = basis.leftCols(used).transpose() * v;
          v.noalias() -= basis.leftCols(used) * proj;
        }
      }
      const double after = v.norm();
      if (after > 1e-8 * before && after > 0.0) {
        basis.col(used++) = v / after;
        break;
      }
      for (Index i = 0; i < v.size(); ++i) v(i) = normal(rng);
    }
  }
  return used;
}

Spectrum partial_solve(const OperatorMatrix& h, const EigenOptions& opt, Index k) {
  const BandedSymmetric& a = h.banded();
  const Index n = a.size();
  const Index b = std::min<Index>(std::max(opt.block_size, 1), n);
  Index cap = opt.max_basis > 0 ? opt.max_basis : std::max<Index>(6 * k + 10 * b, 32 * b);
  cap = std::min(cap, n);
  const double norm = a.inf_norm();
  const double shift = opt.shift.value_or(a.gershgorin_lower() - 1e-3 * std::max(norm, 1.0));
  const BandedCholesky chol(a, shift);

  std::mt19937_64 rng(0x51ab5eedULL);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd q(n, cap);
  Eigen::MatrixXd hq(n, cap);
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(cap, cap);

  Eigen::MatrixXd block(n, b);
  for (Index j = 0; j < b; ++j)
    for (Index i = 0; i < n; ++i) block(i, j) = normal(rng);

  Index used = 0;
  int steps = 0;
  Eigen::VectorXd theta;
  Eigen::MatrixXd ritz;
  while (true) {
    const Index start = used;
    used = append_orthonormal(q, used, block, rng);
    if (used == start) break;
    hq.middleCols(start, used - start) = a.apply(q.middleCols(start, used - start));
    s.block(0, start, used, used - start) = q.leftCols(used).transpose() * hq.middleCols(start, used - start);
    s.block(start, 0, used - start, start) = s.block(0, start, start, used - start).transpose();
    ++steps;

    if (used >= k + b && (steps % 2 == 0 || used == cap)) {
      Eigen::MatrixXd sym = s.topLeftCorner(used, used);
      sym = 0.5 * (sym + sym.transpose()).eval();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
      theta = es.eigenvalues().head(k);
      const Eigen::MatrixXd y = es.eigenvectors().leftCols(k);
      ritz = q.leftCols(used) * y;
      const Eigen::MatrixXd r = hq.leftCols(used) * y - ritz * theta.asDiagonal();
      const double worst = r.colwise().norm().maxCoeff();
      if (worst <= opt.tolerance * norm) break;
    }
    if (used == cap) {
      std::ostringstream os;
      os << "block Lanczos: " << k << " eigenpairs not converged after " << steps
         << " block steps (basis size " << used << ")";
      throw ConvergenceError(os.str());
    }
    block = q.middleCols(start, used - start);
    chol.solve_in_place(block);
  }
  if (ritz.cols() != k) throw ConvergenceError("block Lanczos: Krylov space exhausted before convergence");

  Spectrum out;
  out.energies = theta;
  out.states = ritz.cast<cplx>();
  return out;
}

}  // namespace

Spectrum hermitian_eigensolve(const OperatorMatrix& h, const EigenOptions& options) {
  if (!h.hermitian() && h.hermiticity_defect() > 1e-12 * h.max_abs()) {
    throw ValidationError("hermitian_eigensolve: matrix is not Hermitian");
  }
  const Index n = h.dim();
  const Index k = options.count.value_or(n);
  if (k < 1 || k > n) throw ValidationError("hermitian_eigensolve: requested count out of range");

  bool partial = false;
  if (options.method == SolverMethod::Partial) {
    if (!h.is_banded()) throw ValidationError("partial solver requires banded storage");
    partial = true;
  } else if (options.method == SolverMethod::Auto) {
    partial = h.is_banded() && k < n && n > 512 && 4 * k < n;
  }

  Spectrum out = partial ? partial_solve(h, options, k) : dense_solve(h, k);
  fix_gauge(out.states);
  out.residuals = residual_norms(h, out.energies, out.states);
  out.norm_bound = h.norm_bound();
  check_spectrum_contracts(out);
  return out;
}

Spectrum hermitian_eigensolve(const OperatorMatrix& h, Index count) {
  EigenOptions opt;
  opt.count = count;
  return hermitian_eigensolve(h, opt);
}

void check_spectrum_contracts(const Spectrum& spectrum) {
  const double ortho = spectrum.orthonormality_defect();
  const double resid = spectrum.max_residual();
  const double scale = std::max(spectrum.norm_bound, 1e-300);
  if (ortho > kOrthonormalityBound || resid > kResidualBound * scale) {
    std::ostringstream os;
    os << "eigensolver contract violated: orthonormality defect " << ortho << ", max residual " << resid
       << " (norm bound " << spectrum.norm_bound << ")";
    throw ConvergenceError(os.str());
  }
}

}  // namespace qrm
