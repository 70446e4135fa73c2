#include "qrm/models.hpp"

#include <cmath>
#include <sstream>

#include "qrm/errors.hpp"

namespace qrm {

void ModelParams::validate() const {
  if (!(omega > 0.0) || !std::isfinite(omega)) throw DomainError("model: omega must be positive");
  for (double v : {g, omega0, g_eps, g2}) {
    if (!std::isfinite(v)) throw DomainError("model: rates must be finite");
  }
  if (fock_cutoff < 2) throw DomainError("model: Fock cutoff must be at least 2");
}

namespace {

struct Pieces {
  Eigen::MatrixXcd number;   // a^dag a (x) 1
  Eigen::MatrixXcd position; // (a + a^dag) (x) F_x
  Eigen::MatrixXcd fz;       // 1 (x) F_z
  Eigen::MatrixXcd fx;       // 1 (x) F_x
};

Pieces pieces(int cutoff, Spin F) {
  const auto ladder = fock_ladder(cutoff);
  const auto spin = spin_operators(F);
  const Eigen::MatrixXcd id_f = Eigen::MatrixXcd::Identity(cutoff, cutoff);
  const Eigen::MatrixXcd id_s = Eigen::MatrixXcd::Identity(F.dim(), F.dim());
  const Eigen::MatrixXcd x = ladder.a.dense() + ladder.adag.dense();
  const Eigen::MatrixXcd n = ladder.adag.dense() * ladder.a.dense();
  return {kron(n, id_s), kron(x, spin.Fx.dense()), kron(id_f, spin.Fz.dense()), kron(id_f, spin.Fx.dense())};
}

Eigen::MatrixXcd qrm_matrix(const ModelParams& p, const Pieces& m) {
  return p.omega * m.number + p.omega0 * m.fz + 2.0 * p.g * m.position;
}

Eigen::MatrixXcd quadratic_term(const ModelParams& p) {
  const auto ladder = fock_ladder(p.fock_cutoff);
  const Eigen::MatrixXcd x = ladder.a.dense() + ladder.adag.dense();
  return kron(x * x, spin_operators(p.F).Fx.dense());
}

OperatorMatrix finish(Eigen::MatrixXcd m, const ModelParams& p) {
  // Exactly Hermitian by construction; symmetrize away round-off from x * x.
  m = 0.5 * (m + m.adjoint()).eval();
  return OperatorMatrix(std::move(m), p.basis(), true);
}

}  // namespace

OperatorMatrix build_qrm(const ModelParams& p) {
  p.validate();
  return finish(qrm_matrix(p, pieces(p.fock_cutoff, p.F)), p);
}

OperatorMatrix build_driven_qrm(const ModelParams& p) {
  p.validate();
  const Pieces m = pieces(p.fock_cutoff, p.F);
  return finish(qrm_matrix(p, m) + p.g_eps * m.fx, p);
}

bool beyond_spectral_collapse(const ModelParams& p) {
  return 4.0 * std::abs(p.g2) * p.F.value() >= p.omega;
}

QuadraticModel build_quadratic_qrm(const ModelParams& p) {
  p.validate();
  const Pieces m = pieces(p.fock_cutoff, p.F);
  return {finish(qrm_matrix(p, m) + p.g2 * quadratic_term(p), p), beyond_spectral_collapse(p)};
}

OperatorMatrix build_generalized(const ModelParams& p) {
  p.validate();
  const Pieces m = pieces(p.fock_cutoff, p.F);
  Eigen::MatrixXcd h = qrm_matrix(p, m) + p.g_eps * m.fx;
  if (p.g2 != 0.0) h += p.g2 * quadratic_term(p);
  return finish(std::move(h), p);
}

OperatorMatrix build_dicke(int n_atoms, double omega, double omega0, double g, int fock_cutoff) {
  if (n_atoms < 1) throw DomainError("build_dicke: N must be at least 1");
  ModelParams p;
  p.omega = omega;
  p.omega0 = omega0;
  p.g = g / std::sqrt(static_cast<double>(n_atoms));
  p.F = Spin::from_twice(n_atoms);
  p.fock_cutoff = fock_cutoff;
  return build_qrm(p);
}

CutoffResult check_cutoff_convergence(const ModelParams& p, int n_states, double tol, int max_cutoff) {
  p.validate();
  if (n_states < 1) throw ValidationError("check_cutoff_convergence: n_states must be >= 1");
  if (!(tol > 0.0)) throw ValidationError("check_cutoff_convergence: tol must be positive");
  // Past the collapse the spectrum is unbounded below, so no cutoff converges.
  if (beyond_spectral_collapse(p))
    throw ConvergenceError("Fock cutoff cannot converge beyond the spectral collapse (4 |g2| F >= omega)");

  const int spin_dim = p.F.dim();
  int cutoff = std::max(2, (n_states + spin_dim - 1) / spin_dim + 1);
  auto lowest = [&](int c) {
    ModelParams q = p;
    q.fock_cutoff = c;
    return hermitian_eigensolve(build_generalized(q), static_cast<Index>(n_states)).energies;
  };

  Eigen::VectorXd current = lowest(cutoff);
  while (true) {
    const int next = 2 * cutoff;
    if (next > max_cutoff) {
      std::ostringstream os;
      os << "Fock cutoff search exceeded " << max_cutoff << " for " << n_states << " states at tol " << tol;
      throw ConvergenceError(os.str());
    }
    const Eigen::VectorXd refined = lowest(next);
    const double scale = std::max(refined.cwiseAbs().maxCoeff(), std::abs(p.omega));
    const double change = (refined - current).cwiseAbs().maxCoeff() / scale;
    if (change < tol) {
      CutoffResult out;
      out.cutoff = cutoff;
      out.max_rel_change = change;
      out.params = p;
      out.params.fock_cutoff = cutoff;
      return out;
    }
    cutoff = next;
    current = refined;
  }
}

Eigen::MatrixXd hermite_functions(int n_max, const PositionGrid& grid, double x_center, double x0) {
  if (n_max < 1) throw DomainError("hermite_functions: n_max must be >= 1");
  if (!(x0 > 0.0)) throw DomainError("hermite_functions: x0 must be positive");
  Eigen::MatrixXd out(n_max, grid.n_points);
  // x = x0 (a + a^dag) gives a Gaussian of width sqrt(2) x0 in the standard
  // dimensionless coordinate xi.
  const double length = std::sqrt(2.0) * x0;
  const double jacobian = 1.0 / std::sqrt(length);
  constexpr double kBig = 1e150;
  const double log_big = std::log(kBig);
  for (int i = 0; i < grid.n_points; ++i) {
    const double xi = (grid.x(i) - x_center) / length;
    // psi_n = value_n * exp(log_scale); the scale absorbs the Gaussian so the
    // recurrence neither underflows nor overflows for large n and |xi|.
    double log_scale = -0.5 * xi * xi - 0.25 * std::log(constants::pi);
    double prev = 0.0;
    double cur = 1.0;
    for (int n = 0; n < n_max; ++n) {
      out(n, i) = cur * std::exp(log_scale) * jacobian;
      const double next = std::sqrt(2.0 / (n + 1)) * xi * cur - std::sqrt(static_cast<double>(n) / (n + 1)) * prev;
      prev = cur;
      cur = next;
      if (std::abs(cur) > kBig) {
        cur /= kBig;
        prev /= kBig;
        log_scale += log_big;
      }
    }
  }
  return out;
}

std::vector<PositionWavefunction> synthesize_position_states(const BasisSpec& basis, const Spectrum& spectrum,
                                                             double x_center, double x0,
                                                             const PositionGrid& grid) {
  basis.validate();
  if (spectrum.states.rows() != basis.dim()) throw ValidationError("synthesis: spectrum does not match basis");
  if (grid.n_points < 2 || !(grid.dx > 0.0)) throw ValidationError("synthesis: invalid grid");

  const int nf = basis.fock_cutoff;
  const int ds = basis.F.dim();

  // Highest Fock level with weight above 1e-10 in any requested state.
  int n_occ = 0;
  for (Index k = 0; k < spectrum.states.cols(); ++k) {
    for (int n = nf - 1; n > n_occ; --n) {
      double w = 0.0;
      for (int s = 0; s < ds; ++s) w += std::norm(spectrum.states(basis.index(n, s), k));
      if (w > 1e-10) {
        n_occ = n;
        break;
      }
    }
  }
  const int n_used = std::min(nf, n_occ + 1 + std::max(8, n_occ / 8));

  const Eigen::MatrixXd phi = hermite_functions(n_used, grid, x_center, x0);
  std::vector<PositionWavefunction> out;
  out.reserve(spectrum.states.cols());
  for (Index k = 0; k < spectrum.states.cols(); ++k) {
    Eigen::MatrixXcd coeff(n_used, ds);
    for (int n = 0; n < n_used; ++n)
      for (int s = 0; s < ds; ++s) coeff(n, s) = spectrum.states(basis.index(n, s), k);
    PositionWavefunction wf;
    wf.grid = grid;
    wf.amplitudes = phi.transpose().cast<cplx>() * coeff;
    // Weight outside the grid shows up as a norm deficit.
    const double norm = wf.amplitudes.squaredNorm() * grid.dx;
    if (std::abs(norm - 1.0) > kSynthesisNormTolerance) {
      const double half_extent = 4.0 * x0 * std::sqrt(n_occ + 1.0);
      std::ostringstream os;
      os << "synthesis: state " << k << " has grid norm " << norm << " on [" << grid.x_min << ", "
         << grid.x_max() << "]; Fock levels up to " << n_occ << " need about [" << x_center - half_extent << ", "
         << x_center + half_extent << "]";
      throw ValidationError(os.str());
    }
    out.push_back(std::move(wf));
  }
  return out;
}

}  // namespace qrm
