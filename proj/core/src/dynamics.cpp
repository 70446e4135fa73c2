#include "qrm/dynamics.hpp"

#include <cmath>
#include <sstream>

#include "qrm/errors.hpp"

namespace qrm {

namespace {

struct Propagator {
  OperatorMatrix h;
  Spectrum spectrum;
  double rate_scale = 1.0;
  MotionalFrame frame;
};

struct Built {
  OperatorMatrix h;
  double rate_scale = 1.0;
  MotionalFrame frame;
};

Built build_segment(const SegmentHamiltonian& sh) {
  if (const auto* p = std::get_if<ModelParams>(&sh)) return {build_generalized(*p), 1.0, {}};
  const auto& lat = std::get<LatticeSegment>(sh);
  Built b{build_lattice_hamiltonian(lat.config, lat.grid), lat.config.recoil_energy() / constants::hbar, {}};
  b.frame.x_center = 0.5 * (lat.grid.x_min + lat.grid.x_max);
  try {
    b.frame.x0 = extract_effective_params(lat.config, static_cast<int>(std::lround(b.frame.x_center /
                                                                                     (0.5 * lat.config.lambda_t))))
                     .x0_eff;
  } catch (const DomainError&) {
    b.frame.x0 = oscillator_length(trap_frequency(lat.config.V0, lat.config.recoil_energy()), lat.config.species);
  }
  return b;
}

Propagator diagonalize(Built b) {
  EigenOptions opt;
  opt.method = SolverMethod::Dense;
  Propagator p{std::move(b.h), {}, b.rate_scale, b.frame};
  p.spectrum = hermitian_eigensolve(p.h, opt);
  return p;
}

std::string prefixed(int segment, const char* what) {
  return "segment " + std::to_string(segment) + ": " + what;
}

template <class F>
auto with_segment(int segment, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(prefixed(segment, e.what()));
  } catch (const IoError& e) {
    throw IoError(prefixed(segment, e.what()));
  } catch (const ValidationError& e) {
    throw ValidationError(prefixed(segment, e.what()));
  }
}

int spin_dim(const BasisTag& basis) {
  if (const auto* b = std::get_if<BasisSpec>(&basis)) return b->F.dim();
  if (const auto* g = std::get_if<GridSpinBasis>(&basis)) return g->F.dim();
  throw ValidationError("dynamics: operator carries no basis label");
}

int motional_levels(const BasisTag& basis, const MotionalFrame& frame) {
  if (const auto* b = std::get_if<BasisSpec>(&basis)) return b->fock_cutoff;
  return frame.n_max;
}

class Recorder {
 public:
  Recorder(const BasisTag& basis, const MotionalFrame& frame, Eigen::VectorXcd psi0)
      : basis_(basis), psi0_(std::move(psi0)), d_(spin_dim(basis)), levels_(motional_levels(basis, frame)) {
    if (const auto* g = std::get_if<GridSpinBasis>(&basis)) {
      const PositionGrid nodes{g->x_min, g->dx, g->n_points};
      hermite_ = hermite_functions(levels_, nodes, frame.x_center, frame.x0) * std::sqrt(g->dx);
    }
  }

  void record(double t, const Eigen::VectorXcd& psi, const OperatorMatrix& h, double rate_scale) {
    out.times.push_back(t);
    const Index n = psi.size() / d_;
    Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> amp(psi.data(), n, d_);
    pops_.push_back(amp.cwiseAbs2().colwise().sum().transpose());
    if (hermite_.size()) {
      const Eigen::MatrixXcd proj = hermite_.cast<cplx>() * amp;
      motional_.push_back(proj.cwiseAbs2().rowwise().sum());
    } else {
      motional_.push_back(amp.cwiseAbs2().rowwise().sum());
    }
    out.fidelity.push_back(std::min(1.0, std::norm(psi0_.dot(psi))));
    out.parity.push_back(parity(amp));
    const Eigen::MatrixXcd hpsi = h.apply(psi);
    out.energy.push_back(psi.dot(hpsi.col(0)).real() * rate_scale);
    out.norm.push_back(psi.squaredNorm());
    out.final_state = psi;
  }

  EvolutionResult finish() {
    out.populations.resize(static_cast<Index>(pops_.size()), d_);
    out.motional.resize(static_cast<Index>(motional_.size()), levels_);
    for (std::size_t k = 0; k < pops_.size(); ++k) {
      out.populations.row(static_cast<Index>(k)) = pops_[k].transpose();
      out.motional.row(static_cast<Index>(k)) = motional_[k].transpose();
    }
    return std::move(out);
  }

 private:
  template <class Amp>
  double parity(const Amp& amp) const {
    // Fock basis: (-1)^(n + s). Grid: x -> -x about the grid centre with
    // (-1)^s on the spin.
    const Index n = amp.rows();
    const bool grid = std::holds_alternative<GridSpinBasis>(basis_);
    double sum = 0.0;
    for (Index i = 0; i < n; ++i) {
      for (int s = 0; s < d_; ++s) {
        const double sign = (s % 2 == 0) ? 1.0 : -1.0;
        if (grid) {
          sum += sign * (std::conj(amp(i, s)) * amp(n - 1 - i, s)).real();
        } else {
          sum += sign * ((i % 2 == 0) ? 1.0 : -1.0) * std::norm(amp(i, s));
        }
      }
    }
    return sum;
  }

  BasisTag basis_;
  Eigen::VectorXcd psi0_;
  int d_;
  int levels_;
  Eigen::MatrixXd hermite_;
  std::vector<Eigen::VectorXd> pops_;
  std::vector<Eigen::VectorXd> motional_;
  EvolutionResult out;
};

void check_normalized(const Eigen::VectorXcd& psi) {
  if (std::abs(psi.norm() - 1.0) > 1e-10) {
    std::ostringstream os;
    os << "initial state is not normalized (norm " << psi.norm() << ")";
    throw ValidationError(os.str());
  }
}

Eigen::VectorXcd propagate(const Propagator& p, const Eigen::VectorXcd& coeff, double tau) {
  const Eigen::VectorXd& e = p.spectrum.energies;
  Eigen::VectorXcd phased(coeff.size());
  for (Index k = 0; k < coeff.size(); ++k) phased(k) = std::polar(1.0, -e(k) * p.rate_scale * tau) * coeff(k);
  return p.spectrum.states * phased;
}

ModelParams interpolate(const ModelParams& a, const ModelParams& b, double s) {
  ModelParams p = a;
  p.omega = a.omega + s * (b.omega - a.omega);
  p.g = a.g + s * (b.g - a.g);
  p.omega0 = a.omega0 + s * (b.omega0 - a.omega0);
  p.g_eps = a.g_eps + s * (b.g_eps - a.g_eps);
  p.g2 = a.g2 + s * (b.g2 - a.g2);
  return p;
}

Eigen::VectorXcd ground_vector(const OperatorMatrix& h) {
  EigenOptions opt;
  opt.count = 1;
  return hermitian_eigensolve(h, opt).states.col(0);
}

}  // namespace

Eigen::VectorXcd prepare_state(const InitialState& initial, const BasisTag& basis) {
  const Index dim = std::visit(
      [](const auto& b) -> Index {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, BasisSpec>) {
          return b.dim();
        } else if constexpr (std::is_same_v<T, GridSpinBasis>) {
          return static_cast<Index>(b.n_points) * b.F.dim();
        } else {
          throw ValidationError("dynamics: operator carries no basis label");
        }
      },
      basis);
  const int d = spin_dim(basis);
  const auto* fock = std::get_if<BasisSpec>(&basis);

  if (const auto* s = std::get_if<FockSpinState>(&initial)) {
    if (!fock) throw ValidationError("Fock-spin initial states need a Fock basis");
    if (s->n < 0 || s->n >= fock->fock_cutoff || s->spin_index < 0 || s->spin_index >= d) {
      throw ValidationError("initial Fock-spin label out of range");
    }
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(dim);
    psi(fock->index(s->n, s->spin_index)) = 1.0;
    return psi;
  }
  if (const auto* c = std::get_if<CoherentState>(&initial)) {
    if (!fock) throw ValidationError("coherent initial states need a Fock basis");
    if (c->spin_index < 0 || c->spin_index >= d) throw ValidationError("initial spin index out of range");
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(dim);
    cplx amp = std::exp(-0.5 * std::norm(c->alpha));
    for (int n = 0; n < fock->fock_cutoff; ++n) {
      psi(fock->index(n, c->spin_index)) = amp;
      amp *= c->alpha / std::sqrt(static_cast<double>(n + 1));
    }
    const double truncated = 1.0 - psi.squaredNorm();
    if (truncated > 1e-10) {
      std::ostringstream os;
      os << "coherent state loses weight " << truncated << " to the Fock cutoff " << fock->fock_cutoff;
      throw ValidationError(os.str());
    }
    return psi / psi.norm();
  }
  if (const auto* g = std::get_if<GroundState>(&initial)) {
    const Built b = build_segment(g->hamiltonian);
    if (!(b.h.basis() == basis)) throw ValidationError("ground-state Hamiltonian uses a different basis");
    return ground_vector(b.h);
  }
  const auto& e = std::get<ExplicitState>(initial);
  if (e.amplitudes.size() != dim) throw ValidationError("explicit initial state has the wrong dimension");
  check_normalized(e.amplitudes);
  return e.amplitudes;
}

EvolutionResult evolve_constant(const OperatorMatrix& h, const Eigen::VectorXcd& psi0, const std::vector<double>& times,
                                double rate_scale, const MotionalFrame& frame) {
  if (psi0.size() != h.dim()) throw ValidationError("evolve_constant: state dimension does not match H");
  check_normalized(psi0);
  if (!h.hermitian() && h.hermiticity_defect() > 1e-12 * h.max_abs()) {
    throw ValidationError("evolve_constant: H is not Hermitian");
  }
  Built b{h, rate_scale, frame};
  const Propagator p = diagonalize(std::move(b));
  const Eigen::VectorXcd coeff = p.spectrum.states.adjoint() * psi0;
  Recorder rec(h.basis(), frame, psi0);
  for (double t : times) rec.record(t, propagate(p, coeff, t), p.h, rate_scale);
  return rec.finish();
}

EvolutionResult run_protocol(const QuenchProtocol& protocol, double sample_rate) {
  if (protocol.segments.empty()) throw ValidationError("protocol needs at least one segment");
  if (!(sample_rate > 0.0)) throw ValidationError("sample rate must be positive");
  double total = 0.0;
  for (std::size_t k = 0; k < protocol.segments.size(); ++k) {
    const double d = protocol.segments[k].duration;
    if (!(d >= 0.0) || !std::isfinite(d)) {
      throw ValidationError(prefixed(static_cast<int>(k), "duration must be non-negative"));
    }
    total += d;
  }

  std::vector<double> times;
  const auto n_samples = static_cast<long long>(std::floor(total * sample_rate * (1.0 + 1e-12)));
  for (long long k = 0; k <= n_samples; ++k) times.push_back(static_cast<double>(k) / sample_rate);
  if (total - times.back() > 1e-12 * std::max(total, 1.0)) times.push_back(total);

  std::vector<Built> built;
  built.reserve(protocol.segments.size());
  for (std::size_t k = 0; k < protocol.segments.size(); ++k) {
    built.push_back(with_segment(static_cast<int>(k), [&] { return build_segment(protocol.segments[k].hamiltonian); }));
    if (k > 0 && !(built[k].h.basis() == built[0].h.basis())) {
      throw ValidationError(prefixed(static_cast<int>(k), "basis differs from segment 0"));
    }
  }
  Eigen::VectorXcd psi =
      with_segment(0, [&] { return prepare_state(protocol.initial, built[0].h.basis()); });

  Recorder rec(built[0].h.basis(), built[0].frame, psi);
  std::size_t next = 0;
  double t0 = 0.0;
  const std::size_t last = protocol.segments.size() - 1;
  for (std::size_t k = 0; k <= last; ++k) {
    const double t1 = t0 + protocol.segments[k].duration;
    const bool owns_samples = next < times.size() && (times[next] < t1 || k == last);
    if (!owns_samples && protocol.segments[k].duration == 0.0) continue;
    const Propagator p = with_segment(static_cast<int>(k), [&] { return diagonalize(built[k]); });
    const Eigen::VectorXcd coeff = p.spectrum.states.adjoint() * psi;
    while (next < times.size() && (times[next] < t1 || k == last)) {
      rec.record(times[next], propagate(p, coeff, times[next] - t0), p.h, p.rate_scale);
      ++next;
    }
    psi = propagate(p, coeff, t1 - t0);
    t0 = t1;
  }
  return rec.finish();
}

Eigen::MatrixXcd reduced_spin_density(const BasisSpec& basis, const Eigen::VectorXcd& psi) {
  if (psi.size() != basis.dim()) throw ValidationError("reduced_spin_density: dimension mismatch");
  const int d = basis.F.dim();
  Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> amp(psi.data(),
                                                                                           basis.fock_cutoff, d);
  // rho_{s s'} = sum_n c_{n s} conj(c_{n s'})
  return amp.transpose() * amp.conjugate();
}

double spin_entropy(const BasisSpec& basis, const Eigen::VectorXcd& psi) {
  const Eigen::MatrixXcd rho = reduced_spin_density(basis, psi);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho);
  double s = 0.0;
  for (Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double p = es.eigenvalues()(i);
    if (p > 1e-300) s -= p * std::log(p);
  }
  return s;
}

RampResult adiabatic_ramp(const ModelParams& from, const ModelParams& to, double total_time, int n_steps) {
  if (n_steps < 10) throw ValidationError("adiabatic_ramp: n_steps must be >= 10");
  if (!(total_time >= 0.0) || !std::isfinite(total_time)) {
    throw ValidationError("adiabatic_ramp: total time must be non-negative");
  }
  if (!(from.F == to.F) || from.fock_cutoff != to.fock_cutoff) {
    throw ValidationError("adiabatic_ramp: endpoints must share F and the Fock cutoff");
  }
  const BasisSpec basis = from.basis();
  Eigen::VectorXcd psi = ground_vector(build_generalized(from));
  Recorder rec(BasisTag{basis}, {}, psi);
  const double dt = total_time / n_steps;
  rec.record(0.0, psi, build_generalized(from), 1.0);
  for (int k = 0; k < n_steps; ++k) {
    if (dt > 0.0) {
      const Propagator p = diagonalize({build_generalized(interpolate(from, to, (k + 0.5) / n_steps)), 1.0, {}});
      psi = propagate(p, p.spectrum.states.adjoint() * psi, dt);
    }
    rec.record((k + 1) * dt, psi, build_generalized(interpolate(from, to, static_cast<double>(k + 1) / n_steps)), 1.0);
  }
  RampResult r;
  r.evolution = rec.finish();
  r.final_overlap = std::min(1.0, std::norm(ground_vector(build_generalized(to)).dot(psi)));
  r.spin_entropy = spin_entropy(basis, psi);
  return r;
}

}  // namespace qrm
