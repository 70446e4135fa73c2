#include "qrm/compare.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "qrm/errors.hpp"

namespace qrm {

std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
  // Hungarian algorithm with potentials, 1-based internally.
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw ValidationError("solve_assignment: cost matrix must be square");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n);
  for (int j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

Matching match_states(const Eigen::VectorXd& e_th, const Eigen::MatrixXcd& psi_th, const Eigen::VectorXd& e_exp,
                      const Eigen::MatrixXcd& psi_exp, double dx, int n, double cluster_gap) {
  if (n < 1) throw ValidationError("match_states: n must be >= 1");
  if (e_th.size() < n || e_exp.size() < n || psi_th.cols() != e_th.size() || psi_exp.cols() != e_exp.size()) {
    std::ostringstream os;
    os << "match_states: need " << n << " states on both sides, got " << e_th.size() << " and " << e_exp.size();
    throw ValidationError(os.str());
  }
  if (psi_th.rows() != psi_exp.rows()) throw ValidationError("match_states: wavefunctions live on different grids");

  const Index k = std::min(e_th.size(), e_exp.size());
  const Eigen::VectorXd rt = e_th.head(k).array() - e_th(0);
  const Eigen::VectorXd rx = e_exp.head(k).array() - e_exp(0);
  const double span = rt(n - 1) > 0.0 ? rt(n - 1) : 1.0;
  const double limit = cluster_gap * span;

  std::vector<std::pair<Index, Index>> clusters;  // [first, last]
  clusters.push_back({0, 0});
  for (Index i = 1; i < k; ++i) {
    if (rt(i) - rt(i - 1) < limit || rx(i) - rx(i - 1) < limit) {
      clusters.back().second = i;
    } else {
      clusters.push_back({i, i});
    }
  }

  Matching m;
  m.partner.assign(k, 0);
  m.overlap2.assign(k, 0.0);
  m.infidelity.assign(k, 1.0);
  m.cluster.assign(k, 0);
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    const auto [first, last] = clusters[c];
    const Index size = last - first + 1;
    const Eigen::MatrixXcd o = dx * psi_th.middleCols(first, size).adjoint() * psi_exp.middleCols(first, size);
    const Eigen::MatrixXd o2 = o.cwiseAbs2();
    const std::vector<int> assign = solve_assignment(-o2);
    const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(o, Eigen::ComputeFullU);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double fidelity = std::clamp(sv.squaredNorm() / static_cast<double>(size), 0.0, 1.0);
    // Any basis of an unresolved cluster is an eigenbasis, so per-state
    // overlaps use the experimental basis rotated onto the theory one:
    // o W with W = V U^H gives U S U^H.
    const Eigen::MatrixXcd aligned = svd.matrixU() * sv.asDiagonal() * svd.matrixU().adjoint();
    for (Index i = 0; i < size; ++i) {
      m.partner[first + i] = first + assign[i];
      m.overlap2[first + i] = std::min(size > 1 ? std::norm(aligned(i, i)) : o2(i, assign[i]), 1.0);
      m.infidelity[first + i] = 1.0 - fidelity;
      m.cluster[first + i] = static_cast<int>(c);
    }
  }
  return m;
}

EnergyDiscrepancy mean_energy_discrepancy(const std::vector<StatePair>& pairs, double zero_tol) {
  EnergyDiscrepancy out;
  const std::size_t n = pairs.size();
  if (n < 2) return out;
  const double span = pairs[n - 1].e_th - pairs[0].e_th;
  const double floor = zero_tol * (span > 0.0 ? span : 1.0);
  double sum = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    if (std::abs(pairs[i].e_th) <= floor) {
      out.excluded.push_back(static_cast<int>(i));
      continue;
    }
    sum += std::abs(1.0 - pairs[i].e_exp / pairs[i].e_th);
    ++out.terms;
  }
  out.value = out.terms > 0 ? sum / out.terms : 0.0;
  return out;
}

double mean_infidelity(const std::vector<StatePair>& pairs) {
  if (pairs.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& p : pairs) sum += p.infidelity;
  return sum / static_cast<double>(pairs.size());
}

namespace {

// (grid point, spin) amplitudes flattened position-major.
Eigen::MatrixXcd stack(const std::vector<PositionWavefunction>& states, int spin_dim) {
  if (states.empty()) return {};
  const Index rows = states.front().amplitudes.rows() * spin_dim;
  Eigen::MatrixXcd out(rows, static_cast<Index>(states.size()));
  for (std::size_t k = 0; k < states.size(); ++k) {
    const auto& a = states[k].amplitudes;
    for (Index i = 0; i < a.rows(); ++i)
      for (int s = 0; s < spin_dim; ++s) out(i * spin_dim + s, static_cast<Index>(k)) = a(i, s);
  }
  return out;
}

}  // namespace

ComparisonReport compare_point(const LatticeConfig& config, const ComparisonOptions& options) {
  config.validate();
  if (options.n_states < 2) throw ValidationError("compare: n_states must be >= 2");
  if (options.margin < 0) throw ValidationError("compare: margin must be >= 0");

  ComparisonReport r;
  r.config = config;
  r.n_states = options.n_states;
  r.n_points = options.n_points;
  const int k = options.n_states + options.margin;
  const int d = config.species.F.dim();

  r.effective = extract_effective_params(config);
  const ModelParams seed = reference_model(config, r.effective, 16);
  const CutoffResult cut = check_cutoff_convergence(seed, k, options.cutoff_tol);
  r.model = cut.params;
  r.cutoff_change = cut.max_rel_change;

  const Spectrum th = hermitian_eigensolve(build_generalized(r.model), static_cast<Index>(k));
  const Grid grid = Grid::site(config, options.n_points, 0);
  const double centre = 0.5 * (grid.x_min + grid.x_max);
  const Eigen::MatrixXcd psi_th =
      stack(synthesize_position_states(r.model.basis(), th, centre, r.effective.x0_eff, grid.nodes()), d);

  const LatticeSpectrum exp = lattice_spectrum(config, grid, k, options.method);
  const Eigen::VectorXd e_exp = exp.angular_energies();
  const Matching m = match_states(th.energies, psi_th, e_exp, exp.wavefunctions(), grid.dx(), options.n_states,
                                  options.cluster_gap);

  r.pairs.resize(options.n_states);
  for (int i = 0; i < options.n_states; ++i) {
    StatePair& p = r.pairs[i];
    p.e_th = th.energies(i) - th.energies(0);
    p.e_exp = e_exp(m.partner[i]) - e_exp(0);
    p.overlap2 = m.overlap2[i];
    p.infidelity = m.infidelity[i];
    p.cluster = m.cluster[i];
  }
  const EnergyDiscrepancy de = mean_energy_discrepancy(r.pairs, options.cluster_gap);
  for (int i : de.excluded) r.pairs[i].energy_excluded = true;
  r.delta_E_bar = de.value;
  r.energy_terms = de.terms;
  r.energy_excluded = de.excluded;
  r.infidelity_bar = mean_infidelity(r.pairs);
  r.ok = true;
  return r;
}

std::vector<ComparisonReport> sweep(const SweepSpec& spec, const ComparisonOptions& options) {
  struct Job {
    double depth;
    double ratio;
  };
  std::vector<Job> jobs;
  for (double v0 : spec.depths)
    for (double ratio : spec.ratios) jobs.push_back({v0, ratio});
  std::stable_sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) {
    return a.depth != b.depth ? a.depth < b.depth : a.ratio < b.ratio;
  });

  std::vector<ComparisonReport> out(jobs.size());
  auto run = [&](std::size_t idx) {
    const Job& job = jobs[idx];
    LatticeConfig cfg = spec.base;
    cfg.V0 = job.depth;
    ComparisonReport& r = out[idx];
    r.target_ratio = job.ratio;
    r.n_states = options.n_states;
    r.n_points = options.n_points;
    try {
      if (!(job.ratio >= 0.0)) throw DomainError("sweep: ratios must be non-negative");
      cfg.Bx = amplitude_for_target_ratio(cfg, job.ratio);
      if (spec.Bz) {
        cfg.Bz = *spec.Bz;
      } else {
        cfg.Bz = field_for_tls_frequency(extract_effective_params(cfg).omega_eff, cfg.species.gF);
      }
      r = compare_point(cfg, options);
      r.target_ratio = job.ratio;
    } catch (const std::exception& e) {
      r.ok = false;
      r.config = cfg;
      r.error = e.what();
      r.delta_E_bar = std::numeric_limits<double>::quiet_NaN();
      r.infidelity_bar = std::numeric_limits<double>::quiet_NaN();
    }
  };

  unsigned threads = options.threads > 0 ? static_cast<unsigned>(options.threads) : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(jobs.size())));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) run(i);
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace qrm
