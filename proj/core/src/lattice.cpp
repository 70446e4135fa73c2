#include "qrm/lattice.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "qrm/errors.hpp"

namespace qrm {

namespace {

constexpr double kPi = constants::pi;

int sign_of(double v) { return v < 0.0 ? -1 : 1; }

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Site centre in units of 1/k_t.
double site_centre(int site) { return site * kPi; }

int nearest_site(const LatticeConfig& c, double x_centre) {
  return static_cast<int>(std::lround(x_centre / (0.5 * c.lambda_t)));
}

// Stretched-branch potential V0/2 (1 - cos 2u) - C sin(2 kappa u + phase) in
// E_r, with u = k_t x.
struct Branch {
  double V0;
  double kappa;
  double phase;
  double C;
  double u_c = 0.0;  // site centre; the trap terms use u - u_c to stay exact

  double d1(double u) const {
    return V0 * std::sin(2.0 * (u - u_c)) - 2.0 * kappa * C * std::cos(2.0 * kappa * u + phase);
  }
  double d2(double u) const {
    return 2.0 * V0 * std::cos(2.0 * (u - u_c)) + 4.0 * kappa * kappa * C * std::sin(2.0 * kappa * u + phase);
  }
};

struct Extraction {
  bool ok = false;
  double u_star = 0.0;  // measured from the site centre
  double omega = 0.0;   // E_r / hbar
  double g = 0.0;       // E_r / hbar
  double curvature = 0.0;
};

Extraction extract_dimensionless(Branch b, double u_c, double F) {
  b.u_c = u_c;
  constexpr int kScanSteps = 20000;
  constexpr double kTol = 2.0 * kPi * 1e-12;
  Extraction out;
  const double slope0 = b.d1(u_c);
  double u_star = u_c;
  if (slope0 != 0.0) {
    const double dir = slope0 > 0.0 ? -1.0 : 1.0;
    const double h = 0.5 * kPi / kScanSteps;
    double lo = u_c;
    double hi = u_c;
    bool found = false;
    for (int i = 1; i <= kScanSteps; ++i) {
      const double u = u_c + dir * h * i;
      if (dir * b.d1(u) >= 0.0) {
        hi = u;
        lo = u - dir * h;
        found = true;
        break;
      }
    }
    if (!found) return out;
    // lo: still downhill, hi: uphill or flat.
    while (std::abs(hi - lo) > kTol) {
      const double mid = 0.5 * (lo + hi);
      if (dir * b.d1(mid) < 0.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    u_star = 0.5 * (lo + hi);
  }
  const double curv = b.d2(u_star);
  if (!(curv > 0.0)) return out;
  out.ok = true;
  out.u_star = u_star - u_c;
  out.curvature = curv;
  // M = 1/2 in these units.
  out.omega = std::sqrt(2.0 * curv);
  const double x0 = 1.0 / std::sqrt(out.omega);
  out.g = std::abs(out.u_star) * out.omega / (4.0 * F * x0);
  return out;
}

Branch branch_for(const LatticeConfig& c, double C) {
  return {c.V0, c.k_c() / c.k_t(), c.phase, C, 0.0};
}

// Branch amplitude F |g_F mu_B B_x| / E_r.
double branch_amplitude(const LatticeConfig& c) { return c.species.F.value() * std::abs(c.zeeman_per_tesla() * c.Bx); }

double bx_from_amplitude(const LatticeConfig& c, double C) {
  const double bx = C / (c.species.F.value() * std::abs(c.zeeman_per_tesla()));
  return c.Bx < 0.0 ? -bx : bx;
}

// Solves metric(C) = target for the first crossing along increasing C.
template <class Metric>
double solve_amplitude(const LatticeConfig& c, double target, double guess, const char* what, Metric metric) {
  double lo = 0.0;
  double hi = std::max(guess, 1e-12);
  double best = 0.0;
  int steps = 0;
  while (true) {
    const Extraction e = extract_dimensionless(branch_for(c, hi), 0.0, c.species.F.value());
    const double m = e.ok ? metric(e) : -1.0;
    if (!e.ok || m < best || ++steps > 400) {
      std::ostringstream os;
      os << "no field amplitude reaches " << what << " = " << target << "; largest attainable value is about "
         << best;
      throw DomainError(os.str());
    }
    best = m;
    if (m >= target) break;
    lo = hi;
    hi *= 1.5;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    const Extraction e = extract_dimensionless(branch_for(c, mid), 0.0, c.species.F.value());
    if (e.ok && metric(e) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::string_view to_string(LatticeGeometry g) {
  switch (g) {
    case LatticeGeometry::LinThetaLin:
      return "LinThetaLin";
    case LatticeGeometry::TwoLattice2to1:
      return "TwoLattice2to1";
    case LatticeGeometry::TwoLattice3to2:
      return "TwoLattice3to2";
  }
  return "?";
}

LatticeGeometry geometry_from_string(std::string_view name) {
  for (auto g : {LatticeGeometry::LinThetaLin, LatticeGeometry::TwoLattice2to1, LatticeGeometry::TwoLattice3to2}) {
    if (name == to_string(g)) return g;
  }
  throw ValidationError("unknown lattice configuration '" + std::string(name) +
                        "' (expected LinThetaLin, TwoLattice2to1 or TwoLattice3to2)");
}

double wavelength_ratio(LatticeGeometry g) {
  switch (g) {
    case LatticeGeometry::LinThetaLin:
      return 1.0;
    case LatticeGeometry::TwoLattice2to1:
      return 2.0;
    case LatticeGeometry::TwoLattice3to2:
      return 1.5;
  }
  return 1.0;
}

void LatticeConfig::validate() const {
  species.validate();
  if (!(lambda_t > 0.0) || !(lambda_c > 0.0)) throw DomainError("lattice: wavelengths must be positive");
  if (!(V0 > 0.0) || !std::isfinite(V0)) throw DomainError("lattice: V0 must be positive");
  for (double v : {Bx, Bz, eps, phase}) {
    if (!std::isfinite(v)) throw DomainError("lattice: fields and phase must be finite");
  }
  const double expected = wavelength_ratio(configuration);
  const double actual = lambda_t / lambda_c;
  if (std::abs(actual - expected) > 1e-9 * expected) {
    std::ostringstream os;
    os.precision(12);
    os << "lattice: lambda_t / lambda_c = " << actual << " is inconsistent with configuration "
       << to_string(configuration) << " (expected " << expected << ")";
    throw ValidationError(os.str());
  }
}

double LatticeConfig::zeeman_per_tesla() const { return species.gF * constants::mu_B / recoil_energy(); }

void Grid::validate() const {
  if (n_points < 128 || !is_power_of_two(n_points)) {
    throw ValidationError("grid: n_points must be a power of two >= 128, got " + std::to_string(n_points));
  }
  if (!(x_max > x_min)) throw ValidationError("grid: x_max must exceed x_min");
}

Grid Grid::site(const LatticeConfig& config, int n_points, int site) {
  const double centre = site * 0.5 * config.lambda_t;
  Grid g{centre - 0.25 * config.lambda_t, centre + 0.25 * config.lambda_t, n_points};
  g.validate();
  return g;
}

PotentialSample potential_profile(const LatticeConfig& config, double x) {
  const double er = config.recoil_energy();
  PotentialSample s;
  s.scalar = 0.5 * config.V0 * er * (1.0 - std::cos(2.0 * config.k_t() * x));
  s.field_x = config.Bx * std::sin(2.0 * config.k_c() * x + config.phase) + config.eps;
  return s;
}

namespace {

void check_site_grid(const LatticeConfig& config, const Grid& grid) {
  grid.validate();
  const double half = 0.5 * config.lambda_t;
  const double centre = 0.5 * (grid.x_min + grid.x_max);
  const int site = nearest_site(config, centre);
  const double tol = 1e-9 * config.lambda_t;
  if (std::abs(grid.x_max - grid.x_min - half) > tol || std::abs(centre - site * half) > tol) {
    std::ostringstream os;
    os << "grid [" << grid.x_min << ", " << grid.x_max << "] m does not span one trapping site; expected ["
       << site * half - 0.5 * half << ", " << site * half + 0.5 * half << "] m";
    throw ValidationError(os.str());
  }
}

}  // namespace

OperatorMatrix build_lattice_hamiltonian(const LatticeConfig& config, const Grid& grid) {
  config.validate();
  check_site_grid(config, grid);

  const Spin F = config.species.F;
  const int d = F.dim();
  const int n = grid.n_points;
  const double kt = config.k_t();
  const double du = grid.dx() * kt;
  const double kin = 1.0 / (du * du);
  const double c = config.zeeman_per_tesla();
  const double bz = c * config.Bz;
  const auto spin = spin_operators(F);
  const Eigen::MatrixXd fx = spin.Fx.dense().real();

  BandedSymmetric h(static_cast<Index>(n) * d, d);
  for (int i = 0; i < n; ++i) {
    const double x = grid.x(i);
    const PotentialSample v = potential_profile(config, x);
    const double scalar = 0.5 * config.V0 * (1.0 - std::cos(2.0 * kt * x));
    const double bxf = c * v.field_x;
    for (int s = 0; s < d; ++s) {
      const Index row = static_cast<Index>(i) * d + s;
      h.lower(row, row) = 2.0 * kin + scalar + bz * F.m(s);
      for (int t = 0; t < s; ++t) {
        if (fx(s, t) != 0.0) h.lower(row, static_cast<Index>(i) * d + t) = bxf * fx(s, t);
      }
      if (i + 1 < n) h.lower(row + d, row) = -kin;
    }
  }
  GridSpinBasis basis{n, F, grid.x(0), grid.dx()};
  return OperatorMatrix(std::move(h), basis);
}

double lattice_spectral_lower_bound(const LatticeConfig& config, const Grid& grid) {
  const double F = config.species.F.value();
  const double c = config.zeeman_per_tesla();
  const double kt = config.k_t();
  double bound = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid.n_points; ++i) {
    const double x = grid.x(i);
    const double scalar = 0.5 * config.V0 * (1.0 - std::cos(2.0 * kt * x));
    const double bx = c * potential_profile(config, x).field_x;
    // Eigenvalues of a F_x + b F_z are m sqrt(a^2 + b^2).
    bound = std::min(bound, scalar - F * std::hypot(bx, c * config.Bz));
  }
  return bound;
}

Eigen::MatrixXcd LatticeSpectrum::wavefunctions() const { return spectrum.states / std::sqrt(basis.dx); }

Eigen::VectorXd LatticeSpectrum::angular_energies() const {
  return spectrum.energies * (recoil_energy / constants::hbar);
}

LatticeSpectrum lattice_spectrum(const LatticeConfig& config, const Grid& grid, int n_states, SolverMethod method) {
  const OperatorMatrix h = build_lattice_hamiltonian(config, grid);
  if (n_states < 1 || n_states > h.dim()) throw ValidationError("lattice_spectrum: n_states out of range");
  EigenOptions opt;
  opt.count = n_states;
  opt.method = method;
  const double bound = lattice_spectral_lower_bound(config, grid);
  opt.shift = bound - 1e-6 * std::max(1.0, std::abs(bound));
  LatticeSpectrum out;
  out.spectrum = hermitian_eigensolve(h, opt);
  out.basis = std::get<GridSpinBasis>(h.basis());
  out.recoil_energy = config.recoil_energy();
  return out;
}

EffectiveParams extract_effective_params(const LatticeConfig& config, int site) {
  config.validate();
  const double F = config.species.F.value();
  const double u_c = site_centre(site);
  const Extraction e = extract_dimensionless(branch_for(config, branch_amplitude(config)), u_c, F);
  if (!e.ok) {
    std::ostringstream os;
    os << "effective parameters: the stretched branch has no interior minimum in site " << site
       << " (B_x = " << config.Bx << " T merges it with a neighbour)";
    throw DomainError(os.str());
  }
  const double er = config.recoil_energy();
  const double kt = config.k_t();
  EffectiveParams p;
  p.omega_eff = e.omega * er / constants::hbar;
  p.g_eff = e.g * er / constants::hbar;
  p.x_star = e.u_star / kt;
  p.curvature = e.curvature * er * kt * kt;
  p.branch = -F * sign_of(config.species.gF * config.Bx);
  p.x0_eff = oscillator_length(p.omega_eff, config.species);
  const double gradient = config.species.gF * config.Bx * std::cos(2.0 * config.k_c() / kt * u_c + config.phase);
  p.g_sign = std::abs(gradient) > 1e-12 * std::abs(config.species.gF * config.Bx) ? sign_of(gradient) : 1;
  return p;
}

double amplitude_for_target_g(const LatticeConfig& config, double g_target) {
  config.validate();
  if (!(g_target >= 0.0)) throw DomainError("amplitude_for_target_g: target must be non-negative");
  if (g_target == 0.0) return 0.0;
  if (std::abs(std::cos(config.phase)) < 1e-12)
    throw DomainError("amplitude_for_target_g: gradient node at the site centre gives no linear coupling");
  const double er = config.recoil_energy();
  const double target = g_target * constants::hbar / er;
  const double F = config.species.F.value();
  const double kappa = config.k_c() / config.k_t();
  const double x0 = 1.0 / std::sqrt(2.0 * std::sqrt(config.V0));
  const double guess = 0.5 * target * F / (kappa * x0 * std::max(std::abs(std::cos(config.phase)), 1e-3));
  const double C = solve_amplitude(config, target, guess, "g_eff (E_r / hbar)", [](const Extraction& e) { return e.g; });
  return bx_from_amplitude(config, C);
}

double amplitude_for_target_ratio(const LatticeConfig& config, double ratio) {
  config.validate();
  if (!(ratio >= 0.0)) throw DomainError("amplitude_for_target_ratio: ratio must be non-negative");
  if (ratio == 0.0) return 0.0;
  if (std::abs(std::cos(config.phase)) < 1e-12)
    throw DomainError("amplitude_for_target_ratio: gradient node at the site centre gives no linear coupling");
  const double F = config.species.F.value();
  const double kappa = config.k_c() / config.k_t();
  const double w = 2.0 * std::sqrt(config.V0);
  const double guess =
      0.5 * ratio * w * F * std::sqrt(w) / (kappa * std::max(std::abs(std::cos(config.phase)), 1e-3));
  const double C =
      solve_amplitude(config, ratio, guess, "g_eff / omega_eff", [](const Extraction& e) { return e.g / e.omega; });
  return bx_from_amplitude(config, C);
}

std::vector<SiteMinimum> site_minima(const LatticeConfig& config, int n_sites) {
  config.validate();
  if (n_sites < 1) throw ValidationError("site_minima: n_sites must be >= 1");
  std::vector<SiteMinimum> out;
  out.reserve(n_sites);
  for (int j = 0; j < n_sites; ++j) {
    const double x = j * 0.5 * config.lambda_t;
    const double gradient = std::cos(2.0 * config.k_c() * x + config.phase);
    out.push_back({x, std::abs(gradient) > 1e-9 ? sign_of(gradient) : 1});
  }
  return out;
}

QuadraticParams extract_quadratic_params(const LatticeConfig& config) {
  config.validate();
  QuadraticParams q;
  q.omega = trap_frequency(config.V0, config.recoil_energy());
  q.x0 = oscillator_length(q.omega, config.species);
  const double kc2 = 2.0 * config.k_c();
  q.bxx = -config.Bx * kc2 * kc2 * std::sin(config.phase);
  q.g2 = quadratic_coupling_strength(q.bxx, config.species.gF, q.x0);
  return q;
}

ModelParams reference_model(const LatticeConfig& config, const EffectiveParams& eff, int fock_cutoff) {
  ModelParams p;
  p.omega = eff.omega_eff;
  p.g = eff.g_sign * eff.g_eff;
  p.omega0 = tls_frequency(config.Bz, config.species.gF).signed_value();
  p.g_eps = tls_frequency(config.eps, config.species.gF).signed_value();
  p.F = config.species.F;
  p.fock_cutoff = fock_cutoff;
  return p;
}

}  // namespace qrm
