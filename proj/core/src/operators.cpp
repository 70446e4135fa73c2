#include "qrm/operators.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <unsupported/Eigen/KroneckerProduct>

#include "qrm/errors.hpp"

namespace qrm {

void BasisSpec::validate() const {
  if (fock_cutoff < 2) throw DomainError("Fock cutoff must be at least 2");
}

BandedSymmetric::BandedSymmetric(Index n, int bandwidth)
    : bands_(Eigen::MatrixXd::Zero(bandwidth + 1, n)) {
  if (n < 1 || bandwidth < 0) throw DomainError("BandedSymmetric: invalid shape");
}

double BandedSymmetric::operator()(Index i, Index j) const {
  if (i < j) std::swap(i, j);
  if (i - j > bandwidth()) return 0.0;
  return bands_(i - j, j);
}

Eigen::MatrixXd BandedSymmetric::apply(const Eigen::MatrixXd& x) const {
  const Index n = size();
  const int bw = bandwidth();
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, x.cols());
  for (Index j = 0; j < n; ++j) {
    y.row(j).noalias() += bands_(0, j) * x.row(j);
    for (int d = 1; d <= bw && j + d < n; ++d) {
      const double a = bands_(d, j);
      if (a == 0.0) continue;
      y.row(j + d).noalias() += a * x.row(j);
      y.row(j).noalias() += a * x.row(j + d);
    }
  }
  return y;
}

Eigen::MatrixXd BandedSymmetric::to_dense() const {
  const Index n = size();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    for (int d = 0; d <= bandwidth() && j + d < n; ++d) {
      m(j + d, j) = bands_(d, j);
      m(j, j + d) = bands_(d, j);
    }
  }
  return m;
}

double BandedSymmetric::inf_norm() const {
  const Index n = size();
  Eigen::VectorXd rows = Eigen::VectorXd::Zero(n);
  for (Index j = 0; j < n; ++j) {
    rows(j) += std::abs(bands_(0, j));
    for (int d = 1; d <= bandwidth() && j + d < n; ++d) {
      rows(j) += std::abs(bands_(d, j));
      rows(j + d) += std::abs(bands_(d, j));
    }
  }
  return rows.maxCoeff();
}

double BandedSymmetric::gershgorin_lower() const {
  const Index n = size();
  Eigen::VectorXd radius = Eigen::VectorXd::Zero(n);
  for (Index j = 0; j < n; ++j) {
    for (int d = 1; d <= bandwidth() && j + d < n; ++d) {
      radius(j) += std::abs(bands_(d, j));
      radius(j + d) += std::abs(bands_(d, j));
    }
  }
  return (bands_.row(0).transpose() - radius).minCoeff();
}

BandedCholesky::BandedCholesky(const BandedSymmetric& a, double shift)
    : l_(a.bands()), bw_(a.bandwidth()) {
  const Index n = a.size();
  for (Index j = 0; j < n; ++j) l_(0, j) -= shift;
  for (Index j = 0; j < n; ++j) {
    double diag = l_(0, j);
    for (Index k = std::max<Index>(0, j - bw_); k < j; ++k) {
      const double v = l_(j - k, k);
      diag -= v * v;
    }
    if (!(diag > 0.0)) {
      std::ostringstream os;
      os << "banded Cholesky: shifted matrix not positive definite at row " << j
         << " (shift " << shift << ")";
      throw ValidationError(os.str());
    }
    diag = std::sqrt(diag);
    l_(0, j) = diag;
    for (Index i = j + 1; i <= std::min(n - 1, j + bw_); ++i) {
      double s = l_(i - j, j);
      for (Index k = std::max<Index>(0, i - bw_); k < j; ++k) s -= l_(i - k, k) * l_(j - k, k);
      l_(i - j, j) = s / diag;
    }
  }
}

void BandedCholesky::solve_in_place(Eigen::MatrixXd& rhs) const {
  const Index n = l_.cols();
  // L y = b
  for (Index i = 0; i < n; ++i) {
    for (Index k = std::max<Index>(0, i - bw_); k < i; ++k) {
      rhs.row(i).noalias() -= l_(i - k, k) * rhs.row(k);
    }
    rhs.row(i) /= l_(0, i);
  }
  // L^T x = y
  for (Index i = n - 1; i >= 0; --i) {
    for (Index k = i + 1; k <= std::min(n - 1, i + bw_); ++k) {
      rhs.row(i).noalias() -= l_(k - i, i) * rhs.row(k);
    }
    rhs.row(i) /= l_(0, i);
  }
}

OperatorMatrix::OperatorMatrix(Eigen::MatrixXcd m, BasisTag basis, bool hermitian)
    : storage_(std::move(m)), basis_(std::move(basis)), hermitian_(hermitian) {
  const auto& d = std::get<Eigen::MatrixXcd>(storage_);
  if (d.rows() != d.cols()) throw ValidationError("OperatorMatrix: matrix must be square");
  if (hermitian_ && hermiticity_defect() > 1e-12 * max_abs()) {
    throw ValidationError("OperatorMatrix: matrix flagged Hermitian is not Hermitian");
  }
}

OperatorMatrix::OperatorMatrix(BandedSymmetric m, BasisTag basis)
    : storage_(std::move(m)), basis_(std::move(basis)), hermitian_(true) {}

Index OperatorMatrix::dim() const {
  if (is_banded()) return banded().size();
  return dense().rows();
}

const Eigen::MatrixXcd& OperatorMatrix::dense() const {
  if (is_banded()) throw ValidationError("OperatorMatrix: banded storage has no dense view");
  return std::get<Eigen::MatrixXcd>(storage_);
}

const BandedSymmetric& OperatorMatrix::banded() const {
  if (!is_banded()) throw ValidationError("OperatorMatrix: not banded");
  return std::get<BandedSymmetric>(storage_);
}

Eigen::MatrixXcd OperatorMatrix::to_dense() const {
  if (is_banded()) return banded().to_dense().cast<cplx>();
  return dense();
}

bool OperatorMatrix::is_real() const {
  if (is_banded()) return true;
  return dense().imag().cwiseAbs().maxCoeff() == 0.0;
}

double OperatorMatrix::max_abs() const {
  if (is_banded()) return banded().max_abs();
  if (dense().size() == 0) return 0.0;
  return dense().cwiseAbs().maxCoeff();
}

double OperatorMatrix::norm_bound() const {
  if (is_banded()) return banded().inf_norm();
  return dense().cwiseAbs().rowwise().sum().maxCoeff();
}

double OperatorMatrix::hermiticity_defect() const {
  if (is_banded()) return 0.0;
  const auto& d = dense();
  return (d - d.adjoint()).cwiseAbs().maxCoeff();
}

Eigen::MatrixXcd OperatorMatrix::apply(const Eigen::MatrixXcd& x) const {
  if (!is_banded()) return dense() * x;
  const auto& b = banded();
  Eigen::MatrixXcd out(x.rows(), x.cols());
  out.real() = b.apply(x.real());
  out.imag() = b.apply(x.imag());
  return out;
}

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  return Eigen::kroneckerProduct(a, b).eval();
}

Eigen::MatrixXcd commutator(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  return a * b - b * a;
}

LadderOperators fock_ladder(int fock_cutoff) {
  if (fock_cutoff < 2) throw DomainError("fock_ladder: cutoff must be at least 2");
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(fock_cutoff, fock_cutoff);
  for (int n = 1; n < fock_cutoff; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  Eigen::MatrixXcd adag = a.adjoint();
  return {OperatorMatrix(std::move(a)), OperatorMatrix(std::move(adag))};
}

SpinOperators spin_operators(Spin F) {
  if (F.twice() < 1) throw DomainError("spin_operators: F must be >= 1/2");
  const int d = F.dim();
  const double f = F.value();
  Eigen::MatrixXcd fz = Eigen::MatrixXcd::Zero(d, d);
  Eigen::MatrixXcd fplus = Eigen::MatrixXcd::Zero(d, d);
  for (int s = 0; s < d; ++s) {
    const double m = F.m(s);
    fz(s, s) = m;
    if (s + 1 < d) fplus(s + 1, s) = std::sqrt(f * (f + 1.0) - m * (m + 1.0));
  }
  Eigen::MatrixXcd fminus = fplus.adjoint();
  Eigen::MatrixXcd fx = 0.5 * (fplus + fminus);
  Eigen::MatrixXcd fy = (fplus - fminus) / cplx(0.0, 2.0);
  return {OperatorMatrix(std::move(fx), NoBasis{}, true), OperatorMatrix(std::move(fy), NoBasis{}, true),
          OperatorMatrix(std::move(fz), NoBasis{}, true)};
}

OperatorMatrix parity_operator(const BasisSpec& basis) {
  basis.validate();
  const Index dim = basis.dim();
  Eigen::MatrixXcd p = Eigen::MatrixXcd::Zero(dim, dim);
  for (int n = 0; n < basis.fock_cutoff; ++n) {
    for (int s = 0; s < basis.F.dim(); ++s) {
      // m_F + F = s
      p(basis.index(n, s), basis.index(n, s)) = ((n + s) % 2 == 0) ? 1.0 : -1.0;
    }
  }
  return OperatorMatrix(std::move(p), basis, true);
}

namespace {

constexpr char kDumpMagic[4] = {'Q', 'R', 'M', 'D'};
constexpr std::uint32_t kDumpVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace

void write_matrix_dump(const std::string& path, const OperatorMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  std::uint32_t kind = 0, twice_f = 0;
  std::uint64_t extent = 0;
  if (const auto* b = std::get_if<BasisSpec>(&m.basis())) {
    kind = 1;
    twice_f = b->F.twice();
    extent = b->fock_cutoff;
  } else if (const auto* g = std::get_if<GridSpinBasis>(&m.basis())) {
    kind = 2;
    twice_f = g->F.twice();
    extent = g->n_points;
  }
  out.write(kDumpMagic, 4);
  put(out, kDumpVersion);
  put(out, static_cast<std::uint64_t>(m.dim()));
  put(out, kind);
  put(out, twice_f);
  put(out, extent);
  const Eigen::MatrixXcd d = m.to_dense();
  for (Index j = 0; j < d.cols(); ++j) {
    for (Index i = 0; i < d.rows(); ++i) {
      put(out, d(i, j).real());
      put(out, d(i, j).imag());
    }
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

OperatorMatrix read_matrix_dump(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kDumpMagic, 4) != 0) throw ValidationError("not a matrix dump: " + path);
  const auto version = take<std::uint32_t>(in);
  if (version != kDumpVersion) throw ValidationError("unsupported matrix dump version");
  const auto dim = static_cast<Index>(take<std::uint64_t>(in));
  const auto kind = take<std::uint32_t>(in);
  const auto twice_f = take<std::uint32_t>(in);
  const auto extent = take<std::uint64_t>(in);
  Eigen::MatrixXcd d(dim, dim);
  for (Index j = 0; j < dim; ++j) {
    for (Index i = 0; i < dim; ++i) {
      const double re = take<double>(in);
      const double im = take<double>(in);
      d(i, j) = cplx(re, im);
    }
  }
  if (!in) throw IoError("truncated matrix dump: " + path);
  BasisTag basis = NoBasis{};
  if (kind == 1) {
    basis = BasisSpec{static_cast<int>(extent), Spin::from_twice(static_cast<int>(twice_f))};
  } else if (kind == 2) {
    // Grid geometry is not part of the header.
    basis = GridSpinBasis{static_cast<int>(extent), Spin::from_twice(static_cast<int>(twice_f)), 0.0, 0.0};
  }
  return OperatorMatrix(std::move(d), std::move(basis));
}

}  // namespace qrm
