#pragma once

#include <complex>
#include <string>
#include <variant>

#include <Eigen/Dense>

#include "qrm/units.hpp"

namespace qrm {

using cplx = std::complex<double>;
using Index = Eigen::Index;

// Fock (x) spin product basis, fock-major: index = n * (2F+1) + s, with
// spin index s = 0 <-> m_F = -F.
struct BasisSpec {
  int fock_cutoff = 2;  // states |0> .. |N_f - 1>
  Spin F;

  void validate() const;
  Index dim() const { return static_cast<Index>(fock_cutoff) * F.dim(); }
  Index index(int n, int s) const { return static_cast<Index>(n) * F.dim() + s; }
  friend bool operator==(const BasisSpec&, const BasisSpec&) = default;
};

// Position grid (x) spin, position-major: index = i * (2F+1) + s.
struct GridSpinBasis {
  int n_points = 0;
  Spin F;
  double x_min = 0.0;  // first node
  double dx = 0.0;     // spacing, same length unit as x_min
  friend bool operator==(const GridSpinBasis&, const GridSpinBasis&) = default;
};

struct NoBasis {
  friend bool operator==(const NoBasis&, const NoBasis&) = default;
};

using BasisTag = std::variant<NoBasis, BasisSpec, GridSpinBasis>;

// Real symmetric band matrix, lower storage: bands(d, j) = A(j + d, j).
class BandedSymmetric {
 public:
  BandedSymmetric() = default;
  BandedSymmetric(Index n, int bandwidth);

  Index size() const { return bands_.cols(); }
  int bandwidth() const { return static_cast<int>(bands_.rows()) - 1; }

  // Element access for i >= j and i - j <= bandwidth.
  double& lower(Index i, Index j) { return bands_(i - j, j); }
  double operator()(Index i, Index j) const;

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd to_dense() const;

  double max_abs() const { return bands_.cwiseAbs().maxCoeff(); }
  // max_i sum_j |A_ij|, an upper bound on the spectral norm.
  double inf_norm() const;
  // min_i (A_ii - sum_{j != i} |A_ij|), a lower bound on the spectrum.
  double gershgorin_lower() const;

  const Eigen::MatrixXd& bands() const { return bands_; }

 private:
  Eigen::MatrixXd bands_;
};

// Cholesky factor of (A - shift I) in band storage. Throws ValidationError
// if the shifted matrix is not positive definite.
class BandedCholesky {
 public:
  BandedCholesky(const BandedSymmetric& a, double shift);
  void solve_in_place(Eigen::MatrixXd& rhs) const;

 private:
  Eigen::MatrixXd l_;  // l_(d, j) = L(j + d, j)
  int bw_ = 0;
};

// Dense complex matrix or real symmetric band matrix with a basis label.
class OperatorMatrix {
 public:
  OperatorMatrix() = default;
  // With hermitian = true the invariant max|H - H^dagger| <= 1e-12 max|H| is
  // checked and a ValidationError raised if it fails.
  explicit OperatorMatrix(Eigen::MatrixXcd m, BasisTag basis = NoBasis{}, bool hermitian = false);
  explicit OperatorMatrix(BandedSymmetric m, BasisTag basis = NoBasis{});

  Index dim() const;
  bool is_banded() const { return std::holds_alternative<BandedSymmetric>(storage_); }
  bool hermitian() const { return hermitian_; }
  const BasisTag& basis() const { return basis_; }

  // Dense storage; throws for banded matrices (use to_dense()).
  const Eigen::MatrixXcd& dense() const;
  const BandedSymmetric& banded() const;
  Eigen::MatrixXcd to_dense() const;

  bool is_real() const;
  double max_abs() const;
  double norm_bound() const;
  double hermiticity_defect() const;

  Eigen::MatrixXcd apply(const Eigen::MatrixXcd& x) const;

 private:
  std::variant<Eigen::MatrixXcd, BandedSymmetric> storage_;
  BasisTag basis_ = NoBasis{};
  bool hermitian_ = false;
};

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);
Eigen::MatrixXcd commutator(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

struct LadderOperators {
  OperatorMatrix a;
  OperatorMatrix adag;
};

// Truncated bosonic ladder operators on |0> .. |N_f - 1>.
LadderOperators fock_ladder(int fock_cutoff);

struct SpinOperators {
  OperatorMatrix Fx, Fy, Fz;
};

// Dimensionless angular momentum matrices in the m_F = -F .. F basis.
SpinOperators spin_operators(Spin F);

// exp(i pi a^dagger a) (x) exp(i pi (F_z + F)); diagonal with entries +-1.
OperatorMatrix parity_operator(const BasisSpec& basis);

// Debug dump: 32-byte header then column-major (re, im) pairs.
//   bytes 0-3  magic "QRMD"   4-7  format version (u32)
//   8-15 dim (u64)            16-19 basis kind (u32: 0 none, 1 fock, 2 grid)
//   20-23 2F (u32)            24-31 fock cutoff or grid points (u64)
void write_matrix_dump(const std::string& path, const OperatorMatrix& m);
OperatorMatrix read_matrix_dump(const std::string& path);

}  // namespace qrm
