#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "cpfsim/exec.hpp"

// Dense complex linear algebra sized for Hilbert spaces up to a few thousand
// dimensions. Row-major storage throughout.

namespace cpfsim::qmat {

using cplx = std::complex<double>;
using CVector = std::vector<cplx>;

inline constexpr std::size_t kMaxHilbertDim = 4096;

class CMatrix {
 public:
  CMatrix() = default;
  CMatrix(std::size_t rows, std::size_t cols);
  CMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> data);
  CMatrix(std::initializer_list<std::initializer_list<cplx>> rows);

  static CMatrix identity(std::size_t n);
  static CMatrix zeros(std::size_t rows, std::size_t cols) { return {rows, cols}; }
  static CMatrix diagonal(std::span<const cplx> diag);
  /// |ket><bra|
  static CMatrix outer(std::span<const cplx> ket, std::span<const cplx> bra);
  static CMatrix projector(std::span<const cplx> v) { return outer(v, v); }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  bool is_square() const noexcept { return rows_ == cols_; }

  cplx& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const cplx& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<cplx> data() noexcept { return data_; }
  std::span<const cplx> data() const noexcept { return data_; }

  CMatrix adjoint() const;
  cplx trace() const;
  double max_abs() const;
  bool is_finite() const;

  CMatrix& operator+=(const CMatrix& rhs);
  CMatrix& operator-=(const CMatrix& rhs);
  CMatrix& operator*=(cplx s);

  friend bool operator==(const CMatrix& a, const CMatrix& b) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cplx> data_;
};

CMatrix operator+(CMatrix a, const CMatrix& b);
CMatrix operator-(CMatrix a, const CMatrix& b);
CMatrix operator*(CMatrix a, cplx s);
CMatrix operator*(cplx s, CMatrix a);
/// Matrix product through the parallel kernel.
CMatrix operator*(const CMatrix& a, const CMatrix& b);

/// Serial reference product, i-k-j loop order.
CMatrix matmul_reference(const CMatrix& a, const CMatrix& b);
/// Row-parallel product; bitwise equal to matmul_reference.
CMatrix matmul(const CMatrix& a, const CMatrix& b, Exec exec = Exec::parallel);

/// Tr(a b) without forming the product.
cplx trace_product(const CMatrix& a, const CMatrix& b);
double max_abs_diff(const CMatrix& a, const CMatrix& b);

CMatrix kron(const CMatrix& a, const CMatrix& b, std::size_t max_dim = kMaxHilbertDim);

/// A Hermitian matrix, symmetrized on construction. Inputs further than
/// 1e-10 (relative to max |entry|, floor 1) from Hermitian are rejected.
class HermitianMatrix {
 public:
  explicit HermitianMatrix(CMatrix m);

  const CMatrix& matrix() const noexcept { return m_; }
  std::size_t dim() const noexcept { return m_.rows(); }

 private:
  CMatrix m_;
};

/// Unit-trace positive semidefinite Hermitian matrix.
class DensityMatrix {
 public:
  static constexpr double kTraceTol = 1e-10;
  static constexpr double kPsdTol = 1e-10;

  /// Checks trace and positivity; throws NumericsError on violation.
  explicit DensityMatrix(CMatrix m);
  static DensityMatrix pure(std::span<const cplx> psi);
  static DensityMatrix maximally_mixed(std::size_t d);

  const CMatrix& matrix() const noexcept { return h_.matrix(); }
  std::size_t dim() const noexcept { return h_.dim(); }
  double purity() const;
  double min_eigenvalue() const;

 private:
  HermitianMatrix h_;
};

struct EigenDecomposition {
  std::vector<double> values;  // ascending
  CMatrix vectors;             // columns are eigenvectors
};

EigenDecomposition eig_hermitian(const HermitianMatrix& h);

struct Dims {
  std::size_t system = 1;
  std::size_t environment = 1;
  std::size_t total() const noexcept { return system * environment; }
};

enum class Keep { system, environment };

/// Partial trace over the complementary factor of a (system ⊗ environment)
/// operator. Works on arbitrary (not necessarily normalized) operators.
CMatrix partial_trace(const CMatrix& op, Dims dims, Keep keep);
DensityMatrix partial_trace(const DensityMatrix& rho, Dims dims, Keep keep);

/// exp(-i H t) from one eigendecomposition of H, reusable for any t.
class UnitaryPropagator {
 public:
  explicit UnitaryPropagator(const HermitianMatrix& generator);

  std::size_t dim() const noexcept { return eigenvalues_.size(); }
  std::span<const double> eigenvalues() const noexcept { return eigenvalues_; }
  const CMatrix& eigenvectors() const noexcept { return v_; }

  CMatrix at(double t) const;
  /// U(t) op U(t)^†
  CMatrix conjugate(const CMatrix& op, double t) const;
  /// U(t)^† op U(t)
  CMatrix heisenberg(const CMatrix& op, double t) const;

 private:
  std::vector<double> eigenvalues_;
  CMatrix v_;
  CMatrix v_adj_;
};

DensityMatrix evolve(const UnitaryPropagator& u, double t, const DensityMatrix& rho);

// Common single-qubit objects. |+>, |-> are the sigma_z eigenstates.
CMatrix pauli_x();
CMatrix pauli_y();
CMatrix pauli_z();
CVector ket_plus();
CVector ket_minus();
/// (|+> + sign |->)/sqrt(2)
CVector ket_x(int sign);

}  // namespace cpfsim::qmat
