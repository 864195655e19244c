#include "cpfsim/qmat.hpp"

#include <omp.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cpfsim/errors.hpp"

namespace cpfsim {

void set_worker_count(int threads) {
  if (threads >= 1) omp_set_num_threads(threads);
}

int worker_count() { return omp_get_max_threads(); }

}  // namespace cpfsim

namespace cpfsim::qmat {

namespace {

// Products below this many multiply-adds stay on the calling thread.
constexpr std::size_t kParallelWork = 1u << 15;

void require_same_shape(const CMatrix& a, const CMatrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
  }
}

// One output row of a*b. Shared by both kernels so they agree bitwise.
inline void matmul_row(const CMatrix& a, const CMatrix& b, std::size_t i, cplx* out) {
  const std::size_t inner = a.cols();
  const std::size_t n = b.cols();
  const cplx* arow = a.data().data() + i * inner;
  const cplx* bdata = b.data().data();
  for (std::size_t k = 0; k < inner; ++k) {
    const double ar = arow[k].real();
    const double ai = arow[k].imag();
    if (ar == 0.0 && ai == 0.0) continue;
    const cplx* brow = bdata + k * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double br = brow[j].real();
      const double bi = brow[j].imag();
      out[j] = cplx(out[j].real() + (ar * br - ai * bi), out[j].imag() + (ar * bi + ai * br));
    }
  }
}

void check_product_shape(const CMatrix& a, const CMatrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions " + std::to_string(a.cols()) + " and " +
                     std::to_string(b.rows()) + " differ");
  }
}

Eigen::MatrixXcd to_eigen(const CMatrix& m) {
  Eigen::MatrixXcd out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
  return out;
}

}  // namespace

CMatrix::CMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, cplx(0.0, 0.0)) {}

CMatrix::CMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("CMatrix: " + std::to_string(data_.size()) + " entries for a " +
                     std::to_string(rows_) + "x" + std::to_string(cols_) + " matrix");
  }
}

CMatrix::CMatrix(std::initializer_list<std::initializer_list<cplx>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("CMatrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

CMatrix CMatrix::identity(std::size_t n) {
  CMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

CMatrix CMatrix::diagonal(std::span<const cplx> diag) {
  CMatrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

CMatrix CMatrix::outer(std::span<const cplx> ket, std::span<const cplx> bra) {
  CMatrix m(ket.size(), bra.size());
  for (std::size_t i = 0; i < ket.size(); ++i)
    for (std::size_t j = 0; j < bra.size(); ++j) m(i, j) = ket[i] * std::conj(bra[j]);
  return m;
}

CMatrix CMatrix::adjoint() const {
  CMatrix out(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) out(j, i) = std::conj((*this)(i, j));
  return out;
}

cplx CMatrix::trace() const {
  if (!is_square()) throw ShapeError("trace of a non-square matrix");
  cplx t = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) t += (*this)(i, i);
  return t;
}

double CMatrix::max_abs() const {
  double m = 0.0;
  for (const auto& z : data_) m = std::max(m, std::abs(z));
  return m;
}

bool CMatrix::is_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](const cplx& z) {
    return std::isfinite(z.real()) && std::isfinite(z.imag());
  });
}

CMatrix& CMatrix::operator+=(const CMatrix& rhs) {
  require_same_shape(*this, rhs, "operator+");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += rhs.data_[i];
  return *this;
}

CMatrix& CMatrix::operator-=(const CMatrix& rhs) {
  require_same_shape(*this, rhs, "operator-");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= rhs.data_[i];
  return *this;
}

CMatrix& CMatrix::operator*=(cplx s) {
  for (auto& z : data_) z *= s;
  return *this;
}

CMatrix operator+(CMatrix a, const CMatrix& b) { return a += b; }
CMatrix operator-(CMatrix a, const CMatrix& b) { return a -= b; }
CMatrix operator*(CMatrix a, cplx s) { return a *= s; }
CMatrix operator*(cplx s, CMatrix a) { return a *= s; }
CMatrix operator*(const CMatrix& a, const CMatrix& b) { return matmul(a, b, Exec::parallel); }

CMatrix matmul_reference(const CMatrix& a, const CMatrix& b) {
  check_product_shape(a, b);
  CMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) matmul_row(a, b, i, c.data().data() + i * c.cols());
  return c;
}

CMatrix matmul(const CMatrix& a, const CMatrix& b, Exec exec) {
  const std::size_t work = a.rows() * a.cols() * b.cols();
  if (exec == Exec::serial || work < kParallelWork || omp_in_parallel()) {
    return matmul_reference(a, b);
  }
  check_product_shape(a, b);
  CMatrix c(a.rows(), b.cols());
  const auto rows = static_cast<std::ptrdiff_t>(a.rows());
  cplx* out = c.data().data();
  const std::size_t n = c.cols();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    matmul_row(a, b, static_cast<std::size_t>(i), out + static_cast<std::size_t>(i) * n);
  }
  return c;
}

cplx trace_product(const CMatrix& a, const CMatrix& b) {
  if (a.cols() != b.rows() || a.rows() != b.cols()) throw ShapeError("trace_product: shape mismatch");
  cplx t = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) t += a(i, k) * b(k, i);
  return t;
}

double max_abs_diff(const CMatrix& a, const CMatrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

CMatrix kron(const CMatrix& a, const CMatrix& b, std::size_t max_dim) {
  if (!a.is_finite() || !b.is_finite()) throw NumericsError("kron: non-finite input");
  const std::size_t rows = a.rows() * b.rows();
  const std::size_t cols = a.cols() * b.cols();
  if (rows > max_dim || cols > max_dim) {
    throw CapacityError("kron: result " + std::to_string(rows) + "x" + std::to_string(cols) +
                        " exceeds the Hilbert dimension cap " + std::to_string(max_dim));
  }
  CMatrix out(rows, cols);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const cplx aij = a(i, j);
      if (aij == cplx(0.0, 0.0)) continue;
      for (std::size_t k = 0; k < b.rows(); ++k)
        for (std::size_t l = 0; l < b.cols(); ++l)
          out(i * b.rows() + k, j * b.cols() + l) = aij * b(k, l);
    }
  return out;
}

HermitianMatrix::HermitianMatrix(CMatrix m) : m_(std::move(m)) {
  if (!m_.is_square()) throw ShapeError("HermitianMatrix: matrix is not square");
  if (!m_.is_finite()) throw NumericsError("HermitianMatrix: non-finite entries");
  const double scale = std::max(1.0, m_.max_abs());
  double dev = 0.0;
  const std::size_t n = m_.rows();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) dev = std::max(dev, std::abs(m_(i, j) - std::conj(m_(j, i))));
  if (dev > 1e-10 * scale) {
    throw NumericsError("HermitianMatrix: deviation from Hermiticity " + std::to_string(dev));
  }
  for (std::size_t i = 0; i < n; ++i) {
    m_(i, i) = m_(i, i).real();
    for (std::size_t j = i + 1; j < n; ++j) {
      const cplx avg = 0.5 * (m_(i, j) + std::conj(m_(j, i)));
      m_(i, j) = avg;
      m_(j, i) = std::conj(avg);
    }
  }
}

DensityMatrix::DensityMatrix(CMatrix m) : h_(std::move(m)) {
  const double tr_dev = std::abs(h_.matrix().trace() - 1.0);
  if (tr_dev > kTraceTol) {
    throw NumericsError("DensityMatrix: trace deviates from 1 by " + std::to_string(tr_dev));
  }
  const double lmin = min_eigenvalue();
  if (lmin < -kPsdTol) {
    throw NumericsError("DensityMatrix: negative eigenvalue " + std::to_string(lmin));
  }
}

DensityMatrix DensityMatrix::pure(std::span<const cplx> psi) {
  double norm2 = 0.0;
  for (const auto& z : psi) norm2 += std::norm(z);
  if (norm2 <= 0.0) throw NumericsError("DensityMatrix::pure: zero vector");
  CMatrix p = CMatrix::projector(psi);
  p *= 1.0 / norm2;
  return DensityMatrix(std::move(p));
}

DensityMatrix DensityMatrix::maximally_mixed(std::size_t d) {
  CMatrix m = CMatrix::identity(d);
  m *= 1.0 / static_cast<double>(d);
  return DensityMatrix(std::move(m));
}

double DensityMatrix::purity() const { return trace_product(matrix(), matrix()).real(); }

double DensityMatrix::min_eigenvalue() const {
  if (dim() == 1) return matrix()(0, 0).real();
  return eig_hermitian(h_).values.front();
}

EigenDecomposition eig_hermitian(const HermitianMatrix& h) {
  const std::size_t n = h.dim();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(to_eigen(h.matrix()));
  if (solver.info() != Eigen::Success) {
    throw NumericsError("eig_hermitian: eigensolver did not converge (dim " + std::to_string(n) + ")");
  }
  EigenDecomposition out;
  out.values.resize(n);
  out.vectors = CMatrix(n, n);
  const auto& vals = solver.eigenvalues();
  const auto& vecs = solver.eigenvectors();
  for (std::size_t i = 0; i < n; ++i) {
    out.values[i] = vals(static_cast<Eigen::Index>(i));
    for (std::size_t j = 0; j < n; ++j) {
      out.vectors(i, j) = vecs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  return out;
}

CMatrix partial_trace(const CMatrix& op, Dims dims, Keep keep) {
  const std::size_t ds = dims.system;
  const std::size_t de = dims.environment;
  if (op.rows() != ds * de || op.cols() != ds * de) {
    throw ShapeError("partial_trace: operator is " + std::to_string(op.rows()) + "x" +
                     std::to_string(op.cols()) + ", dims give " + std::to_string(ds * de));
  }
  if (keep == Keep::system) {
    CMatrix out(ds, ds);
    for (std::size_t i = 0; i < ds; ++i)
      for (std::size_t j = 0; j < ds; ++j) {
        cplx acc = 0.0;
        for (std::size_t k = 0; k < de; ++k) acc += op(i * de + k, j * de + k);
        out(i, j) = acc;
      }
    return out;
  }
  CMatrix out(de, de);
  for (std::size_t s = 0; s < ds; ++s)
    for (std::size_t k = 0; k < de; ++k)
      for (std::size_t l = 0; l < de; ++l) out(k, l) += op(s * de + k, s * de + l);
  return out;
}

DensityMatrix partial_trace(const DensityMatrix& rho, Dims dims, Keep keep) {
  return DensityMatrix(partial_trace(rho.matrix(), dims, keep));
}

UnitaryPropagator::UnitaryPropagator(const HermitianMatrix& generator) {
  auto eig = eig_hermitian(generator);
  eigenvalues_ = std::move(eig.values);
  v_ = std::move(eig.vectors);
  v_adj_ = v_.adjoint();
  const double unitarity = max_abs_diff(matmul(v_, v_adj_), CMatrix::identity(dim()));
  if (unitarity > 1e-10) {
    throw NumericsError("UnitaryPropagator: eigenbasis not unitary, residual " + std::to_string(unitarity));
  }
}

CMatrix UnitaryPropagator::at(double t) const {
  const std::size_t n = dim();
  if (t == 0.0) return CMatrix::identity(n);
  // V diag(e^{-i lambda t}) V^†: scale the columns of V, then one product.
  CMatrix scaled = v_;
  for (std::size_t j = 0; j < n; ++j) {
    const cplx phase = std::polar(1.0, -eigenvalues_[j] * t);
    for (std::size_t i = 0; i < n; ++i) scaled(i, j) *= phase;
  }
  return matmul(scaled, v_adj_);
}

CMatrix UnitaryPropagator::conjugate(const CMatrix& op, double t) const {
  if (op.rows() != dim() || op.cols() != dim()) throw ShapeError("UnitaryPropagator::conjugate: dimension mismatch");
  if (t == 0.0) return op;
  const CMatrix u = at(t);
  return matmul(matmul(u, op), u.adjoint());
}

CMatrix UnitaryPropagator::heisenberg(const CMatrix& op, double t) const {
  if (op.rows() != dim() || op.cols() != dim()) throw ShapeError("UnitaryPropagator::heisenberg: dimension mismatch");
  if (t == 0.0) return op;
  const CMatrix u = at(t);
  return matmul(matmul(u.adjoint(), op), u);
}

DensityMatrix evolve(const UnitaryPropagator& u, double t, const DensityMatrix& rho) {
  return DensityMatrix(u.conjugate(rho.matrix(), t));
}

CMatrix pauli_x() { return {{0.0, 1.0}, {1.0, 0.0}}; }
CMatrix pauli_y() { return {{0.0, cplx(0.0, -1.0)}, {cplx(0.0, 1.0), 0.0}}; }
CMatrix pauli_z() { return {{1.0, 0.0}, {0.0, -1.0}}; }
CVector ket_plus() { return {1.0, 0.0}; }
CVector ket_minus() { return {0.0, 1.0}; }

CVector ket_x(int sign) {
  const double r = 1.0 / std::sqrt(2.0);
  return {r, sign >= 0 ? r : -r};
}

}  // namespace cpfsim::qmat
