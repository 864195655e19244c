#include "cpfsim/random_ops.hpp"

#include <cmath>
#include <string>

namespace cpfsim::randgen {

using qmat::CMatrix;
using qmat::cplx;

CMatrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  CMatrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = {n(rng), n(rng)};
  return m;
}

CMatrix isometry(std::size_t rows, std::size_t cols, Rng& rng) {
  CMatrix m = gaussian_matrix(rows, cols, rng);
  // Modified Gram-Schmidt, applied twice for orthogonality at machine precision.
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t j = 0; j < cols; ++j) {
      for (std::size_t p = 0; p < j; ++p) {
        cplx dot = 0.0;
        for (std::size_t i = 0; i < rows; ++i) dot += std::conj(m(i, p)) * m(i, j);
        for (std::size_t i = 0; i < rows; ++i) m(i, j) -= dot * m(i, p);
      }
      double norm = 0.0;
      for (std::size_t i = 0; i < rows; ++i) norm += std::norm(m(i, j));
      norm = std::sqrt(norm);
      for (std::size_t i = 0; i < rows; ++i) m(i, j) /= norm;
    }
  }
  return m;
}

CMatrix unitary(std::size_t d, Rng& rng) { return isometry(d, d, rng); }

qmat::HermitianMatrix hermitian(std::size_t d, Rng& rng, double scale) {
  const CMatrix g = gaussian_matrix(d, d, rng);
  return qmat::HermitianMatrix((g + g.adjoint()) * cplx(0.5 * scale));
}

qmat::DensityMatrix density(std::size_t d, Rng& rng) {
  const CMatrix g = gaussian_matrix(d, d, rng);
  CMatrix rho = g * g.adjoint();
  rho *= 1.0 / rho.trace().real();
  return qmat::DensityMatrix(rho);
}

qmat::CVector pure_state(std::size_t d, Rng& rng) {
  const CMatrix v = isometry(d, 1, rng);
  return qmat::CVector(v.data().begin(), v.data().end());
}

measure::KrausSet kraus_set(std::size_t d, std::size_t k, Rng& rng) {
  const CMatrix v = isometry(k * d, d, rng);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<std::string> labels;
  std::vector<double> values;
  std::vector<CMatrix> ops;
  for (std::size_t j = 0; j < k; ++j) {
    CMatrix op(d, d);
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) op(a, b) = v(j * d + a, b);
    labels.push_back(std::to_string(j));
    values.push_back(u(rng));
    ops.push_back(std::move(op));
  }
  return measure::KrausSet(std::move(labels), std::move(values), std::move(ops));
}

measure::KrausSet projective_set(std::size_t d, Rng& rng) {
  const CMatrix u = unitary(d, rng);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  std::vector<qmat::CVector> basis;
  std::vector<double> values;
  std::vector<std::string> labels;
  for (std::size_t j = 0; j < d; ++j) {
    qmat::CVector col(d);
    for (std::size_t i = 0; i < d; ++i) col[i] = u(i, j);
    basis.push_back(std::move(col));
    values.push_back(val(rng));
    labels.push_back(std::to_string(j));
  }
  return measure::projective(basis, values, labels);
}

measure::Preparation preparation_for(const measure::KrausSet& set, Rng& rng) {
  std::map<std::string, qmat::CVector> targets;
  for (const auto& label : set.labels()) targets[label] = pure_state(set.dim(), rng);
  return measure::Preparation(std::move(targets));
}

std::vector<double> distribution(std::size_t d, Rng& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> p(d);
  double s = 0.0;
  for (auto& v : p) s += (v = u(rng));
  for (auto& v : p) v /= s;
  return p;
}

cpf::Kernel stochastic_kernel(std::size_t rows, std::size_t cols, Rng& rng) {
  cpf::Kernel k;
  for (std::size_t i = 0; i < rows; ++i) k.push_back(distribution(cols, rng));
  return k;
}

}  // namespace cpfsim::randgen
