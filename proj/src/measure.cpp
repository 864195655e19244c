#include "cpfsim/measure.hpp"

#include <cmath>
#include <set>
#include <string>

#include "cpfsim/errors.hpp"

namespace cpfsim::measure {

using qmat::cplx;

KrausSet::KrausSet(std::vector<std::string> labels, std::vector<double> values, std::vector<CMatrix> operators)
    : labels_(std::move(labels)), values_(std::move(values)), ops_(std::move(operators)) {
  if (ops_.empty()) throw ConfigError("KrausSet: no operators");
  if (labels_.size() != ops_.size() || values_.size() != ops_.size()) {
    throw ConfigError("KrausSet: " + std::to_string(ops_.size()) + " operators but " +
                      std::to_string(labels_.size()) + " labels and " + std::to_string(values_.size()) + " values");
  }
  std::set<std::string> seen;
  for (const auto& l : labels_) {
    if (!seen.insert(l).second) throw ConfigError("KrausSet: duplicate label '" + l + "'");
  }
  const std::size_t d = ops_.front().rows();
  for (const auto& op : ops_) {
    if (op.rows() != d || op.cols() != d) throw ShapeError("KrausSet: operators must share one square shape");
    if (!op.is_finite()) throw NumericsError("KrausSet: non-finite operator entries");
  }
  validate(*this);
}

CMatrix KrausSet::effect(std::size_t j) const {
  const CMatrix& o = ops_.at(j);
  return qmat::matmul(o.adjoint(), o);
}

std::size_t KrausSet::index_of(const std::string& label) const {
  for (std::size_t j = 0; j < labels_.size(); ++j)
    if (labels_[j] == label) return j;
  throw ConfigError("unknown outcome label '" + label + "'");
}

bool KrausSet::is_rank_one_projective() const {
  for (std::size_t j = 0; j < ops_.size(); ++j) {
    const CMatrix& o = ops_[j];
    if (qmat::max_abs_diff(o, o.adjoint()) > 1e-10) return false;
    if (qmat::max_abs_diff(qmat::matmul(o, o), o) > 1e-10) return false;
    if (std::abs(o.trace() - 1.0) > 1e-10) return false;
  }
  return true;
}

void validate(const KrausSet& set) {
  const std::size_t d = set.dim();
  CMatrix sum(d, d);
  for (std::size_t j = 0; j < set.size(); ++j) sum += set.effect(j);
  const double residual = qmat::max_abs_diff(sum, CMatrix::identity(d));
  if (residual > kCompletenessTol) {
    throw CompletenessError("Kraus operators are not complete: max|ΣΩ†Ω − I| = " + std::to_string(residual),
                            residual);
  }
}

KrausSet projective(const std::vector<CVector>& basis, std::vector<double> values, std::vector<std::string> labels) {
  std::vector<CMatrix> ops;
  ops.reserve(basis.size());
  for (const auto& v : basis) {
    double n2 = 0.0;
    for (const auto& z : v) n2 += std::norm(z);
    CMatrix p = CMatrix::projector(v);
    p *= 1.0 / n2;
    ops.push_back(std::move(p));
  }
  return KrausSet(std::move(labels), std::move(values), std::move(ops));
}

KrausSet pauli_x_basis() { return projective({qmat::ket_x(+1), qmat::ket_x(-1)}, {1.0, -1.0}, {"+", "-"}); }

KrausSet pauli_y_basis() {
  const double r = 1.0 / std::sqrt(2.0);
  return projective({{r, cplx(0.0, r)}, {r, cplx(0.0, -r)}}, {1.0, -1.0}, {"+", "-"});
}

KrausSet pauli_z_basis() { return projective({qmat::ket_plus(), qmat::ket_minus()}, {1.0, -1.0}, {"+", "-"}); }

KrausSet weak_z(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  CMatrix plus{{c, 0.0}, {0.0, s}};
  CMatrix minus{{s, 0.0}, {0.0, c}};
  return KrausSet({"+", "-"}, {1.0, -1.0}, {plus, minus});
}

EffectOperator::EffectOperator(CMatrix e) : e_(std::move(e)) {
  const auto eig = qmat::eig_hermitian(e_);
  if (eig.values.front() < -1e-10) {
    throw NumericsError("EffectOperator: negative eigenvalue " + std::to_string(eig.values.front()));
  }
  if (eig.values.back() > 1.0 + 1e-10) {
    throw NumericsError("EffectOperator: operator norm " + std::to_string(eig.values.back()) + " exceeds 1");
  }
}

EffectOperator effect_of(const CMatrix& omega) { return EffectOperator(qmat::matmul(omega.adjoint(), omega)); }

Preparation::Preparation(std::map<std::string, CVector> targets) : targets_(std::move(targets)) {
  for (auto& [label, v] : targets_) {
    double n2 = 0.0;
    for (const auto& z : v) n2 += std::norm(z);
    if (std::abs(n2 - 1.0) > 1e-12) {
      throw ConfigError("Preparation: target for '" + label + "' has squared norm " + std::to_string(n2));
    }
  }
}

Preparation Preparation::from_projective(const KrausSet& set) {
  if (!set.is_rank_one_projective()) {
    throw ConfigError("Preparation::from_projective: measurement is not rank-one projective");
  }
  std::map<std::string, CVector> targets;
  for (std::size_t j = 0; j < set.size(); ++j) {
    const CMatrix& p = set.op(j);
    // The largest column of |v><v| is v <v_c| up to a phase.
    std::size_t best = 0;
    double best_norm = -1.0;
    for (std::size_t c = 0; c < p.cols(); ++c) {
      double n2 = 0.0;
      for (std::size_t r = 0; r < p.rows(); ++r) n2 += std::norm(p(r, c));
      if (n2 > best_norm) {
        best_norm = n2;
        best = c;
      }
    }
    CVector v(p.rows());
    const double inv = 1.0 / std::sqrt(best_norm);
    for (std::size_t r = 0; r < p.rows(); ++r) v[r] = p(r, best) * inv;
    targets.emplace(set.labels()[j], std::move(v));
  }
  return Preparation(std::move(targets));
}

const CVector& Preparation::target(const std::string& label) const {
  auto it = targets_.find(label);
  if (it == targets_.end()) throw ConfigError("Preparation: no target for outcome '" + label + "'");
  return it->second;
}

MeasurementResult apply(const DensityMatrix& rho, const CMatrix& omega) {
  if (omega.cols() != rho.dim()) throw ShapeError("apply: operator and state dimensions differ");
  const CMatrix branch = qmat::matmul(qmat::matmul(omega, rho.matrix()), omega.adjoint());
  const double p = branch.trace().real();
  if (p < kZeroProbability) {
    throw ZeroProbabilityOutcome("apply: outcome probability " + std::to_string(p) + " below threshold");
  }
  MeasurementResult out;
  out.probability = std::min(1.0, p);
  out.post_state.emplace(branch * cplx(1.0 / p));
  return out;
}

std::vector<double> retrodict(const DensityMatrix& rho0, const KrausSet& first, const EffectOperator& effect) {
  if (first.dim() != rho0.dim() || effect.dim() != rho0.dim()) throw ShapeError("retrodict: dimension mismatch");
  std::vector<double> w(first.size());
  double total = 0.0;
  for (std::size_t x = 0; x < first.size(); ++x) {
    const CMatrix& o = first.op(x);
    const CMatrix branch = qmat::matmul(qmat::matmul(o, rho0.matrix()), o.adjoint());
    w[x] = std::max(0.0, qmat::trace_product(effect.matrix(), branch).real());
    total += w[x];
  }
  if (total <= kZeroProbability) {
    throw DegeneratePostSelection("retrodict: conditioning outcome has probability " + std::to_string(total));
  }
  for (auto& v : w) v /= total;
  return w;
}

DensityMatrix causal_break(const DensityMatrix& post_measurement_state, const std::string& y_label,
                           const Preparation& prep) {
  const CVector& target = prep.target(y_label);
  if (target.size() != post_measurement_state.dim()) throw ShapeError("causal_break: target dimension mismatch");
  return DensityMatrix::pure(target);
}

}  // namespace cpfsim::measure
