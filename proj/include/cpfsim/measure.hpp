#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cpfsim/qmat.hpp"

namespace cpfsim::measure {

using qmat::CMatrix;
using qmat::CVector;
using qmat::DensityMatrix;

inline constexpr double kCompletenessTol = 1e-10;
inline constexpr double kZeroProbability = 1e-14;

/// A generalized measurement: labeled Kraus operators with the real observable
/// value attached to each outcome. Construction enforces unique labels, equal
/// square shapes and completeness sum Ω†Ω = I.
class KrausSet {
 public:
  KrausSet(std::vector<std::string> labels, std::vector<double> values, std::vector<CMatrix> operators);

  std::size_t size() const noexcept { return ops_.size(); }
  std::size_t dim() const noexcept { return ops_.front().rows(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::vector<double>& values() const noexcept { return values_; }
  const std::vector<CMatrix>& operators() const noexcept { return ops_; }

  const CMatrix& op(std::size_t j) const { return ops_.at(j); }
  double value(std::size_t j) const { return values_.at(j); }
  /// Ω_j† Ω_j
  CMatrix effect(std::size_t j) const;
  /// Throws ConfigError for unknown labels.
  std::size_t index_of(const std::string& label) const;

  /// Every operator is a rank-one orthogonal projector |v><v|.
  bool is_rank_one_projective() const;

 private:
  std::vector<std::string> labels_;
  std::vector<double> values_;
  std::vector<CMatrix> ops_;
};

/// Completeness check; throws CompletenessError carrying the residual max-norm.
void validate(const KrausSet& set);

/// Projective measurement onto an orthonormal basis (vectors are normalized).
KrausSet projective(const std::vector<CVector>& basis, std::vector<double> values,
                    std::vector<std::string> labels);
/// Qubit sigma_x eigenbasis |x̂±>, labels "+","-", values ±1.
KrausSet pauli_x_basis();
KrausSet pauli_y_basis();
KrausSet pauli_z_basis();
/// Two-outcome weak qubit measurement Ω_± = cos θ|±><±| + sin θ|∓><∓|.
KrausSet weak_z(double theta);

/// Ω†Ω of a single outcome: PSD and bounded by the identity.
class EffectOperator {
 public:
  explicit EffectOperator(CMatrix e);
  const CMatrix& matrix() const noexcept { return e_.matrix(); }
  std::size_t dim() const noexcept { return e_.dim(); }

 private:
  qmat::HermitianMatrix e_;
};

EffectOperator effect_of(const CMatrix& omega);

/// Outcome label → normalized pure target state, realizing the causal break
/// (projective read followed by an outcome-conditioned rotation).
class Preparation {
 public:
  Preparation() = default;
  explicit Preparation(std::map<std::string, CVector> targets);

  /// Targets taken from the ranges of a rank-one projective set.
  static Preparation from_projective(const KrausSet& set);

  const CVector& target(const std::string& label) const;
  bool contains(const std::string& label) const { return targets_.count(label) != 0; }
  const std::map<std::string, CVector>& targets() const noexcept { return targets_; }

 private:
  std::map<std::string, CVector> targets_;
};

struct MeasurementResult {
  std::optional<DensityMatrix> post_state;
  double probability = 0.0;
};

/// ρ → ΩρΩ†/Tr[Ω†Ωρ] with probability Tr[Ω†Ωρ]. Throws
/// ZeroProbabilityOutcome when the probability is below 1e-14.
MeasurementResult apply(const DensityMatrix& rho, const CMatrix& omega);

/// Past-quantum-state retrodiction P(x|y) ∝ Tr[E_y Ω_x ρ0 Ω_x†].
std::vector<double> retrodict(const DensityMatrix& rho0, const KrausSet& first, const EffectOperator& effect);

/// Returns |y><y| for the configured target, independent of the input state.
DensityMatrix causal_break(const DensityMatrix& post_measurement_state, const std::string& y_label,
                           const Preparation& prep);

}  // namespace cpfsim::measure
