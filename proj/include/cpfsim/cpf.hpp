#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cpfsim/measure.hpp"
#include "cpfsim/qmat.hpp"

// Conditional past-future (CPF) probabilities P(z,x|y) for a measurement
// chain x → y1 … yn → z, and the CPF correlation built from them.

namespace cpfsim::cpf {

using measure::KrausSet;
using measure::Preparation;
using qmat::CMatrix;
using qmat::DensityMatrix;
using qmat::Dims;
using qmat::HermitianMatrix;

/// One intermediate (conditioning) measurement and the outcome conditioned on.
struct MiddleMeasurement {
  KrausSet set;
  std::string outcome;
  std::optional<Preparation> prep;
};

/// x at times[0], y_k at times[k], z at times[n+1]. Times are absolute and
/// non-decreasing. The last middle measurement must be rank-one projective or
/// carry a Preparation so its post-measurement state depends only on y_n.
class MeasurementSchedule {
 public:
  MeasurementSchedule(KrausSet first, std::vector<MiddleMeasurement> middle, KrausSet last, std::vector<double> times);

  /// x at 0, y at t, z at t + tau.
  static MeasurementSchedule three_point(KrausSet first, KrausSet middle, std::string y, KrausSet last, double t,
                                         double tau, std::optional<Preparation> prep = std::nullopt);

  const KrausSet& first() const noexcept { return first_; }
  const std::vector<MiddleMeasurement>& middle() const noexcept { return middle_; }
  const KrausSet& last() const noexcept { return last_; }
  const std::vector<double>& times() const noexcept { return times_; }
  std::size_t order() const noexcept { return middle_.size(); }
  std::size_t dim() const noexcept { return first_.dim(); }

  /// t = t_{y1} − t_x
  double t() const { return times_[1] - times_.front(); }
  /// τ = t_z − t_{yn}
  double tau() const { return times_.back() - times_[times_.size() - 2]; }
  std::vector<std::string> y_labels() const;

  /// Post-measurement system state after y_n: the preparation target or the
  /// range of the rank-one projector.
  CMatrix conditioned_state() const;

  MeasurementSchedule with_times(std::vector<double> times) const;
  MeasurementSchedule with_outcomes(const std::vector<std::string>& y) const;

 private:
  KrausSet first_;
  std::vector<MiddleMeasurement> middle_;
  KrausSet last_;
  std::vector<double> times_;
};

/// P(z,x|y) over the outcome alphabets of the last and first measurements.
class CpfProbabilityTable {
 public:
  static constexpr double kTotalTol = 1e-10;

  CpfProbabilityTable(std::vector<std::string> y, std::vector<std::string> z_labels,
                      std::vector<std::string> x_labels, std::vector<double> probs);

  std::size_t nz() const noexcept { return z_labels_.size(); }
  std::size_t nx() const noexcept { return x_labels_.size(); }
  double operator()(std::size_t z, std::size_t x) const { return p_[z * nx() + x]; }
  double at(const std::string& z, const std::string& x) const;

  const std::vector<std::string>& y() const noexcept { return y_; }
  const std::vector<std::string>& z_labels() const noexcept { return z_labels_; }
  const std::vector<std::string>& x_labels() const noexcept { return x_labels_; }
  const std::vector<double>& entries() const noexcept { return p_; }

  std::vector<double> pz() const;
  std::vector<double> px() const;
  double total() const;

  friend bool operator==(const CpfProbabilityTable&, const CpfProbabilityTable&) = default;

 private:
  std::vector<std::string> y_;
  std::vector<std::string> z_labels_;
  std::vector<std::string> x_labels_;
  std::vector<double> p_;
};

/// C_pf = Σ_{z,x} [P(z,x|y) − P(z|y)P(x|y)] O_z O_x
double cpf_correlation(const CpfProbabilityTable& table, std::span<const double> o_z, std::span<const double> o_x);
/// Observable values taken from the outcome sets.
double cpf_correlation(const CpfProbabilityTable& table, const KrausSet& last, const KrausSet& first);

/// Trace-preserving system channel given by Kraus operators.
class Channel {
 public:
  explicit Channel(std::vector<CMatrix> kraus);
  static Channel identity(std::size_t d);
  static Channel unitary(CMatrix u);
  /// ρ ↦ I/d
  static Channel depolarizing(std::size_t d);

  CMatrix apply(const CMatrix& rho) const;
  std::size_t dim() const noexcept { return kraus_.front().rows(); }

 private:
  std::vector<CMatrix> kraus_;
};

/// Total Hamiltonian and initial joint state on system ⊗ environment. The
/// Hamiltonian is diagonalized once at construction and shared by copies.
class BipartiteModel {
 public:
  BipartiteModel(Dims dims, HermitianMatrix hamiltonian, DensityMatrix rho0);

  /// H_s ⊗ I + I ⊗ H_e with product initial state.
  static BipartiteModel non_interacting(const HermitianMatrix& h_s, const HermitianMatrix& h_e,
                                        const DensityMatrix& rho_s, const DensityMatrix& rho_e);
  /// d_e = 1: a closed system with Hamiltonian h_s.
  static BipartiteModel system_only(const HermitianMatrix& h_s, const DensityMatrix& rho_s);

  Dims dims() const noexcept { return dims_; }
  const HermitianMatrix& hamiltonian() const noexcept { return h_; }
  const DensityMatrix& rho0() const noexcept { return rho0_; }
  const qmat::UnitaryPropagator& propagator() const noexcept { return *prop_; }

  /// Ω ⊗ I_e
  CMatrix lift(const CMatrix& system_op) const;

 private:
  Dims dims_;
  HermitianMatrix h_;
  DensityMatrix rho0_;
  std::shared_ptr<const qmat::UnitaryPropagator> prop_;
};

/// Unnormalized forward enumeration of one measurement chain.
/// weight[x] = P(y, x) and joint[z * nx + x] = P(z, y, x).
struct ChainWeights {
  std::vector<double> weight;
  std::vector<double> joint;
  double total_weight() const;
};

/// Runs x → evolve → y1 → … → yn → causal break → evolve → z on the joint
/// space. `windows` holds n + 1 joint-space unitaries: x→y1, y_k→y_{k+1}, yn→z.
/// An empty matrix stands for the identity.
ChainWeights chain_weights(const CMatrix& rho0_joint, Dims dims, const MeasurementSchedule& sched,
                           std::span<const CMatrix> windows);

/// Normalizes chain weights into a table; throws DegeneratePostSelection when
/// P(y) ≤ 1e-14.
CpfProbabilityTable table_from_weights(const MeasurementSchedule& sched, std::span<const double> joint,
                                       double total_weight);

/// Measurement-only chain (no evolution between measurements), n = 1.
CpfProbabilityTable cpf_table_isolated(const DensityMatrix& rho0, const MeasurementSchedule& sched);

/// Outcome-independent system propagators between measurements, n = 1.
CpfProbabilityTable cpf_table_markov(const DensityMatrix& rho0, const MeasurementSchedule& sched,
                                     const Channel& before_y, const Channel& after_y);

/// Environment state σ_e^{yx} right after the y-measurement (n = 1, the
/// conditioning label replaced by `y_label`).
DensityMatrix env_state(const BipartiteModel& model, const MeasurementSchedule& sched, const std::string& x_label,
                        const std::string& y_label);
/// Environment state right after y_n for a chain of any order.
DensityMatrix env_state_n(const BipartiteModel& model, const MeasurementSchedule& sched, const std::string& x_label);

CpfProbabilityTable cpf_table_bipartite(const BipartiteModel& model, const MeasurementSchedule& sched);
CpfProbabilityTable cpf_table_n(const BipartiteModel& model, const MeasurementSchedule& sched);

/// E_y^(n) = Ω_{y1}† Ω_{y2}†(t2,t1) … Ω_{yn}†(tn,t1) Ω_{yn}(tn,t1) … Ω_{y1}, with
/// Heisenberg-evolved operators Ω(tb,ta) = W† Ω W and W the cumulative
/// propagator from t_{y1}. `omegas` are joint-space operators in time order;
/// `windows` are the n − 1 unitaries between consecutive y-measurements.
CMatrix effect_operator_heisenberg(std::span<const CMatrix> omegas, std::span<const CMatrix> windows);

measure::EffectOperator effect_operator_n(const BipartiteModel& model, const MeasurementSchedule& sched);

}  // namespace cpfsim::cpf
