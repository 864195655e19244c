#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "cpfsim/cpf.hpp"
#include "cpfsim/exec.hpp"
#include "cpfsim/qmat.hpp"

// Classical noise environments and Monte Carlo evaluation of noise-averaged
// CPF probabilities. Every trajectory draws from its own generator keyed by
// (master seed, trajectory index), and ensemble sums are reduced serially in
// index order, so results do not depend on the worker count.

namespace cpfsim::stochastic {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class NoiseKind { ou, white, dichotomic };

/// Stationary noise ξ(t). Ornstein-Uhlenbeck: Gaussian with correlation
/// g² exp(−|t−t'|/τ_c) (τ_c = ∞ is frozen noise). White: Gaussian with
/// correlation γ_w δ(t−t'). Dichotomic: ±g flipping at rate 1/τ_c.
struct NoiseModel {
  NoiseKind kind = NoiseKind::ou;
  double g = 1.0;
  double tau_c = kInfinity;
  double gamma_w = 0.0;

  static NoiseModel ou(double g, double tau_c);
  static NoiseModel frozen(double g) { return ou(g, kInfinity); }
  static NoiseModel white(double gamma_w);
  /// White limit of OU at fixed γ_w = 2 g² τ_c.
  static NoiseModel white_from_ou(double g, double tau_c) { return white(2.0 * g * g * tau_c); }
  static NoiseModel dichotomic(double g, double tau_c);

  bool is_frozen() const noexcept { return kind == NoiseKind::ou && tau_c == kInfinity; }
  /// min(τ_c/20, 0.01/g), or 0.01 when neither bound applies.
  double default_step() const;
  void validate() const;
};

/// Time points covering [0, last breakpoint]; every breakpoint is a grid
/// point and each segment between breakpoints is split into equal steps no
/// longer than max_step.
class TimeGrid {
 public:
  TimeGrid(std::span<const double> breakpoints, double max_step);
  /// Explicit points; breakpoint_index lists which of them are breakpoints.
  TimeGrid(std::vector<double> times, std::vector<std::size_t> breakpoint_index);

  const std::vector<double>& times() const noexcept { return t_; }
  std::size_t size() const noexcept { return t_.size(); }
  double max_step() const noexcept { return max_step_; }
  /// Grid index of the k-th breakpoint.
  std::size_t breakpoint_index(std::size_t k) const { return bp_index_.at(k); }
  std::size_t breakpoints() const noexcept { return bp_index_.size(); }

 private:
  std::vector<double> t_;
  std::vector<std::size_t> bp_index_;
  double max_step_;
};

struct NoiseTrajectory {
  std::shared_ptr<const TimeGrid> grid;
  std::vector<double> xi;     // ξ(t_i)
  std::vector<double> phase;  // Φ(0, t_i) = ∫_0^{t_i} ξ

  /// Φ(t_a, t_b) between grid points.
  double phase_between(std::size_t i, std::size_t j) const { return phase[j] - phase[i]; }
  /// Φ over consecutive breakpoints [k, k+1].
  double window_phase(std::size_t k) const {
    return phase_between(grid->breakpoint_index(k), grid->breakpoint_index(k + 1));
  }
};

/// Generator for trajectory `index` of the stream `seed`.
std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index);

/// OU uses the exact stationary update and trapezoid phase integration; white
/// noise draws exact Gaussian phase increments; dichotomic phases are
/// integrated exactly between flips. Throws StepSizeError for OU grids with
/// steps above τ_c/20.
NoiseTrajectory sample_trajectory(const NoiseModel& model, std::shared_ptr<const TimeGrid> grid,
                                  std::uint64_t seed, std::uint64_t index);

/// Same path on every second grid point, with the phase re-integrated by the
/// trapezoid rule on the coarser grid. Used for step-size convergence checks.
NoiseTrajectory coarsen(const NoiseTrajectory& fine, const NoiseModel& model);

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_traj = 0;
  std::uint64_t seed = 0;
};

struct McOptions {
  std::size_t n_traj = 100000;
  std::uint64_t seed = 0;
  Exec exec = Exec::parallel;
  double max_step = 0.0;  // 0: NoiseModel::default_step()
};

/// Per-trajectory statistics, n_traj rows of `width` values, filled by
/// `fill(index, row)`. The serial and parallel kernels write identical rows.
using TrajectoryKernel = std::function<void(std::uint64_t index, std::span<double> row)>;
std::vector<double> run_ensemble(std::size_t n_traj, std::size_t width, const TrajectoryKernel& fill, Exec exec);

/// Column means and standard errors of an n × width statistics block,
/// accumulated in index order.
std::vector<double> column_means(std::span<const double> stats, std::size_t width);
std::vector<double> column_stderrs(std::span<const double> stats, std::size_t width, std::span<const double> means);

struct CoherenceEstimate {
  McEstimate re;
  McEstimate im;
  std::complex<double> value() const { return {re.mean, im.mean}; }
};

/// c_t = mean of exp(−2iΦ(0,t)).
CoherenceEstimate coherence_mc(const NoiseModel& model, double t, const McOptions& opts);

/// Noise-modulated system: L_st(t)[•] = −i ξ(t) [H, •], so each window
/// propagator is exp(−i H Φ).
class StochasticSystem {
 public:
  StochasticSystem(qmat::HermitianMatrix coupling, qmat::DensityMatrix rho0);

  const qmat::HermitianMatrix& coupling() const noexcept { return h_; }
  const qmat::DensityMatrix& rho0() const noexcept { return rho0_; }
  std::size_t dim() const noexcept { return h_.dim(); }
  /// exp(−i H Φ)
  qmat::CMatrix propagator(double phase) const { return prop_->at(phase); }

 private:
  qmat::HermitianMatrix h_;
  qmat::DensityMatrix rho0_;
  std::shared_ptr<const qmat::UnitaryPropagator> prop_;
};

struct StochasticCpfResult {
  cpf::CpfProbabilityTable table;
  std::vector<double> std_error;  // per table entry, z-major like the table
  McEstimate cpf;                 // C_pf with delta-method standard error
  McEstimate p_y;                 // denominator: unconditional P(y)
};

/// Ratio-of-means estimator P(z,x|y) = mean[P_st(z,y,x)] / mean[P_st(y)] over
/// one shared trajectory ensemble. Throws DegeneratePostSelection when the
/// denominator is within 3 standard errors of zero.
StochasticCpfResult cpf_table_stochastic(const StochasticSystem& system, const cpf::MeasurementSchedule& sched,
                                         const NoiseModel& noise, const McOptions& opts);
StochasticCpfResult cpf_table_stochastic_n(const StochasticSystem& system, const cpf::MeasurementSchedule& sched,
                                           const NoiseModel& noise, const McOptions& opts);

/// E_y^(n) for one trajectory: Heisenberg operators under exp(−iHΦ) between
/// consecutive y-measurements.
qmat::CMatrix trajectory_effect_operator(const StochasticSystem& system, const cpf::MeasurementSchedule& sched,
                                         const NoiseTrajectory& traj);

struct FastPathResult {
  McEstimate f_t;      // mean cos 2Φ(0,t)
  McEstimate f_tau;    // mean cos 2Φ(t,t+τ)
  McEstimate f_t_tau;  // mean cos 2Φ(0,t) · cos 2Φ(t,t+τ)
  McEstimate cpf;      // f(t,τ) − f(t) f(τ)
};

/// Closed-form reduction of the dephasing-qubit table (x̂ measurements,
/// ρ0 = |+><+|): P(z,x|y) = ¼[1 + xy f(t) + zy f(τ) + zx f(t,τ)]. Uses the
/// same trajectories as cpf_table_stochastic for schedule times {0, t, t+τ}.
FastPathResult dephasing_fast_path(const NoiseModel& noise, double t, double tau, const McOptions& opts);

struct FactorizationReport {
  double covariance = 0.0;
  double std_error = 0.0;
  double z_score = 0.0;
  bool passed = false;
  McEstimate f_before;  // cos 2Φ(0,t)
  McEstimate f_after;   // cos 2Φ(t,t+τ)
};

/// Sample covariance of cos 2Φ(t,t+τ) and cos 2Φ(0,t); passes when |z| ≤ 3.
FactorizationReport white_factorization_test(const NoiseModel& noise, double t, double tau, const McOptions& opts);

}  // namespace cpfsim::stochastic
