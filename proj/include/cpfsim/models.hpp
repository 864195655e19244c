#pragma once

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "cpfsim/cpf.hpp"
#include "cpfsim/stochastic.hpp"

// Exactly solvable dephasing models: a qubit coupled to N bath spins, and a
// qubit driven by a classical stochastic field.

namespace cpfsim::models {

using cplx = std::complex<double>;

/// Largest bath the dense bipartite path accepts (2^(N+1) ≤ 4096).
inline constexpr std::size_t kMaxDenseBath = 11;

/// H_T = σ_z ⊗ Σ_k g_k σ_z^(k); initial state (a|+⟩ + b|−⟩) ⊗_k (α_k|+⟩ + β_k|−⟩).
struct SpinBathParams {
  std::vector<double> g;
  std::vector<cplx> alpha;
  std::vector<cplx> beta;
  cplx a{1.0, 0.0};
  cplx b{0.0, 0.0};

  /// g_k = g/√N and α_k = β_k = 1/√2 (equal weights |α_k|² = |β_k|² = 1/2).
  static SpinBathParams uniform(std::size_t n, double g = 1.0);

  std::size_t size() const noexcept { return g.size(); }
  /// Throws ConfigError unless every spin and the system are normalized to 1e-12.
  void validate() const;
  bool symmetric() const;
};

cpf::BipartiteModel build_bipartite(const SpinBathParams& params);

/// c_t = Π_k (|α_k|² e^{+2i g_k t} + |β_k|² e^{−2i g_k t}).
cplx coherence_product(const SpinBathParams& params, double t);

/// c_t of the qubit under OU noise: exp[−4g²τ_c²(t/τ_c − 1 + e^{−t/τ_c})].
double ou_coherence_analytic(double g, double tau_c, double t);

struct DephasingRates {
  double omega = 0.0;
  double gamma = 0.0;
};

using CoherenceFunction = std::function<cplx(double)>;

/// γ(t) + iω(t) = −ċ_t / c_t by central difference with step h (one-sided
/// second-order difference when t < h). Throws SingularCoherence when
/// |c_t| ≤ 1e-12.
DephasingRates dephasing_rates(const CoherenceFunction& c, double t, double h = 1e-4);

/// f(t) = Re c_t and f(t,τ) = [f(t+τ) + f(t−τ)]/2.
double f_single(const SpinBathParams& params, double t);
double f_pair(const SpinBathParams& params, double t, double tau);

/// P(z,x|y) = ¼[1 + xy f(t) + zy f(τ) + zx f(t,τ)] for x̂-basis measurements
/// with labels "+"/"−". Requires a = 1, b = 0.
cpf::CpfProbabilityTable cpf_prob_spin_analytic(const SpinBathParams& params, double t, double tau,
                                                const std::string& y = "+");

/// C_pf = f(t,τ) − f(t) f(τ).
double cpf_spin_exact(const SpinBathParams& params, double t, double tau);

/// Large-N Gaussian form, times in units of 1/g.
double cpf_gaussian_approx(double g, double t, double tau);

/// x̂-basis schedule {0, t, t+τ} conditioned on y, as used by both dephasing models.
cpf::MeasurementSchedule x_basis_schedule(double t, double tau, const std::string& y = "+");

/// Qubit with L_st[•] = −iξ(t)[σ_z, •], ρ0 = |+⟩⟨+| and x̂-basis measurements.
struct StochasticDephasing {
  stochastic::StochasticSystem system;
  stochastic::NoiseModel noise;

  cpf::MeasurementSchedule schedule(double t, double tau, const std::string& y = "+") const {
    return x_basis_schedule(t, tau, y);
  }
};

StochasticDephasing stochastic_dephasing_model(const stochastic::NoiseModel& noise);

}  // namespace cpfsim::models
