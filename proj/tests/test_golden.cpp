#include <gtest/gtest.h>

#include <cmath>

#include "cpfsim/config.hpp"
#include "cpfsim/models.hpp"
#include "cpfsim/runner.hpp"

using namespace cpfsim;

namespace {

config::ExperimentConfig load(const char* name) {
  return config::load_config(std::filesystem::path(CPFSIM_CONFIG_DIR) / name);
}

// Gaussian-noise oracle: with V(s) = Var Φ(0,s) = 2g²τ_c²(s/τ_c − 1 + e^{−s/τ_c}),
// f(t,τ) = ½[e^{−2V(t+τ)} + e^{−2(2V(t) + 2V(τ) − V(t+τ))}] and f(t) = e^{−2V(t)}.
double ou_cpf_oracle(double g, double tau_c, double t, double tau) {
  const auto v = [&](double s) { return 2.0 * g * g * tau_c * tau_c * (s / tau_c - 1.0 + std::exp(-s / tau_c)); };
  const double sum = v(t + tau);
  const double diff = 2.0 * v(t) + 2.0 * v(tau) - sum;
  return 0.5 * (std::exp(-2.0 * sum) + std::exp(-2.0 * diff)) - std::exp(-2.0 * v(t)) * std::exp(-2.0 * v(tau));
}

}  // namespace

TEST(Golden, SpinBathLeftPanel) {
  const auto cfg = load("spinbath_fig2_left.cfg");
  const auto r = runner::run_experiment(cfg);
  ASSERT_TRUE(r.errors.empty());
  ASSERT_EQ(r.grid.n_t(), 41u);
  // Uniform bath: f(t) = cos^N(2t/√N).
  const auto f = [](double t) { return std::pow(std::cos(2.0 * t / std::sqrt(50.0)), 50.0); };
  for (std::size_t i = 0; i < r.grid.n_t(); ++i)
    for (std::size_t j = 0; j < r.grid.n_tau(); ++j) {
      const double t = r.grid.t[i], tau = r.grid.tau[j];
      const double c = r.grid.value(i, j);
      EXPECT_NEAR(c, 0.5 * (f(t + tau) + f(t - tau)) - f(t) * f(tau), 1e-12);
      EXPECT_NEAR(c, models::cpf_gaussian_approx(1.0, t, tau), 0.02);
      EXPECT_NEAR(c, r.grid.value(j, i), 1e-12);
    }
  EXPECT_NEAR(r.grid.value(20, 20), 0.48185209242521704, 0.02);
  EXPECT_NEAR(r.grid.value(40, 40), 0.5, 0.01);
}

TEST(Golden, OuRightPanel) {
  const auto cfg = load("ou_fig2_right.cfg");
  const double tau_c = cfg.stochastic->noise.tau_c;
  ASSERT_DOUBLE_EQ(tau_c * cfg.stochastic->noise.g, 100.0);
  const auto r = runner::run_experiment(cfg);
  ASSERT_TRUE(r.errors.empty());
  // 81 cells: a 4σ bound keeps the family-wise false alarm rate below 1%.
  double worst = 0.0;
  for (std::size_t i = 0; i < r.grid.n_t(); ++i)
    for (std::size_t j = 0; j < r.grid.n_tau(); ++j) {
      const double t = r.grid.t[i], tau = r.grid.tau[j];
      const double se = r.grid.std_error[r.grid.index(i, j)];
      const double diff = std::abs(r.grid.value(i, j) - ou_cpf_oracle(1.0, tau_c, t, tau));
      if (t == 0.0 || tau == 0.0) {
        EXPECT_LE(diff, 1e-12);
        continue;
      }
      worst = std::max(worst, diff / se);
    }
  EXPECT_LE(worst, 4.0);
  for (std::size_t k = 0; k < r.grid.n_t(); ++k) {
    const double t = r.grid.t[k];
    if (t < 1.0 || t > 1.5) continue;
    EXPECT_GE(r.grid.value(k, k), 0.44) << t;
    EXPECT_LE(r.grid.value(k, k), 0.5 + 3 * r.grid.std_error[r.grid.index(k, k)]) << t;
  }
}
