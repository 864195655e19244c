#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <stdexcept>

#include "cpfsim/errors.hpp"
#include "cpfsim/models.hpp"
#include "cpfsim/stochastic.hpp"

using namespace cpfsim;
using namespace cpfsim::stochastic;

namespace {

std::shared_ptr<const TimeGrid> grid(std::vector<double> bp, double step) {
  return std::make_shared<const TimeGrid>(bp, step);
}

struct Moments {
  double mean = 0.0;
  double se = 0.0;
};

Moments moments(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return {m, std::sqrt(s / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()))};
}

McOptions opts(std::size_t n, std::uint64_t seed, Exec exec = Exec::parallel) {
  McOptions o;
  o.n_traj = n;
  o.seed = seed;
  o.exec = exec;
  return o;
}

}  // namespace

TEST(Noise, ValidationAndDefaultStep) {
  EXPECT_THROW(NoiseModel::ou(-1.0, 1.0).validate(), ConfigError);
  EXPECT_THROW(NoiseModel::ou(1.0, 0.0).validate(), ConfigError);
  EXPECT_THROW(NoiseModel::dichotomic(1.0, kInfinity).validate(), ConfigError);
  EXPECT_THROW(NoiseModel::white(-0.1).validate(), ConfigError);
  EXPECT_NO_THROW(NoiseModel::ou(0.0, 1.0).validate());
  EXPECT_DOUBLE_EQ(NoiseModel::ou(1.0, 1.0).default_step(), 0.01);
  EXPECT_DOUBLE_EQ(NoiseModel::ou(1.0, 0.1).default_step(), 0.005);
  EXPECT_DOUBLE_EQ(NoiseModel::ou(4.0, 100.0).default_step(), 0.0025);
  EXPECT_DOUBLE_EQ(NoiseModel::white(1.0).default_step(), 0.01);
  EXPECT_DOUBLE_EQ(NoiseModel::white_from_ou(2.0, 0.5).gamma_w, 4.0);
}

TEST(Grid, BreakpointsAreGridPoints) {
  const double bp[] = {0.0, 0.3, 0.3, 1.0};
  const TimeGrid g(bp, 0.1);
  ASSERT_EQ(g.breakpoints(), 4u);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(g.times()[g.breakpoint_index(k)], bp[k]);
  EXPECT_EQ(g.breakpoint_index(1), g.breakpoint_index(2));
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_LE(g.times()[i] - g.times()[i - 1], 0.1 + 1e-12);
  EXPECT_EQ(g.size(), 11u);
  const double bad[] = {0.0, 0.5, 0.2};
  EXPECT_THROW(TimeGrid(bad, 0.1), ConfigError);
}

TEST(Trajectory, OuVarianceAndLagOneCorrelation) {
  const double g = 1.5, tau_c = 1.0, dt = 0.05;
  const auto model = NoiseModel::ou(g, tau_c);
  const auto tg = grid({0.0, 1.0}, dt);
  const std::size_t n = 20000;
  std::vector<double> sq0(n), sq_end(n), lag(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto tr = sample_trajectory(model, tg, 101, i);
    sq0[i] = tr.xi[0] * tr.xi[0];
    sq_end[i] = tr.xi.back() * tr.xi.back();
    lag[i] = tr.xi[0] * tr.xi[1];
  }
  const auto m0 = moments(sq0), m1 = moments(sq_end), ml = moments(lag);
  EXPECT_LE(std::abs(m0.mean - g * g), 3 * m0.se);
  EXPECT_LE(std::abs(m1.mean - g * g), 3 * m1.se);
  EXPECT_LE(std::abs(ml.mean - g * g * std::exp(-dt / tau_c)), 3 * ml.se);
}

TEST(Trajectory, OuStepLimit) {
  EXPECT_THROW(sample_trajectory(NoiseModel::ou(1.0, 1.0), grid({0.0, 1.0}, 0.1), 1, 0), StepSizeError);
  EXPECT_NO_THROW(sample_trajectory(NoiseModel::ou(1.0, 1.0), grid({0.0, 1.0}, 0.05), 1, 0));
}

TEST(Trajectory, FrozenNoiseIsConstant) {
  const auto tg = grid({0.0, 0.7, 1.9}, 0.1);
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto tr = sample_trajectory(NoiseModel::frozen(1.0), tg, 5, i);
    for (std::size_t k = 0; k < tr.xi.size(); ++k) {
      EXPECT_EQ(tr.xi[k], tr.xi[0]);
      EXPECT_NEAR(tr.phase[k], tr.xi[0] * tg->times()[k], 1e-14);
    }
  }
}

TEST(Trajectory, WhitePhaseVariance) {
  const double gamma = 0.8, t = 1.3;
  const auto tg = grid({0.0, t}, 0.1);
  const std::size_t n = 20000;
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto tr = sample_trajectory(NoiseModel::white(gamma), tg, 7, i);
    sq[i] = tr.phase.back() * tr.phase.back();
  }
  const auto m = moments(sq);
  EXPECT_LE(std::abs(m.mean - gamma * t), 3 * m.se);
}

TEST(Trajectory, DichotomicValuesAndCorrelation) {
  const double g = 0.7, tau_c = 0.8, t = 0.5;
  const auto tg = grid({0.0, t}, 0.01);
  const std::size_t n = 20000;
  std::vector<double> prod(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto tr = sample_trajectory(NoiseModel::dichotomic(g, tau_c), tg, 9, i);
    for (double x : tr.xi) ASSERT_EQ(std::abs(x), g);
    ASSERT_LE(std::abs(tr.phase.back()), g * t + 1e-12);
    prod[i] = tr.xi.front() * tr.xi.back();
  }
  const auto m = moments(prod);
  EXPECT_LE(std::abs(m.mean - g * g * std::exp(-2.0 * t / tau_c)), 3 * m.se);
}

TEST(Trajectory, SubstreamsAreReproducibleAndDistinct) {
  const auto tg = grid({0.0, 1.0}, 0.05);
  const auto a = sample_trajectory(NoiseModel::ou(1.0, 2.0), tg, 11, 4);
  const auto b = sample_trajectory(NoiseModel::ou(1.0, 2.0), tg, 11, 4);
  const auto c = sample_trajectory(NoiseModel::ou(1.0, 2.0), tg, 11, 5);
  const auto d = sample_trajectory(NoiseModel::ou(1.0, 2.0), tg, 12, 4);
  EXPECT_EQ(a.xi, b.xi);
  EXPECT_EQ(a.phase, b.phase);
  EXPECT_NE(a.xi, c.xi);
  EXPECT_NE(a.xi, d.xi);
}

TEST(Trajectory, StepHalvingConverges) {
  const auto model = NoiseModel::ou(1.0, 2.0);
  const auto fine = grid({0.0, 1.0, 2.0}, 0.02);
  const std::size_t n = 4000;
  std::vector<double> f(n), diff(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto tr = sample_trajectory(model, fine, 13, i);
    const auto coarse = coarsen(tr, model);
    ASSERT_EQ(coarse.xi.size(), (tr.xi.size() + 1) / 2);
    f[i] = std::cos(2.0 * tr.window_phase(1));
    diff[i] = f[i] - std::cos(2.0 * coarse.window_phase(1));
  }
  EXPECT_LT(std::abs(moments(diff).mean), moments(f).se);
  EXPECT_THROW(coarsen(sample_trajectory(model, grid({0.0, 0.3}, 0.1), 1, 0), model), ShapeError);
}

TEST(Ensemble, SerialAndParallelRowsAreIdentical) {
  const auto fill = [](std::uint64_t i, std::span<double> row) {
    auto rng = substream(3, i);
    std::normal_distribution<double> n;
    for (auto& v : row) v = n(rng);
  };
  const auto a = run_ensemble(5000, 3, fill, Exec::serial);
  const auto b = run_ensemble(5000, 3, fill, Exec::parallel);
  EXPECT_EQ(a, b);
  EXPECT_EQ(column_means(a, 3), column_means(b, 3));
}

TEST(Ensemble, LowestFailingIndexIsReported) {
  const auto fill = [](std::uint64_t i, std::span<double> row) {
    if (i == 3 || i == 70) throw std::runtime_error("index " + std::to_string(i));
    row[0] = 1.0;
  };
  for (Exec e : {Exec::serial, Exec::parallel}) {
    try {
      run_ensemble(100, 1, fill, e);
      FAIL() << "expected exception";
    } catch (const std::runtime_error& err) {
      EXPECT_STREQ(err.what(), "index 3");
    }
  }
}

TEST(Ensemble, ColumnStatistics) {
  const std::vector<double> stats = {1, 10, 2, 20, 3, 30, 4, 40};
  const auto m = column_means(stats, 2);
  EXPECT_DOUBLE_EQ(m[0], 2.5);
  EXPECT_DOUBLE_EQ(m[1], 25.0);
  const auto se = column_stderrs(stats, 2, m);
  EXPECT_NEAR(se[0], std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
  EXPECT_NEAR(se[1], 10.0 * std::sqrt(5.0 / 3.0 / 4.0), 1e-13);
}

TEST(Coherence, FrozenMatchesGaussianDecay) {
  const double t = 0.6;
  const auto est = coherence_mc(NoiseModel::frozen(1.0), t, opts(20000, 17));
  EXPECT_LE(std::abs(est.re.mean - std::exp(-2.0 * t * t)), 3 * est.re.std_error);
  EXPECT_LE(std::abs(est.im.mean), 3 * est.im.std_error);
  EXPECT_THROW(coherence_mc(NoiseModel::frozen(1.0), t, opts(50, 1)), ConfigError);
}

TEST(StochasticCpf, FastPathMatchesTable) {
  const auto model = models::stochastic_dephasing_model(NoiseModel::ou(1.0, 3.0));
  for (const auto& [t, tau] : std::vector<std::pair<double, double>>{{0.5, 0.5}, {1.0, 0.3}, {0.2, 1.4}}) {
    const auto o = opts(2000, 19);
    const auto table = cpf_table_stochastic(model.system, model.schedule(t, tau), model.noise, o);
    const auto fast = dephasing_fast_path(model.noise, t, tau, o);
    EXPECT_NEAR(table.cpf.mean, fast.cpf.mean, 1e-12);
    const double xs[2] = {1.0, -1.0};
    for (std::size_t z = 0; z < 2; ++z)
      for (std::size_t x = 0; x < 2; ++x) {
        const double expect =
            0.25 * (1 + xs[x] * fast.f_t.mean + xs[z] * fast.f_tau.mean + xs[z] * xs[x] * fast.f_t_tau.mean);
        EXPECT_NEAR(table.table(z, x), expect, 1e-12);
      }
  }
}

TEST(StochasticCpf, OrderOneGeneralPathIsBitwiseIdentical) {
  const auto model = models::stochastic_dephasing_model(NoiseModel::dichotomic(1.0, 0.5));
  const auto o = opts(1000, 23);
  const auto a = cpf_table_stochastic(model.system, model.schedule(0.7, 0.9), model.noise, o);
  const auto b = cpf_table_stochastic_n(model.system, model.schedule(0.7, 0.9), model.noise, o);
  EXPECT_EQ(a.table, b.table);
  EXPECT_EQ(a.cpf.mean, b.cpf.mean);
  EXPECT_EQ(a.cpf.std_error, b.cpf.std_error);
}

TEST(StochasticCpf, ZeroCouplingGivesZero) {
  const auto model = models::stochastic_dephasing_model(NoiseModel::ou(0.0, 1.0));
  const auto r = cpf_table_stochastic(model.system, model.schedule(1.0, 1.0), model.noise, opts(500, 29));
  EXPECT_LE(std::abs(r.cpf.mean), 1e-12);
}

TEST(StochasticCpf, SerialAndParallelAreBitwiseIdentical) {
  const auto model = models::stochastic_dephasing_model(NoiseModel::ou(1.0, 1.0));
  const auto a = cpf_table_stochastic(model.system, model.schedule(0.5, 0.5), model.noise, opts(3000, 31, Exec::serial));
  const auto b =
      cpf_table_stochastic(model.system, model.schedule(0.5, 0.5), model.noise, opts(3000, 31, Exec::parallel));
  EXPECT_EQ(a.table, b.table);
  EXPECT_EQ(a.std_error, b.std_error);
  EXPECT_EQ(a.cpf.std_error, b.cpf.std_error);
}

TEST(StochasticCpf, DegenerateConditioning) {
  // z-basis middle read on |+><+| with y = "-" never fires.
  const auto model = models::stochastic_dephasing_model(NoiseModel::ou(1.0, 1.0));
  const auto x = measure::pauli_x_basis();
  const auto z = measure::pauli_z_basis();
  const auto sched = cpf::MeasurementSchedule::three_point(z, z, "-", x, 0.5, 0.5);
  EXPECT_THROW(cpf_table_stochastic(model.system, sched, model.noise, opts(500, 1)), DegeneratePostSelection);
}

TEST(StochasticCpf, FrozenSecondOrderMatchesQuadrature) {
  // For a fixed ξ the x̂ record is a Markov chain with flip kernel
  // (1 + s s' cos 2ξΔ)/2; average over ξ ~ N(0, g²) on a fine grid.
  const double g = 1.0;
  const std::vector<double> times = {0.0, 0.4, 0.9, 1.5};
  const auto x = measure::pauli_x_basis();
  const cpf::MeasurementSchedule sched(x, {{x, "+", std::nullopt}, {x, "+", std::nullopt}}, x, times);
  const auto model = models::stochastic_dephasing_model(NoiseModel::frozen(g));
  const auto r = cpf_table_stochastic_n(model.system, sched, model.noise, opts(40000, 37));

  const double s[2] = {1.0, -1.0};
  double p[2][2] = {{0, 0}, {0, 0}};
  const int m = 8000;
  const double lim = 10.0 * g, h = 2.0 * lim / m;
  for (int k = 0; k <= m; ++k) {
    const double xi = -lim + h * k;
    const double w = (k == 0 || k == m ? 0.5 : 1.0) * h * std::exp(-0.5 * xi * xi / (g * g)) / std::sqrt(2.0 * M_PI) / g;
    const auto kern = [&](double a, double b, double dt) { return 0.5 * (1.0 + a * b * std::cos(2.0 * xi * dt)); };
    for (int zi = 0; zi < 2; ++zi)
      for (int xi_ = 0; xi_ < 2; ++xi_)
        p[zi][xi_] += w * 0.5 * kern(s[xi_], 1.0, times[1]) * kern(1.0, 1.0, times[2] - times[1]) *
                      kern(1.0, s[zi], times[3] - times[2]);
  }
  const double py = p[0][0] + p[0][1] + p[1][0] + p[1][1];
  double exz = 0, ex = 0, ez = 0;
  for (int zi = 0; zi < 2; ++zi)
    for (int xi_ = 0; xi_ < 2; ++xi_) {
      exz += p[zi][xi_] / py * s[zi] * s[xi_];
      ex += p[zi][xi_] / py * s[xi_];
      ez += p[zi][xi_] / py * s[zi];
    }
  const double oracle = exz - ex * ez;
  EXPECT_GT(std::abs(oracle), 0.01);
  EXPECT_LE(std::abs(r.cpf.mean - oracle), 3 * r.cpf.std_error) << r.cpf.mean << " vs " << oracle;
}

TEST(Factorization, WhitePassesOuFails) {
  const auto white = white_factorization_test(NoiseModel::white(1.0), 0.5, 0.5, opts(20000, 41));
  EXPECT_TRUE(white.passed) << white.z_score;
  const auto ou = white_factorization_test(NoiseModel::ou(1.0, 2.0), 0.5, 0.5, opts(20000, 41));
  EXPECT_FALSE(ou.passed) << ou.z_score;
  EXPECT_GT(ou.covariance, 0.0);
}

TEST(EffectOperator, TrajectoryEffectIsHeisenbergPicture) {
  const auto model = models::stochastic_dephasing_model(NoiseModel::ou(1.0, 1.0));
  const auto x = measure::pauli_x_basis();
  const cpf::MeasurementSchedule sched(x, {{x, "+", std::nullopt}, {x, "-", std::nullopt}}, x, {0.0, 0.3, 0.8, 1.0});
  const double bp[] = {0.0, 0.3, 0.8, 1.0};
  const auto tr = sample_trajectory(model.noise, std::make_shared<const TimeGrid>(bp, 0.01), 43, 0);
  const auto e = trajectory_effect_operator(model.system, sched, tr);
  // E = Ω_1† U_1† Ω_2† Ω_2 U_1 Ω_1 with U_1 = exp(−iσzΦ_1).
  const auto u1 = model.system.propagator(tr.window_phase(1));
  const auto& o1 = x.op(0);
  const auto& o2 = x.op(1);
  const qmat::CMatrix expect = o1.adjoint() * u1.adjoint() * o2.adjoint() * o2 * u1 * o1;
  EXPECT_LE(qmat::max_abs_diff(e, expect), 1e-14);
}
