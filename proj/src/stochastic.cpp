#include "cpfsim/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <string>

#include "cpfsim/errors.hpp"

namespace cpfsim::stochastic {

using qmat::CMatrix;

// ---------------------------------------------------------------------------
// NoiseModel

NoiseModel NoiseModel::ou(double g, double tau_c) {
  NoiseModel m{NoiseKind::ou, g, tau_c, 0.0};
  m.validate();
  return m;
}

NoiseModel NoiseModel::white(double gamma_w) {
  NoiseModel m{NoiseKind::white, 0.0, 0.0, gamma_w};
  m.validate();
  return m;
}

NoiseModel NoiseModel::dichotomic(double g, double tau_c) {
  NoiseModel m{NoiseKind::dichotomic, g, tau_c, 0.0};
  m.validate();
  return m;
}

double NoiseModel::default_step() const {
  double step = 0.01;
  if (kind != NoiseKind::white) {
    if (g > 0.0) step = 0.01 / g;
    if (std::isfinite(tau_c)) step = std::min(step, tau_c / 20.0);
  }
  return step;
}

void NoiseModel::validate() const {
  switch (kind) {
    case NoiseKind::white:
      if (!(gamma_w >= 0.0) || !std::isfinite(gamma_w)) throw ConfigError("white noise: gamma_w must be finite and >= 0");
      break;
    case NoiseKind::ou:
    case NoiseKind::dichotomic:
      if (!(g >= 0.0) || !std::isfinite(g)) throw ConfigError("noise amplitude g must be finite and >= 0");
      if (!(tau_c > 0.0)) throw ConfigError("correlation time tau_c must be > 0");
      if (kind == NoiseKind::dichotomic && !std::isfinite(tau_c)) {
        throw ConfigError("dichotomic noise needs a finite tau_c");
      }
      break;
  }
}

// ---------------------------------------------------------------------------
// TimeGrid

TimeGrid::TimeGrid(std::span<const double> breakpoints, double max_step) : max_step_(0.0) {
  if (breakpoints.empty()) throw ConfigError("TimeGrid: no breakpoints");
  if (!(max_step > 0.0)) throw ConfigError("TimeGrid: step must be positive");
  t_.push_back(breakpoints[0]);
  bp_index_.push_back(0);
  for (std::size_t k = 1; k < breakpoints.size(); ++k) {
    const double a = breakpoints[k - 1];
    const double b = breakpoints[k];
    if (!(b >= a)) throw ConfigError("TimeGrid: breakpoints must be non-decreasing");
    const double span = b - a;
    if (span > 0.0) {
      const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(span / max_step - 1e-9)));
      const double h = span / static_cast<double>(steps);
      max_step_ = std::max(max_step_, h);
      for (std::size_t s = 1; s < steps; ++s) t_.push_back(a + static_cast<double>(s) * h);
      t_.push_back(b);
    }
    bp_index_.push_back(t_.size() - 1);
  }
}

TimeGrid::TimeGrid(std::vector<double> times, std::vector<std::size_t> breakpoint_index)
    : t_(std::move(times)), bp_index_(std::move(breakpoint_index)), max_step_(0.0) {
  if (t_.empty()) throw ConfigError("TimeGrid: no points");
  for (std::size_t i = 1; i < t_.size(); ++i) {
    if (!(t_[i] > t_[i - 1])) throw ConfigError("TimeGrid: points must be increasing");
    max_step_ = std::max(max_step_, t_[i] - t_[i - 1]);
  }
  for (std::size_t k = 0; k < bp_index_.size(); ++k) {
    if (bp_index_[k] >= t_.size() || (k > 0 && bp_index_[k] < bp_index_[k - 1])) {
      throw ConfigError("TimeGrid: invalid breakpoint index");
    }
  }
}

// ---------------------------------------------------------------------------
// Trajectories

std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x43504673u};
  return std::mt19937_64(seq);
}

NoiseTrajectory sample_trajectory(const NoiseModel& model, std::shared_ptr<const TimeGrid> grid,
                                  std::uint64_t seed, std::uint64_t index) {
  const auto& t = grid->times();
  const std::size_t n = t.size();
  NoiseTrajectory out;
  out.xi.assign(n, 0.0);
  out.phase.assign(n, 0.0);
  auto rng = substream(seed, index);
  std::normal_distribution<double> normal(0.0, 1.0);

  switch (model.kind) {
    case NoiseKind::ou: {
      if (std::isfinite(model.tau_c) && grid->max_step() > model.tau_c / 20.0 * (1.0 + 1e-12)) {
        throw StepSizeError("OU noise: step " + std::to_string(grid->max_step()) + " exceeds tau_c/20 = " +
                            std::to_string(model.tau_c / 20.0));
      }
      out.xi[0] = model.g * normal(rng);
      const bool frozen = model.is_frozen();
      double last_h = -1.0;
      double decay = 0.0;
      double kick = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const double h = t[i + 1] - t[i];
        if (frozen) {
          out.xi[i + 1] = out.xi[i];
        } else {
          if (h != last_h) {
            last_h = h;
            decay = std::exp(-h / model.tau_c);
            kick = model.g * std::sqrt(1.0 - decay * decay);
          }
          out.xi[i + 1] = decay * out.xi[i] + kick * normal(rng);
        }
        out.phase[i + 1] = out.phase[i] + 0.5 * h * (out.xi[i] + out.xi[i + 1]);
      }
      break;
    }
    case NoiseKind::white: {
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const double h = t[i + 1] - t[i];
        const double dphi = std::sqrt(model.gamma_w * h) * normal(rng);
        out.xi[i + 1] = dphi / h;
        out.phase[i + 1] = out.phase[i] + dphi;
      }
      if (n > 1) out.xi[0] = out.xi[1];
      break;
    }
    case NoiseKind::dichotomic: {
      std::bernoulli_distribution coin(0.5);
      std::exponential_distribution<double> wait(1.0 / model.tau_c);
      double value = coin(rng) ? model.g : -model.g;
      double next_flip = t[0] + wait(rng);
      out.xi[0] = value;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        double cur = t[i];
        double acc = 0.0;
        while (next_flip < t[i + 1]) {
          acc += value * (next_flip - cur);
          cur = next_flip;
          value = -value;
          next_flip += wait(rng);
        }
        acc += value * (t[i + 1] - cur);
        out.phase[i + 1] = out.phase[i] + acc;
        out.xi[i + 1] = value;
      }
      break;
    }
  }
  out.grid = std::move(grid);
  return out;
}

NoiseTrajectory coarsen(const NoiseTrajectory& fine, const NoiseModel& model) {
  const TimeGrid& g = *fine.grid;
  std::vector<std::size_t> keep{g.breakpoint_index(0)};
  std::vector<std::size_t> bp{0};
  for (std::size_t k = 1; k < g.breakpoints(); ++k) {
    const std::size_t i0 = g.breakpoint_index(k - 1);
    const std::size_t i1 = g.breakpoint_index(k);
    if ((i1 - i0) % 2 != 0) throw ShapeError("coarsen: segment has an odd number of steps");
    for (std::size_t i = i0 + 2; i <= i1; i += 2) keep.push_back(i);
    bp.push_back(keep.size() - 1);
  }
  std::vector<double> times;
  NoiseTrajectory out;
  for (std::size_t i : keep) {
    times.push_back(g.times()[i]);
    out.xi.push_back(fine.xi[i]);
  }
  out.phase.assign(keep.size(), 0.0);
  for (std::size_t j = 1; j < keep.size(); ++j) {
    if (model.kind == NoiseKind::ou) {
      const double h = times[j] - times[j - 1];
      out.phase[j] = out.phase[j - 1] + 0.5 * h * (out.xi[j - 1] + out.xi[j]);
    } else {
      out.phase[j] = fine.phase[keep[j]] - fine.phase[keep[0]];
    }
  }
  out.grid = std::make_shared<const TimeGrid>(std::move(times), std::move(bp));
  return out;
}

// ---------------------------------------------------------------------------
// Ensembles

std::vector<double> run_ensemble(std::size_t n_traj, std::size_t width, const TrajectoryKernel& fill, Exec exec) {
  std::vector<double> stats(n_traj * width, 0.0);
  if (exec == Exec::serial) {
    for (std::size_t i = 0; i < n_traj; ++i) fill(i, std::span<double>(stats.data() + i * width, width));
    return stats;
  }
  std::exception_ptr error;
  std::size_t error_index = n_traj;
  const auto count = static_cast<std::ptrdiff_t>(n_traj);
#pragma omp parallel for schedule(dynamic, 256)
  for (std::ptrdiff_t ii = 0; ii < count; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    try {
      fill(i, std::span<double>(stats.data() + i * width, width));
    } catch (...) {
#pragma omp critical(cpfsim_ensemble_error)
      {
        // Keep the lowest failing index so the reported error matches the
        // serial kernel.
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
      }
    }
  }
  if (error) std::rethrow_exception(error);
  return stats;
}

std::vector<double> column_means(std::span<const double> stats, std::size_t width) {
  const std::size_t n = stats.size() / width;
  std::vector<double> m(width, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < width; ++c) m[c] += stats[i * width + c];
  for (auto& v : m) v /= static_cast<double>(n);
  return m;
}

std::vector<double> column_stderrs(std::span<const double> stats, std::size_t width, std::span<const double> means) {
  const std::size_t n = stats.size() / width;
  std::vector<double> s(width, 0.0);
  if (n < 2) return s;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < width; ++c) {
      const double d = stats[i * width + c] - means[c];
      s[c] += d * d;
    }
  for (auto& v : s) v = std::sqrt(v / static_cast<double>(n - 1) / static_cast<double>(n));
  return s;
}

namespace {

double stderr_of(const std::vector<double>& influence) {
  const std::size_t n = influence.size();
  if (n < 2) return 0.0;
  double s = 0.0;
  for (double v : influence) s += v * v;
  return std::sqrt(s / static_cast<double>(n - 1) / static_cast<double>(n));
}

McEstimate estimate(double mean, double se, const McOptions& opts) { return {mean, se, opts.n_traj, opts.seed}; }

std::shared_ptr<const TimeGrid> grid_for(const NoiseModel& noise, std::span<const double> breakpoints,
                                         const McOptions& opts) {
  noise.validate();
  const double step = opts.max_step > 0.0 ? opts.max_step : noise.default_step();
  return std::make_shared<const TimeGrid>(breakpoints, step);
}

void require_trajectories(const McOptions& opts, std::size_t minimum) {
  if (opts.n_traj < minimum) {
    throw ConfigError("Monte Carlo needs at least " + std::to_string(minimum) + " trajectories");
  }
}

}  // namespace

CoherenceEstimate coherence_mc(const NoiseModel& model, double t, const McOptions& opts) {
  require_trajectories(opts, 100);
  const double bps[] = {0.0, t};
  const auto grid = grid_for(model, bps, opts);
  const auto stats = run_ensemble(
      opts.n_traj, 2,
      [&](std::uint64_t i, std::span<double> row) {
        const auto traj = sample_trajectory(model, grid, opts.seed, i);
        const double phi = traj.window_phase(0);
        row[0] = std::cos(2.0 * phi);
        row[1] = -std::sin(2.0 * phi);
      },
      opts.exec);
  const auto m = column_means(stats, 2);
  const auto s = column_stderrs(stats, 2, m);
  return {estimate(m[0], s[0], opts), estimate(m[1], s[1], opts)};
}

// ---------------------------------------------------------------------------
// Stochastic CPF tables

StochasticSystem::StochasticSystem(qmat::HermitianMatrix coupling, qmat::DensityMatrix rho0)
    : h_(std::move(coupling)), rho0_(std::move(rho0)) {
  if (h_.dim() != rho0_.dim()) throw ShapeError("StochasticSystem: coupling and state dimensions differ");
  prop_ = std::make_shared<const qmat::UnitaryPropagator>(h_);
}

StochasticCpfResult cpf_table_stochastic(const StochasticSystem& system, const cpf::MeasurementSchedule& sched,
                                         const NoiseModel& noise, const McOptions& opts) {
  if (sched.order() != 1) throw ConfigError("cpf_table_stochastic: expects a single conditioning measurement");
  return cpf_table_stochastic_n(system, sched, noise, opts);
}

StochasticCpfResult cpf_table_stochastic_n(const StochasticSystem& system, const cpf::MeasurementSchedule& sched,
                                           const NoiseModel& noise, const McOptions& opts) {
  require_trajectories(opts, 2);
  if (sched.dim() != system.dim()) throw ShapeError("cpf_table_stochastic: measurement/system dimension mismatch");
  const auto grid = grid_for(noise, sched.times(), opts);
  const std::size_t nz = sched.last().size();
  const std::size_t nx = sched.first().size();
  const std::size_t cells = nz * nx;
  const std::size_t width = cells + 1;
  const std::size_t windows = sched.order() + 1;
  const qmat::Dims dims{system.dim(), 1};

  const auto stats = run_ensemble(
      opts.n_traj, width,
      [&](std::uint64_t i, std::span<double> row) {
        const auto traj = sample_trajectory(noise, grid, opts.seed, i);
        std::vector<CMatrix> us;
        us.reserve(windows);
        for (std::size_t k = 0; k < windows; ++k) us.push_back(system.propagator(traj.window_phase(k)));
        const auto cw = cpf::chain_weights(system.rho0().matrix(), dims, sched, us);
        std::copy(cw.joint.begin(), cw.joint.end(), row.begin());
        row[cells] = cw.total_weight();
      },
      opts.exec);

  const auto mean = column_means(stats, width);
  const auto se = column_stderrs(stats, width, mean);
  const double den = mean[cells];
  if (!(den > measure::kZeroProbability) || den <= 3.0 * se[cells]) {
    throw DegeneratePostSelection("stochastic P(y) estimate " + std::to_string(den) + " ± " +
                                  std::to_string(se[cells]) + " is not resolved from zero");
  }

  StochasticCpfResult out{cpf::table_from_weights(sched, std::span<const double>(mean.data(), cells), den), {}, {}, {}};
  out.p_y = estimate(den, se[cells], opts);

  const std::size_t n = opts.n_traj;
  // Ratio estimator standard errors: var(N − P D) / (n D̄²).
  out.std_error.assign(cells, 0.0);
  std::vector<double> influence(n);
  for (std::size_t c = 0; c < cells; ++c) {
    const double p = mean[c] / den;
    for (std::size_t i = 0; i < n; ++i) influence[i] = (stats[i * width + c] - p * stats[i * width + cells]) / den;
    out.std_error[c] = stderr_of(influence);
  }

  // C_pf = A/D − B C/D² with A = Σ O_z O_x N_zx, B = Σ O_z N_zx, C = Σ O_x N_zx.
  const auto& oz = sched.last().values();
  const auto& ox = sched.first().values();
  auto moments = [&](const double* r, double& a, double& b, double& c) {
    a = b = c = 0.0;
    for (std::size_t z = 0; z < nz; ++z)
      for (std::size_t x = 0; x < nx; ++x) {
        const double v = r[z * nx + x];
        a += oz[z] * ox[x] * v;
        b += oz[z] * v;
        c += ox[x] * v;
      }
  };
  double am, bm, cm;
  moments(mean.data(), am, bm, cm);
  const double ga = 1.0 / den;
  const double gb = -cm / (den * den);
  const double gc = -bm / (den * den);
  const double gd = -am / (den * den) + 2.0 * bm * cm / (den * den * den);
  for (std::size_t i = 0; i < n; ++i) {
    double a, b, c;
    moments(stats.data() + i * width, a, b, c);
    influence[i] = ga * (a - am) + gb * (b - bm) + gc * (c - cm) + gd * (stats[i * width + cells] - den);
  }
  out.cpf = estimate(cpf::cpf_correlation(out.table, sched.last(), sched.first()), stderr_of(influence), opts);
  return out;
}

CMatrix trajectory_effect_operator(const StochasticSystem& system, const cpf::MeasurementSchedule& sched,
                                   const NoiseTrajectory& traj) {
  std::vector<CMatrix> omegas;
  for (const auto& m : sched.middle()) omegas.push_back(m.set.op(m.set.index_of(m.outcome)));
  std::vector<CMatrix> between;
  for (std::size_t k = 1; k < sched.order(); ++k) between.push_back(system.propagator(traj.window_phase(k)));
  return cpf::effect_operator_heisenberg(omegas, between);
}

FastPathResult dephasing_fast_path(const NoiseModel& noise, double t, double tau, const McOptions& opts) {
  require_trajectories(opts, 2);
  const double bps[] = {0.0, t, t + tau};
  const auto grid = grid_for(noise, bps, opts);
  const auto stats = run_ensemble(
      opts.n_traj, 3,
      [&](std::uint64_t i, std::span<double> row) {
        const auto traj = sample_trajectory(noise, grid, opts.seed, i);
        row[0] = std::cos(2.0 * traj.window_phase(0));
        row[1] = std::cos(2.0 * traj.window_phase(1));
        row[2] = row[0] * row[1];
      },
      opts.exec);
  const auto m = column_means(stats, 3);
  const auto s = column_stderrs(stats, 3, m);
  std::vector<double> influence(opts.n_traj);
  for (std::size_t i = 0; i < opts.n_traj; ++i) {
    const double* r = stats.data() + i * 3;
    influence[i] = (r[2] - m[2]) - m[1] * (r[0] - m[0]) - m[0] * (r[1] - m[1]);
  }
  FastPathResult out;
  out.f_t = estimate(m[0], s[0], opts);
  out.f_tau = estimate(m[1], s[1], opts);
  out.f_t_tau = estimate(m[2], s[2], opts);
  out.cpf = estimate(m[2] - m[0] * m[1], stderr_of(influence), opts);
  return out;
}

FactorizationReport white_factorization_test(const NoiseModel& noise, double t, double tau, const McOptions& opts) {
  require_trajectories(opts, 2);
  const double bps[] = {0.0, t, t + tau};
  const auto grid = grid_for(noise, bps, opts);
  const auto stats = run_ensemble(
      opts.n_traj, 2,
      [&](std::uint64_t i, std::span<double> row) {
        const auto traj = sample_trajectory(noise, grid, opts.seed, i);
        row[0] = std::cos(2.0 * traj.window_phase(0));
        row[1] = std::cos(2.0 * traj.window_phase(1));
      },
      opts.exec);
  const auto m = column_means(stats, 2);
  const auto s = column_stderrs(stats, 2, m);
  const std::size_t n = opts.n_traj;
  std::vector<double> products(n);
  double cov = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    products[i] = (stats[2 * i] - m[0]) * (stats[2 * i + 1] - m[1]);
    cov += products[i];
  }
  cov /= static_cast<double>(n);
  for (auto& p : products) p -= cov;

  FactorizationReport r;
  r.covariance = cov;
  r.std_error = stderr_of(products);
  r.z_score = r.std_error > 0.0 ? cov / r.std_error : 0.0;
  r.passed = std::abs(r.z_score) <= 3.0;
  r.f_before = estimate(m[0], s[0], opts);
  r.f_after = estimate(m[1], s[1], opts);
  return r;
}

}  // namespace cpfsim::stochastic
