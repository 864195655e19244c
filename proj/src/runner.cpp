#include "cpfsim/runner.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>

#include "cpfsim/errors.hpp"
#include "cpfsim/models.hpp"

namespace cpfsim::runner {

namespace {

struct CellValue {
  double cpf = 0.0;
  double std_error = 0.0;
};

using CellFn = std::function<CellValue(double t, double tau)>;

stochastic::McOptions mc_options(const config::ExperimentConfig& cfg, const RunOptions& opts) {
  stochastic::McOptions mc;
  mc.n_traj = opts.n_traj.value_or(cfg.mc->n_traj);
  mc.seed = opts.seed.value_or(cfg.mc->seed);
  mc.exec = opts.exec;
  mc.max_step = cfg.stochastic->max_step;
  return mc;
}

std::string observables_of(const config::ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case config::ModelKind::spinbath:
    case config::ModelKind::stochastic:
      return "x-basis, O = +1/-1";
    case config::ModelKind::generic_bipartite: {
      std::string s = "O_x =";
      for (double v : cfg.bipartite->first->values()) s += " " + io::format_double(v);
      s += "; O_z =";
      for (double v : cfg.bipartite->last->values()) s += " " + io::format_double(v);
      return s;
    }
    case config::ModelKind::classical_chain: {
      std::string s = "O =";
      for (double v : cfg.chain->observables) s += " " + io::format_double(v);
      return s;
    }
  }
  return "";
}

}  // namespace

std::string config_hash(const config::ExperimentConfig& cfg, const RunOptions& opts) {
  std::string key = cfg.canonical;
  if (cfg.mc) {
    key += "|seed=" + std::to_string(opts.seed.value_or(cfg.mc->seed));
    key += "|n_traj=" + std::to_string(opts.n_traj.value_or(cfg.mc->n_traj));
  }
  return io::hex64(io::fnv1a64(key));
}

RunResult run_experiment(const config::ExperimentConfig& cfg, const RunOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  const auto& g = cfg.grid;
  RunResult result;
  result.grid = io::CpfGrid(io::linspace(g.t_min, g.t_max, g.n_t), io::linspace(g.tau_min, g.tau_max, g.n_tau), cfg.y);
  auto& grid = result.grid;
  grid.meta.model = config::to_string(cfg.kind);
  grid.meta.config_hash = config_hash(cfg, opts);
  grid.meta.version = CPFSIM_VERSION;
  grid.meta.observables = observables_of(cfg);

  CellFn cell;
  bool monte_carlo = false;
  std::optional<cpf::BipartiteModel> dense;

  switch (cfg.kind) {
    case config::ModelKind::spinbath: {
      const auto& spec = *cfg.spinbath;
      if (spec.dense) {
        dense = models::build_bipartite(spec.params);
        cell = [&](double t, double tau) {
          const auto sched = models::x_basis_schedule(t, tau, cfg.y);
          return CellValue{cpf::cpf_correlation(cpf::cpf_table_bipartite(*dense, sched), sched.last(), sched.first())};
        };
      } else {
        cell = [&](double t, double tau) {
          const auto table = models::cpf_prob_spin_analytic(spec.params, t, tau, cfg.y);
          const double ov[2] = {1.0, -1.0};
          return CellValue{cpf::cpf_correlation(table, ov, ov)};
        };
      }
      break;
    }
    case config::ModelKind::stochastic: {
      monte_carlo = true;
      const auto mc = mc_options(cfg, opts);
      grid.meta.seed = mc.seed;
      grid.meta.n_traj = mc.n_traj;
      const auto model = std::make_shared<models::StochasticDephasing>(models::stochastic_dephasing_model(cfg.stochastic->noise));
      const bool fast = cfg.stochastic->fast_path;
      cell = [&cfg, mc, model, fast](double t, double tau) {
        if (fast) {
          const auto r = stochastic::dephasing_fast_path(model->noise, t, tau, mc);
          return CellValue{r.cpf.mean, r.cpf.std_error};
        }
        const auto r = stochastic::cpf_table_stochastic(model->system, model->schedule(t, tau, cfg.y), model->noise, mc);
        return CellValue{r.cpf.mean, r.cpf.std_error};
      };
      break;
    }
    case config::ModelKind::generic_bipartite: {
      const auto& spec = *cfg.bipartite;
      dense = cpf::BipartiteModel(spec.dims, qmat::HermitianMatrix(spec.hamiltonian), qmat::DensityMatrix(spec.rho0));
      cell = [&](double t, double tau) {
        const auto sched = cpf::MeasurementSchedule::three_point(*spec.first, *spec.middle, cfg.y, *spec.last, t, tau,
                                                                 spec.prep);
        return CellValue{cpf::cpf_correlation(cpf::cpf_table_bipartite(*dense, sched), sched.last(), sched.first())};
      };
      break;
    }
    case config::ModelKind::classical_chain: {
      const auto& spec = *cfg.chain;
      const std::size_t y = std::stoul(cfg.y);
      cell = [&spec, y](double t, double tau) {
        const unsigned steps[2] = {static_cast<unsigned>(t), static_cast<unsigned>(tau)};
        const auto chain = cpf::ClassicalChain::homogeneous(spec.initial, spec.kernel, steps);
        const std::size_t ys[1] = {y};
        const auto joint = spec.emission ? cpf::HiddenMarkovChain(chain, *spec.emission).joint() : chain.joint();
        return CellValue{cpf::cpf_from_joint(joint, spec.observables, ys)};
      };
      break;
    }
  }

  const std::size_t n = grid.cells();
  std::vector<std::string> messages(n);
  auto evaluate = [&](std::size_t k) {
    const double t = grid.t[k / grid.n_tau()];
    const double tau = grid.tau[k % grid.n_tau()];
    try {
      const CellValue v = cell(t, tau);
      grid.cpf[k] = v.cpf;
      grid.std_error[k] = v.std_error;
    } catch (const DegeneratePostSelection& e) {
      grid.cpf[k] = std::numeric_limits<double>::quiet_NaN();
      grid.std_error[k] = std::numeric_limits<double>::quiet_NaN();
      messages[k] = e.what();
    }
  };

  if (monte_carlo || opts.exec == Exec::serial) {
    for (std::size_t k = 0; k < n; ++k) evaluate(k);
  } else {
    std::exception_ptr error;
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t k = 0; k < count; ++k) {
      try {
        evaluate(static_cast<std::size_t>(k));
      } catch (...) {
#pragma omp critical(cpfsim_runner_error)
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
  }

  for (std::size_t k = 0; k < n; ++k) {
    if (!messages[k].empty()) result.errors.push_back({k / grid.n_tau(), k % grid.n_tau(), messages[k]});
  }
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace cpfsim::runner
