#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cpfsim/config.hpp"
#include "cpfsim/exec.hpp"
#include "cpfsim/grid_io.hpp"

namespace cpfsim::runner {

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_traj;
  Exec exec = Exec::parallel;
};

struct CellError {
  std::size_t i = 0;
  std::size_t j = 0;
  std::string message;
};

struct RunResult {
  io::CpfGrid grid;
  std::vector<CellError> errors;
  double wall_seconds = 0.0;
};

/// Sweeps the (t, τ) grid. Exact-path cells are evaluated in parallel; Monte
/// Carlo cells run one after another with a parallel trajectory loop. Cells
/// whose conditioning outcome has zero probability become NaN and are listed
/// in `errors`.
RunResult run_experiment(const config::ExperimentConfig& cfg, const RunOptions& opts = {});

/// Hash of the effective configuration (document plus command-line overrides).
std::string config_hash(const config::ExperimentConfig& cfg, const RunOptions& opts);

}  // namespace cpfsim::runner
