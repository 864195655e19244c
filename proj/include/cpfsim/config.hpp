#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cpfsim/classical.hpp"
#include "cpfsim/cpf.hpp"
#include "cpfsim/models.hpp"
#include "cpfsim/stochastic.hpp"

// Experiment configuration: a JSON document, strictly validated. Unknown keys
// are rejected and every error names the offending field path.

namespace cpfsim::config {

enum class ModelKind { spinbath, stochastic, generic_bipartite, classical_chain };

std::string to_string(ModelKind kind);

struct GridSpec {
  double t_min = 0.0;
  double t_max = 0.0;
  std::size_t n_t = 1;
  double tau_min = 0.0;
  double tau_max = 0.0;
  std::size_t n_tau = 1;
};

struct SpinBathSpec {
  models::SpinBathParams params;
  bool dense = false;
};

struct StochasticSpec {
  stochastic::NoiseModel noise;
  double max_step = 0.0;
  bool fast_path = false;
};

struct BipartiteSpec {
  qmat::Dims dims{1, 1};
  qmat::CMatrix hamiltonian;
  qmat::CMatrix rho0;
  std::optional<measure::KrausSet> first;
  std::optional<measure::KrausSet> middle;
  std::optional<measure::KrausSet> last;
  std::optional<measure::Preparation> prep;
};

struct ChainSpec {
  std::vector<double> initial;
  cpf::Kernel kernel;
  std::vector<double> observables;
  std::optional<cpf::Kernel> emission;
};

struct McSpec {
  std::size_t n_traj = 100000;
  std::uint64_t seed = 0;
};

struct OutputSpec {
  std::string csv;
  std::string json;
  std::string svg;
};

struct ExperimentConfig {
  ModelKind kind = ModelKind::spinbath;
  GridSpec grid;
  std::string y = "+";
  std::optional<McSpec> mc;
  OutputSpec output;
  bool allow_degenerate = false;

  std::optional<SpinBathSpec> spinbath;
  std::optional<StochasticSpec> stochastic;
  std::optional<BipartiteSpec> bipartite;
  std::optional<ChainSpec> chain;

  /// Canonical (key-sorted, whitespace-free) form of the parsed document.
  std::string canonical;
};

/// Throws ConfigError with "<source>:<line>:<col>" for syntax errors and
/// "<source>: <field.path>: ..." for schema errors.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "config");
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace cpfsim::config
