#pragma once

#include <cstdint>
#include <string>
#include <vector>

// Built-in acceptance checks, shared by `cpfsim validate` and the acceptance
// test binary. Every tolerance lives in validation.cpp.

namespace cpfsim::validation {

struct CheckResult {
  int id = 0;
  std::string key;
  std::string title;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct SuiteOptions {
  std::vector<std::size_t> cross_path_sizes{2, 3, 4, 5, 6};
  std::size_t n_traj = 100000;
  std::uint64_t seed = 20240611;
};

CheckResult check_cross_path(const SuiteOptions& opts = {});
CheckResult check_markov_nulls(const SuiteOptions& opts = {});
CheckResult check_gaussian_approx(const SuiteOptions& opts = {});
CheckResult check_boundary_limits(const SuiteOptions& opts = {});
CheckResult check_frozen_noise(const SuiteOptions& opts = {});
CheckResult check_white_noise(const SuiteOptions& opts = {});
CheckResult check_ou_coherence(const SuiteOptions& opts = {});
CheckResult check_ou_decay(const SuiteOptions& opts = {});
CheckResult check_classical_oracle(const SuiteOptions& opts = {});
CheckResult check_nth_order(const SuiteOptions& opts = {});
CheckResult check_determinism(const SuiteOptions& opts = {});

/// Suite keys, in criterion order, plus "all".
const std::vector<std::string>& suite_names();

/// Runs one suite (or "all"); throws std::invalid_argument for unknown names.
std::vector<CheckResult> run_suite(const std::string& name, const SuiteOptions& opts = {});

/// "PASS  3 gaussian  ..." style line.
std::string format_line(const CheckResult& r);
/// JSON array of results.
std::string to_json(const std::vector<CheckResult>& results);

}  // namespace cpfsim::validation
