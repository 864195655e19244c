#include "cpfsim/validation.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "cpfsim/classical.hpp"
#include "cpfsim/config.hpp"
#include "cpfsim/cpf.hpp"
#include "cpfsim/errors.hpp"
#include "cpfsim/exec.hpp"
#include "cpfsim/grid_io.hpp"
#include "cpfsim/models.hpp"
#include "cpfsim/random_ops.hpp"
#include "cpfsim/runner.hpp"
#include "cpfsim/stochastic.hpp"

namespace cpfsim::validation {

namespace {

// Pinned tolerances.
constexpr double kCrossPathTol = 1e-10;
constexpr double kCrossPathSeconds = 30.0;
constexpr double kMarkovNullTol = 1e-12;
constexpr std::size_t kMarkovSchedules = 100;
constexpr double kGaussianTol = 0.02;
constexpr double kPlateauLo = 0.45;
constexpr double kPlateauHi = 0.51;
constexpr double kGaussianSeconds = 5.0;
constexpr double kLimitTol = 1e-12;
constexpr double kSymmetryTol = 1e-12;
constexpr double kSigmas = 3.0;
constexpr double kFrozenSeconds = 120.0;
constexpr double kWhiteGamma = 1.0;
constexpr double kOuTauC = 1.0;
constexpr double kDecayTauC = 2.0;
constexpr double kDecayRatio = 0.1;
constexpr double kClassicalTol = 1e-13;
constexpr double kHmmMin = 1e-3;
constexpr double kNthOrderTol = 1e-12;

using Clock = std::chrono::steady_clock;
using models::cplx;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double seconds_since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

const double kGridPoints[3] = {0.3, 0.7, 1.1};

double pm_one[2] = {1.0, -1.0};

models::SpinBathParams random_bath(std::size_t n, randgen::Rng& rng) {
  std::uniform_real_distribution<double> coupling(0.2, 1.5);
  std::uniform_real_distribution<double> weight(0.05, 0.95);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
  models::SpinBathParams p;
  for (std::size_t k = 0; k < n; ++k) {
    const double w = weight(rng);
    p.g.push_back(coupling(rng));
    p.alpha.push_back(std::polar(std::sqrt(w), phase(rng)));
    p.beta.push_back(std::polar(std::sqrt(1.0 - w), phase(rng)));
  }
  return p;
}

stochastic::McOptions mc(const SuiteOptions& opts) {
  stochastic::McOptions o;
  o.n_traj = opts.n_traj;
  o.seed = opts.seed;
  return o;
}

}  // namespace

CheckResult check_cross_path(const SuiteOptions& opts) {
  const auto start = Clock::now();
  CheckResult r{1, "cross-path", "dense bipartite table equals analytic table", false, "", 0.0};
  randgen::Rng rng(opts.seed);
  const auto axis = io::linspace(0.0, 2.0, 5);
  double worst = 0.0;
  std::size_t tables = 0;
  for (std::size_t n : opts.cross_path_sizes) {
    const auto params = random_bath(n, rng);
    const auto model = models::build_bipartite(params);
    for (const char* y : {"+", "-"})
      for (double t : axis)
        for (double tau : axis) {
          const auto dense = cpf::cpf_table_bipartite(model, models::x_basis_schedule(t, tau, y));
          const auto exact = models::cpf_prob_spin_analytic(params, t, tau, y);
          for (std::size_t k = 0; k < 4; ++k) worst = std::max(worst, std::abs(dense.entries()[k] - exact.entries()[k]));
          ++tables;
        }
  }
  r.seconds = seconds_since(start);
  r.passed = worst <= kCrossPathTol && r.seconds < kCrossPathSeconds && tables > 0;
  r.detail = std::to_string(tables) + " tables, max |dP| = " + fmt(worst) + " (tol " + fmt(kCrossPathTol) + ")";
  return r;
}

CheckResult check_markov_nulls(const SuiteOptions& opts) {
  const auto start = Clock::now();
  CheckResult r{2, "markov-nulls", "isolated, Markov and non-interacting chains give C_pf = 0", false, "", 0.0};
  randgen::Rng rng(opts.seed + 2);
  std::uniform_real_distribution<double> time(0.0, 3.0);
  double worst[3] = {0.0, 0.0, 0.0};
  for (std::size_t s = 0; s < kMarkovSchedules; ++s) {
    const std::size_t d = 2 + s % 2;
    const auto first = randgen::kraus_set(d, 2 + s % 3, rng);
    const auto last = randgen::kraus_set(d, 2 + (s / 3) % 3, rng);
    const bool projective = s % 2 == 0;
    const auto middle = projective ? randgen::projective_set(d, rng) : randgen::kraus_set(d, 2, rng);
    std::optional<measure::Preparation> prep;
    if (!projective) prep = randgen::preparation_for(middle, rng);
    const std::string y = middle.labels()[s % middle.size()];
    const auto rho0 = randgen::density(d, rng);

    const auto iso = cpf::MeasurementSchedule::three_point(first, middle, y, last, 0.0, 0.0, prep);
    worst[0] = std::max(worst[0], std::abs(cpf::cpf_correlation(cpf::cpf_table_isolated(rho0, iso), last, first)));

    const auto noisy = randgen::kraus_set(d, 3, rng);
    const cpf::Channel before(noisy.operators());
    const auto after = cpf::Channel::unitary(randgen::unitary(d, rng));
    const auto tm = cpf::cpf_table_markov(rho0, iso, s % 3 == 0 ? cpf::Channel::depolarizing(d) : before, after);
    worst[1] = std::max(worst[1], std::abs(cpf::cpf_correlation(tm, last, first)));

    const std::size_t de = 2 + s % 3;
    const auto model = cpf::BipartiteModel::non_interacting(randgen::hermitian(d, rng), randgen::hermitian(de, rng),
                                                            rho0, randgen::density(de, rng));
    const auto timed = cpf::MeasurementSchedule::three_point(first, middle, y, last, time(rng), time(rng), prep);
    worst[2] = std::max(worst[2],
                        std::abs(cpf::cpf_correlation(cpf::cpf_table_bipartite(model, timed), last, first)));
  }
  r.seconds = seconds_since(start);
  r.passed = worst[0] <= kMarkovNullTol && worst[1] <= kMarkovNullTol && worst[2] <= kMarkovNullTol;
  r.detail = std::to_string(kMarkovSchedules) + " schedules per route, max |C_pf| isolated " + fmt(worst[0]) +
             ", markov " + fmt(worst[1]) + ", non-interacting " + fmt(worst[2]) + " (tol " + fmt(kMarkovNullTol) + ")";
  return r;
}

CheckResult check_gaussian_approx(const SuiteOptions&) {
  const auto start = Clock::now();
  CheckResult r{3, "gaussian", "N = 50 spin bath vs large-N Gaussian form, C_pf(t,t) plateau", false, "", 0.0};
  const auto params = models::SpinBathParams::uniform(50);
  const auto axis = io::linspace(0.0, 2.0, 41);
  double worst = 0.0;
  for (double t : axis)
    for (double tau : axis) {
      worst = std::max(worst, std::abs(models::cpf_spin_exact(params, t, tau) - models::cpf_gaussian_approx(1.0, t, tau)));
    }
  double lo = 1.0;
  double hi = -1.0;
  for (double t : io::linspace(1.5, 2.5, 21)) {
    const double c = models::cpf_spin_exact(params, t, t);
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  r.seconds = seconds_since(start);
  r.passed = worst <= kGaussianTol && lo >= kPlateauLo && hi <= kPlateauHi && r.seconds < kGaussianSeconds;
  r.detail = "max |exact - approx| = " + fmt(worst) + " (tol " + fmt(kGaussianTol) + "), C_pf(t,t) on [1.5,2.5] in [" +
             fmt(lo) + ", " + fmt(hi) + "]";
  return r;
}

CheckResult check_boundary_limits(const SuiteOptions& opts) {
  const auto start = Clock::now();
  CheckResult r{4, "limits", "C_pf(t,0) = C_pf(0,tau) = 0 and C_pf(t,tau) = C_pf(tau,t)", false, "", 0.0};
  randgen::Rng rng(opts.seed + 4);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
  const auto axis = io::linspace(0.0, 3.0, 31);
  double edge = 0.0;
  for (std::size_t n : {2, 5, 11, 50}) {
    const auto params = random_bath(n, rng);
    for (double t : axis) {
      edge = std::max(edge, std::abs(models::cpf_spin_exact(params, t, 0.0)));
      edge = std::max(edge, std::abs(models::cpf_spin_exact(params, 0.0, t)));
    }
  }
  double dense_edge = 0.0;
  {
    const auto params = random_bath(3, rng);
    const auto model = models::build_bipartite(params);
    for (double t : io::linspace(0.0, 3.0, 7)) {
      for (const auto& sched : {models::x_basis_schedule(t, 0.0), models::x_basis_schedule(0.0, t)}) {
        const auto table = cpf::cpf_table_bipartite(model, sched);
        dense_edge = std::max(dense_edge, std::abs(cpf::cpf_correlation(table, pm_one, pm_one)));
      }
    }
  }
  double asym = 0.0;
  const auto grid = io::linspace(0.0, 3.0, 20);
  for (std::size_t n : {3, 10, 50}) {
    auto params = random_bath(n, rng);
    for (std::size_t k = 0; k < n; ++k) {
      params.alpha[k] = std::polar(1.0 / std::sqrt(2.0), phase(rng));
      params.beta[k] = std::polar(1.0 / std::sqrt(2.0), phase(rng));
    }
    for (double t : grid)
      for (double tau : grid) {
        asym = std::max(asym, std::abs(models::cpf_spin_exact(params, t, tau) - models::cpf_spin_exact(params, tau, t)));
      }
  }
  r.seconds = seconds_since(start);
  r.passed = edge <= kLimitTol && dense_edge <= kLimitTol && asym <= kSymmetryTol;
  r.detail = "max edge |C_pf| analytic " + fmt(edge) + ", dense " + fmt(dense_edge) + "; max asymmetry " + fmt(asym);
  return r;
}

CheckResult check_frozen_noise(const SuiteOptions& opts) {
  const auto start = Clock::now();
  CheckResult r{5, "frozen-noise", "frozen OU noise reproduces the Gaussian C_pf", false, "", 0.0};
  const auto model = models::stochastic_dephasing_model(stochastic::NoiseModel::frozen(1.0));
  double worst_z = 0.0;
  bool ok = true;
  for (double t : kGridPoints)
    for (double tau : kGridPoints) {
      const auto res = stochastic::cpf_table_stochastic(model.system, model.schedule(t, tau), model.noise, mc(opts));
      const double target = models::cpf_gaussian_approx(1.0, t, tau);
      const double diff = std::abs(res.cpf.mean - target);
      ok = ok && diff <= kSigmas * res.cpf.std_error;
      if (res.cpf.std_error > 0.0) worst_z = std::max(worst_z, diff / res.cpf.std_error);
    }
  r.seconds = seconds_since(start);
  r.passed = ok && r.seconds < kFrozenSeconds;
  r.detail = "9 cells, n_traj " + std::to_string(opts.n_traj) + ", max |z| = " + fmt(worst_z);
  return r;
}

CheckResult check_white_noise(const SuiteOptions& opts) {
  const auto start = Clock::now();
  CheckResult r{6, "white-noise", "white noise: c_t = exp(-2 gamma_w t) and C_pf = 0", false, "", 0.0};
  const auto noise = stochastic::NoiseModel::white(kWhiteGamma);
  const auto model = models::stochastic_dephasing_model(noise);
  bool ok = true;
  double coh_z = 0.0;
  for (double t : kGridPoints) {
    const auto c = stochastic::coherence_mc(noise, t, mc(opts));
    const double dre = std::abs(c.re.mean - std::exp(-2.0 * kWhiteGamma * t));
    ok = ok && dre <= kSigmas * c.re.std_error && std::abs(c.im.mean) <= kSigmas * c.im.std_error;
    coh_z = std::max({coh_z, dre / c.re.std_error, std::abs(c.im.mean) / c.im.std_error});
  }
  double cpf_z = 0.0;
  double fact_z = 0.0;
  for (double t : kGridPoints)
    for (double tau : kGridPoints) {
      const auto res = stochastic::cpf_table_stochastic(model.system, model.schedule(t, tau), noise, mc(opts));
      ok = ok && std::abs(res.cpf.mean) <= kSigmas * res.cpf.std_error;
      cpf_z = std::max(cpf_z, std::abs(res.cpf.mean) / res.cpf.std_error);
      const auto f = stochastic::white_factorization_test(noise, t, tau, mc(opts));
      ok = ok && f.passed;
      fact_z = std::max(fact_z, std::abs(f.z_score));
    }
  r.seconds = seconds_since(start);
  r.passed = ok;
  r.detail = "gamma_w = " + fmt(kWhiteGamma) + ", max |z| coherence " + fmt(coh_z) + ", C_pf " + fmt(cpf_z) +
             ", factorization " + fmt(fact_z);
  return r;
}

CheckResult check_ou_coherence(const SuiteOptions& opts) {
  const auto start = Clock::now();
  CheckResult r{7, "ou-coherence", "OU coherence matches the analytic benchmark", false, "", 0.0};
  const auto noise = stochastic::NoiseModel::ou(1.0, kOuTauC);
  bool ok = true;
  double worst_z = 0.0;
  for (int k = 1; k <= 10; ++k) {
    const double t = 0.3 * k;
    const auto c = stochastic::coherence_mc(noise, t, mc(opts));
    const double diff = std::abs(c.re.mean - models::ou_coherence_analytic(1.0, kOuTauC, t));
    ok = ok && diff <= kSigmas * c.re.std_error;
    worst_z = std::max(worst_z, diff / c.re.std_error);
  }
  r.seconds = seconds_since(start);
  r.passed = ok;
  r.detail = "g = 1, tau_c = " + fmt(kOuTauC) + ", 10 checkpoints on (0, 3], max |z| = " + fmt(worst_z);
  return r;
}

CheckResult check_ou_decay(const SuiteOptions& opts) {
  const auto start = Clock::now();
  CheckResult r{8, "ou-decay", "finite tau_c: C_pf(6,6) <= 0.1 C_pf(1,1) within 3 sigma", false, "", 0.0};
  const auto model = models::stochastic_dephasing_model(stochastic::NoiseModel::ou(1.0, kDecayTauC));
  const auto near = stochastic::cpf_table_stochastic(model.system, model.schedule(1.0, 1.0), model.noise, mc(opts));
  const auto far = stochastic::cpf_table_stochastic(model.system, model.schedule(6.0, 6.0), model.noise, mc(opts));
  const double c1 = near.cpf.mean;
  const double c6 = far.cpf.mean;
  r.seconds = seconds_since(start);
  r.passed = c1 > kSigmas * near.cpf.std_error && c6 <= kDecayRatio * c1 + kSigmas * far.cpf.std_error;
  r.detail = "tau_c g = " + fmt(kDecayTauC) + ", C_pf(1,1) = " + fmt(c1) + " +- " + fmt(near.cpf.std_error) +
             ", C_pf(6,6) = " + fmt(c6) + " +- " + fmt(far.cpf.std_error);
  return r;
}

CheckResult check_classical_oracle(const SuiteOptions& opts) {
  const auto start = Clock::now();
  CheckResult r{9, "classical", "Markov chains give C_pf^(n) = 0; hidden-Markov chain does not", false, "", 0.0};
  randgen::Rng rng(opts.seed + 9);
  std::uniform_real_distribution<double> value(-1.0, 1.0);
  double worst = 0.0;
  std::size_t chains = 0;
  for (std::size_t n = 1; n <= 3; ++n)
    for (std::size_t trial = 0; trial < 50; ++trial) {
      const std::size_t d = 2 + trial % 3;
      std::vector<cpf::Kernel> kernels;
      for (std::size_t k = 0; k <= n; ++k) kernels.push_back(randgen::stochastic_kernel(d, d, rng));
      const cpf::ClassicalChain chain(randgen::distribution(d, rng), kernels);
      std::vector<double> obs(d);
      for (auto& v : obs) v = value(rng);
      std::vector<std::size_t> y(n);
      for (auto& v : y) v = rng() % d;
      worst = std::max(worst, std::abs(cpf::classical_cpf(chain, obs, y, n)));
      ++chains;
    }
  const cpf::Kernel hidden{{0.9, 0.1}, {0.2, 0.8}};
  const cpf::Kernel emission{{0.8, 0.2}, {0.3, 0.7}};
  const unsigned steps[2] = {1, 1};
  const cpf::HiddenMarkovChain hmm(cpf::ClassicalChain::homogeneous({0.5, 0.5}, hidden, steps), emission);
  const std::size_t y0[1] = {0};
  const double hmm_c = cpf::cpf_from_joint(hmm.joint(), pm_one, y0);
  r.seconds = seconds_since(start);
  r.passed = worst <= kClassicalTol && std::abs(hmm_c) > kHmmMin;
  r.detail = std::to_string(chains) + " chains (n = 1..3), max |C_pf| = " + fmt(worst) + "; hidden-Markov C_pf = " +
             fmt(hmm_c);
  return r;
}

CheckResult check_nth_order(const SuiteOptions& opts) {
  const auto start = Clock::now();
  CheckResult r{10, "nth-order", "n = 1 reduction is bitwise; measurement-only chains give C_pf^(n) = 0", false, "",
                0.0};
  randgen::Rng rng(opts.seed + 10);
  std::uniform_real_distribution<double> time(0.0, 2.0);
  std::size_t mismatches = 0;
  std::size_t reductions = 0;
  for (std::size_t s = 0; s < 50; ++s) {
    const std::size_t de = 2 + s % 2;
    const cpf::BipartiteModel model(qmat::Dims{2, de}, randgen::hermitian(2 * de, rng),
                                    randgen::density(2 * de, rng));
    const auto middle = randgen::projective_set(2, rng);
    const auto sched = cpf::MeasurementSchedule::three_point(randgen::kraus_set(2, 2, rng), middle, "0",
                                                             randgen::kraus_set(2, 3, rng), time(rng), time(rng));
    ++reductions;
    if (!(cpf::cpf_table_n(model, sched) == cpf::cpf_table_bipartite(model, sched))) ++mismatches;
  }
  double worst = 0.0;
  std::size_t chains = 0;
  for (std::size_t n = 1; n <= 3; ++n)
    for (std::size_t trial = 0; trial < 40; ++trial) {
      const std::size_t d = 2 + trial % 2;
      const auto rho = randgen::density(d, rng);
      const auto model = cpf::BipartiteModel::system_only(qmat::HermitianMatrix(qmat::CMatrix::zeros(d, d)), rho);
      std::vector<cpf::MiddleMeasurement> middle;
      for (std::size_t k = 0; k < n; ++k) {
        const bool last = k + 1 == n;
        auto set = last && trial % 2 == 0 ? randgen::projective_set(d, rng) : randgen::kraus_set(d, 2, rng);
        std::optional<measure::Preparation> prep;
        if (last && trial % 2 == 1) prep = randgen::preparation_for(set, rng);
        const std::string label = set.labels()[rng() % set.size()];
        middle.push_back({std::move(set), label, std::move(prep)});
      }
      std::vector<double> times{0.0};
      for (std::size_t k = 0; k <= n; ++k) times.push_back(times.back() + time(rng));
      const auto first = randgen::kraus_set(d, 2, rng);
      const auto last = randgen::kraus_set(d, 3, rng);
      const cpf::MeasurementSchedule sched(first, std::move(middle), last, times);
      worst = std::max(worst, std::abs(cpf::cpf_correlation(cpf::cpf_table_n(model, sched), last, first)));
      ++chains;
    }
  r.seconds = seconds_since(start);
  r.passed = mismatches == 0 && worst <= kNthOrderTol;
  r.detail = std::to_string(reductions) + " n = 1 reductions (" + std::to_string(mismatches) + " mismatches), " +
             std::to_string(chains) + " measurement-only chains, max |C_pf^(n)| = " + fmt(worst);
  return r;
}

CheckResult check_determinism(const SuiteOptions& opts) {
  const auto start = Clock::now();
  CheckResult r{11, "determinism", "MC output is identical for any worker count", false, "", 0.0};
  const std::string text = R"({
    "model": {"type": "stochastic", "noise": "ou", "g": 1.0, "tau_c": 1.0},
    "grid": {"t_min": 0.2, "t_max": 1.0, "n_t": 3, "tau_min": 0.2, "tau_max": 1.0, "n_tau": 3},
    "mc": {"n_traj": 4000, "seed": )" + std::to_string(opts.seed) + "}}";
  const auto cfg = config::parse_config(text, "determinism");
  const int previous = worker_count();
  std::vector<std::string> outputs;
  for (int workers : {1, 2, 4}) {
    set_worker_count(workers);
    const auto res = runner::run_experiment(cfg);
    outputs.push_back(io::to_csv(res.grid) + io::to_json(res.grid));
  }
  runner::RunOptions serial;
  serial.exec = Exec::serial;
  const auto res = runner::run_experiment(cfg, serial);
  outputs.push_back(io::to_csv(res.grid) + io::to_json(res.grid));
  set_worker_count(previous);
  bool same = true;
  for (const auto& o : outputs) same = same && o == outputs.front();
  r.seconds = seconds_since(start);
  r.passed = same;
  r.detail = same ? "1, 2, 4 workers and the serial kernel produce identical bytes"
                  : "outputs differ between worker counts";
  return r;
}

namespace {

struct Entry {
  const char* name;
  CheckResult (*fn)(const SuiteOptions&);
};

const Entry kEntries[] = {
    {"cross-path", check_cross_path},     {"markov-nulls", check_markov_nulls}, {"gaussian", check_gaussian_approx},
    {"limits", check_boundary_limits},    {"frozen-noise", check_frozen_noise}, {"white-noise", check_white_noise},
    {"ou-coherence", check_ou_coherence}, {"ou-decay", check_ou_decay},         {"classical", check_classical_oracle},
    {"nth-order", check_nth_order},       {"determinism", check_determinism},
};

CheckResult guarded(const Entry& e, int id, const SuiteOptions& opts) {
  try {
    return e.fn(opts);
  } catch (const std::exception& ex) {
    return {id, e.name, e.name, false, std::string("error: ") + ex.what(), 0.0};
  }
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& e : kEntries) v.push_back(e.name);
    v.push_back("all");
    return v;
  }();
  return names;
}

std::vector<CheckResult> run_suite(const std::string& name, const SuiteOptions& opts) {
  std::vector<CheckResult> out;
  int id = 0;
  for (const auto& e : kEntries) {
    ++id;
    if (name == "all" || name == e.name) out.push_back(guarded(e, id, opts));
  }
  if (out.empty()) throw std::invalid_argument("unknown validation suite '" + name + "'");
  return out;
}

std::string format_line(const CheckResult& r) {
  char head[64];
  std::snprintf(head, sizeof head, "%s %2d %-13s", r.passed ? "PASS" : "FAIL", r.id, r.key.c_str());
  char tail[32];
  std::snprintf(tail, sizeof tail, " [%.2f s]", r.seconds);
  return std::string(head) + r.title + ": " + r.detail + tail;
}

std::string to_json(const std::vector<CheckResult>& results) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : results) {
    arr.push_back({{"id", r.id},
                   {"suite", r.key},
                   {"title", r.title},
                   {"passed", r.passed},
                   {"detail", r.detail},
                   {"seconds", r.seconds}});
  }
  return arr.dump(2) + "\n";
}

}  // namespace cpfsim::validation
