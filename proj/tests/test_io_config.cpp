#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <nlohmann/json.hpp>

#include "cpfsim/config.hpp"
#include "cpfsim/errors.hpp"
#include "cpfsim/grid_io.hpp"
#include "cpfsim/runner.hpp"

using namespace cpfsim;

namespace {

std::string error_of(const std::string& text) {
  try {
    config::parse_config(text, "test.cfg");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

const char* kSpin = R"({
  "model": {"type": "spinbath", "n_spins": 4, "g": 1.0},
  "grid": {"t_min": 0, "t_max": 1, "n_t": 3, "tau_min": 0, "tau_max": 1, "n_tau": 2}
})";

}  // namespace

TEST(GridIo, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 0.48185209242521704, 1e22, 0.0}) {
    EXPECT_EQ(std::stod(io::format_double(v)), v);
  }
  EXPECT_EQ(io::format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(io::format_double(0.5), "0.5");
}

TEST(GridIo, Linspace) {
  EXPECT_EQ(io::linspace(1.0, 2.0, 1), std::vector<double>{1.0});
  const auto v = io::linspace(0.0, 2.0, 5);
  ASSERT_EQ(v.size(), 5u);
  EXPECT_EQ(v.front(), 0.0);
  EXPECT_EQ(v.back(), 2.0);
  EXPECT_DOUBLE_EQ(v[1], 0.5);
}

TEST(GridIo, CsvRoundTripIsExact) {
  io::CpfGrid g(io::linspace(0.0, 1.0, 3), io::linspace(0.0, 0.7, 2), "+");
  for (std::size_t k = 0; k < g.cells(); ++k) {
    g.cpf.push_back(std::sin(0.3 * k + 0.1) / 3.0);
    g.std_error.push_back(k == 2 ? std::numeric_limits<double>::quiet_NaN() : 1e-3 * k);
  }
  g.cpf[4] = std::numeric_limits<double>::quiet_NaN();
  const std::string csv = io::to_csv(g);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,tau,y,cpf,stderr");
  const auto back = io::parse_csv(csv);
  EXPECT_EQ(back.t, g.t);
  EXPECT_EQ(back.tau, g.tau);
  EXPECT_EQ(back.y, "+");
  for (std::size_t k = 0; k < g.cells(); ++k) {
    if (std::isnan(g.cpf[k])) {
      EXPECT_TRUE(std::isnan(back.cpf[k]));
    } else {
      EXPECT_EQ(back.cpf[k], g.cpf[k]);
    }
  }
  EXPECT_EQ(io::to_csv(back), csv);
}

TEST(GridIo, CsvRejectsMalformedInput) {
  EXPECT_THROW(io::parse_csv("t,tau,y,cpf\n0,0,+,0\n"), ConfigError);
  EXPECT_THROW(io::parse_csv("t,tau,y,cpf,stderr\n0,1,+,0,0\n0,0,+,0,0\n"), ConfigError);
}

TEST(GridIo, JsonHasMetadataAndNullForNan) {
  io::CpfGrid g({0.0}, {0.0, 1.0}, "-");
  g.cpf = {0.25, std::numeric_limits<double>::quiet_NaN()};
  g.std_error = {0.0, 0.0};
  g.meta.model = "spinbath";
  g.meta.config_hash = "abc";
  g.meta.seed = 9;
  const auto doc = nlohmann::json::parse(io::to_json(g));
  EXPECT_EQ(doc["metadata"]["model"], "spinbath");
  EXPECT_EQ(doc["metadata"]["seed"], 9);
  EXPECT_TRUE(doc["cpf"][0][1].is_null());
  EXPECT_EQ(doc["cpf"][0][0], 0.25);
}

TEST(GridIo, SvgHandlesFlatAndSingleCellGrids) {
  io::CpfGrid one({0.0}, {0.0}, "+");
  one.cpf = {0.0};
  one.std_error = {0.0};
  const auto svg = io::to_svg(one);
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_EQ(svg.find("nan"), std::string::npos);
  io::CpfGrid holes({0.0, 1.0}, {0.0}, "+");
  holes.cpf = {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  holes.std_error = {0.0, 0.0};
  EXPECT_NE(io::to_svg(holes).find("</svg>"), std::string::npos);
}

TEST(GridIo, HashIsStable) {
  EXPECT_EQ(io::hex64(io::fnv1a64("")), "cbf29ce484222325");
  EXPECT_EQ(io::hex64(io::fnv1a64("a")), "af63dc4c8601ec8c");
}

TEST(Config, ParsesSpinBath) {
  const auto cfg = config::parse_config(kSpin);
  EXPECT_EQ(cfg.kind, config::ModelKind::spinbath);
  ASSERT_TRUE(cfg.spinbath);
  EXPECT_EQ(cfg.spinbath->params.size(), 4u);
  EXPECT_DOUBLE_EQ(cfg.spinbath->params.g[0], 0.5);
  EXPECT_FALSE(cfg.spinbath->dense);
  EXPECT_EQ(cfg.grid.n_t, 3u);
  EXPECT_EQ(cfg.y, "+");
  EXPECT_FALSE(cfg.mc);
}

TEST(Config, SyntaxErrorsCarryLineAndColumn) {
  const auto msg = error_of("{\n  \"model\": {\n    \"type\": spinbath\n  }\n}");
  EXPECT_EQ(msg.rfind("test.cfg:3:", 0), 0u) << msg;
}

TEST(Config, UnknownKeysAreRejectedWithPath) {
  auto doc = nlohmann::json::parse(kSpin);
  doc["model"]["n_spin"] = 3;
  EXPECT_NE(error_of(doc.dump()).find("model.n_spin"), std::string::npos) << error_of(doc.dump());
  doc = nlohmann::json::parse(kSpin);
  doc["grid"]["dt"] = 0.1;
  EXPECT_NE(error_of(doc.dump()).find("grid.dt"), std::string::npos);
  doc = nlohmann::json::parse(kSpin);
  doc["extra"] = true;
  EXPECT_NE(error_of(doc.dump()).find("extra"), std::string::npos);
}

TEST(Config, FieldErrorsNameThePath) {
  auto doc = nlohmann::json::parse(kSpin);
  doc["grid"]["t_max"] = -1.0;
  EXPECT_NE(error_of(doc.dump()).find("grid"), std::string::npos);
  doc = nlohmann::json::parse(kSpin);
  doc["model"]["path"] = "sparse";
  EXPECT_NE(error_of(doc.dump()).find("model.path"), std::string::npos);
  doc = nlohmann::json::parse(kSpin);
  doc["model"]["b"] = 0.5;
  EXPECT_NE(error_of(doc.dump()).find("model."), std::string::npos);
  doc = nlohmann::json::parse(kSpin);
  doc["model"]["n_spins"] = 12;
  doc["model"]["path"] = "dense";
  EXPECT_NE(error_of(doc.dump()).find("model.path"), std::string::npos);
  doc = nlohmann::json::parse(kSpin);
  doc["y"] = "up";
  EXPECT_NE(error_of(doc.dump()).find("y"), std::string::npos);
}

TEST(Config, McRequiredExactlyForStochastic) {
  const std::string grid = R"("grid": {"t_min": 0, "t_max": 1, "n_t": 2, "tau_min": 0, "tau_max": 1, "n_tau": 2})";
  const std::string ou = R"("model": {"type": "stochastic", "noise": "ou", "g": 1, "tau_c": "inf"})";
  EXPECT_NE(error_of("{" + ou + "," + grid + "}").find("mc"), std::string::npos);
  const auto cfg = config::parse_config("{" + ou + "," + grid + R"(, "mc": {"n_traj": 500, "seed": 3}})");
  ASSERT_TRUE(cfg.mc);
  EXPECT_EQ(cfg.mc->n_traj, 500u);
  EXPECT_TRUE(cfg.stochastic->noise.is_frozen());
  auto spin = nlohmann::json::parse(kSpin);
  spin["mc"] = {{"n_traj", 500}, {"seed", 3}};
  EXPECT_NE(error_of(spin.dump()).find("mc"), std::string::npos);
}

TEST(Config, OutputPathsDoNotChangeTheHash) {
  auto doc = nlohmann::json::parse(kSpin);
  const auto a = config::parse_config(doc.dump());
  doc["output"] = {{"csv", "out/a.csv"}};
  const auto b = config::parse_config(doc.dump());
  EXPECT_EQ(a.canonical, b.canonical);
  EXPECT_EQ(runner::config_hash(a, {}), runner::config_hash(b, {}));
  runner::RunOptions o;
  o.seed = 5;
  // Seeds only enter the hash of Monte Carlo runs.
  EXPECT_EQ(runner::config_hash(a, {}), runner::config_hash(a, o));
  const auto mc = config::parse_config(R"({
    "model": {"type": "stochastic", "noise": "white", "gamma_w": 1},
    "grid": {"t_min": 0, "t_max": 1, "n_t": 2, "tau_min": 0, "tau_max": 1, "n_tau": 2},
    "mc": {"n_traj": 500, "seed": 3}
  })");
  EXPECT_NE(runner::config_hash(mc, {}), runner::config_hash(mc, o));
  o.seed = 3;
  EXPECT_EQ(runner::config_hash(mc, {}), runner::config_hash(mc, o));
}

TEST(Runner, SpinBathGridMatchesClosedForm) {
  const auto cfg = config::parse_config(kSpin);
  const auto r = runner::run_experiment(cfg);
  ASSERT_EQ(r.grid.cells(), 6u);
  EXPECT_TRUE(r.errors.empty());
  EXPECT_NEAR(r.grid.value(0, 0), 0.0, 1e-15);
  const auto p = models::SpinBathParams::uniform(4);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      EXPECT_NEAR(r.grid.value(i, j), models::cpf_spin_exact(p, r.grid.t[i], r.grid.tau[j]), 1e-14);
  EXPECT_EQ(r.grid.meta.model, "spinbath");
}

TEST(Runner, DenseAndAnalyticPathsAgree) {
  auto doc = nlohmann::json::parse(kSpin);
  const auto analytic = runner::run_experiment(config::parse_config(doc.dump()));
  doc["model"]["path"] = "dense";
  const auto dense = runner::run_experiment(config::parse_config(doc.dump()));
  for (std::size_t k = 0; k < 6; ++k) EXPECT_NEAR(dense.grid.cpf[k], analytic.grid.cpf[k], 1e-12);
}

TEST(Runner, DegenerateCellsBecomeNan) {
  // Repeated z reads on |+> without dynamics never give y = "-".
  const auto cfg = config::parse_config(R"({
    "model": {"type": "generic-bipartite", "d_s": 2, "d_e": 1,
              "hamiltonian": [[0, 0], [0, 0]], "psi0": [1, 0],
              "first": "z", "middle": "z", "last": "x"},
    "grid": {"t_min": 0, "t_max": 1, "n_t": 2, "tau_min": 0, "tau_max": 0, "n_tau": 1},
    "y": "-"
  })");
  const auto r = runner::run_experiment(cfg);
  EXPECT_EQ(r.errors.size(), 2u);
  for (double v : r.grid.cpf) EXPECT_TRUE(std::isnan(v));
}

TEST(Runner, ClassicalChainUsesIntegerSteps) {
  const auto cfg = config::parse_config(R"({
    "model": {"type": "classical-chain", "initial": [0.5, 0.5],
              "kernel": [[0.9, 0.1], [0.2, 0.8]], "observables": [1, -1]},
    "grid": {"t_min": 1, "t_max": 3, "n_t": 3, "tau_min": 1, "tau_max": 2, "n_tau": 2}
  })");
  const auto r = runner::run_experiment(cfg);
  for (double v : r.grid.cpf) EXPECT_LE(std::abs(v), 1e-13);
  EXPECT_NE(error_of(R"({
    "model": {"type": "classical-chain", "initial": [0.5, 0.5],
              "kernel": [[0.9, 0.1], [0.2, 0.8]], "observables": [1, -1]},
    "grid": {"t_min": 0, "t_max": 1, "n_t": 3, "tau_min": 1, "tau_max": 2, "n_tau": 2}
  })").find("grid.t_max"), std::string::npos);
}

TEST(Runner, StochasticGridIsThreadIndependent) {
  const auto cfg = config::parse_config(R"({
    "model": {"type": "stochastic", "noise": "ou", "g": 1, "tau_c": 1},
    "grid": {"t_min": 0.2, "t_max": 0.6, "n_t": 2, "tau_min": 0.2, "tau_max": 0.6, "n_tau": 2},
    "mc": {"n_traj": 1000, "seed": 8}
  })");
  runner::RunOptions serial;
  serial.exec = Exec::serial;
  const auto a = runner::run_experiment(cfg, serial);
  const auto b = runner::run_experiment(cfg);
  EXPECT_EQ(io::to_csv(a.grid), io::to_csv(b.grid));
  EXPECT_EQ(io::to_json(a.grid), io::to_json(b.grid));
}
