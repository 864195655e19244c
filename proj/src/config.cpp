#include "cpfsim/config.hpp"

#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <set>

#include "cpfsim/errors.hpp"
#include "cpfsim/grid_io.hpp"

namespace cpfsim::config {

using nlohmann::json;
using qmat::CMatrix;
using qmat::cplx;
using qmat::CVector;

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::spinbath:
      return "spinbath";
    case ModelKind::stochastic:
      return "stochastic";
    case ModelKind::generic_bipartite:
      return "generic-bipartite";
    case ModelKind::classical_chain:
      return "classical-chain";
  }
  return "unknown";
}

namespace {

// A JSON object whose keys must all be consumed.
class Fields {
 public:
  Fields(const json& obj, std::string path, const std::string& source) : obj_(obj), path_(std::move(path)), src_(source) {
    if (!obj_.is_object()) fail(path_, "expected an object");
  }

  [[noreturn]] void fail(const std::string& field, const std::string& msg) const {
    throw ConfigError(src_ + ": " + (field.empty() ? "<root>" : field) + ": " + msg);
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return obj_.contains(key); }

  const json& get(const std::string& key) {
    if (!obj_.contains(key)) fail(at(key), "required field missing");
    seen_.insert(key);
    return obj_.at(key);
  }

  const json* maybe(const std::string& key) {
    if (!obj_.contains(key)) return nullptr;
    seen_.insert(key);
    return &obj_.at(key);
  }

  double number(const std::string& key) { return as_number(get(key), at(key)); }
  double number_or(const std::string& key, double fallback) {
    const json* v = maybe(key);
    return v ? as_number(*v, at(key)) : fallback;
  }

  std::size_t count(const std::string& key, std::size_t minimum) { return as_count(get(key), at(key), minimum); }

  std::string string(const std::string& key) { return as_string(get(key), at(key)); }
  std::string string_or(const std::string& key, std::string fallback) {
    const json* v = maybe(key);
    return v ? as_string(*v, at(key)) : fallback;
  }

  bool boolean_or(const std::string& key, bool fallback) {
    const json* v = maybe(key);
    if (!v) return fallback;
    if (!v->is_boolean()) fail(at(key), "expected true or false");
    return v->get<bool>();
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) fail(at(it.key()), "unknown key");
    }
  }

  double as_number(const json& v, const std::string& field) const {
    if (v.is_string() && (v.get<std::string>() == "inf" || v.get<std::string>() == "infinity")) {
      return std::numeric_limits<double>::infinity();
    }
    if (!v.is_number()) fail(field, "expected a number");
    return v.get<double>();
  }

  std::size_t as_count(const json& v, const std::string& field, std::size_t minimum) const {
    if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(minimum)) {
      fail(field, "expected an integer >= " + std::to_string(minimum));
    }
    return v.get<std::size_t>();
  }

  std::string as_string(const json& v, const std::string& field) const {
    if (!v.is_string()) fail(field, "expected a string");
    return v.get<std::string>();
  }

  cplx as_complex(const json& v, const std::string& field) const {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
      return {v[0].get<double>(), v[1].get<double>()};
    }
    fail(field, "expected a number or a [re, im] pair");
  }

  std::vector<double> as_reals(const json& v, const std::string& field) const {
    if (!v.is_array() || v.empty()) fail(field, "expected a non-empty array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], field + "[" + std::to_string(i) + "]"));
    return out;
  }

  CVector as_vector(const json& v, const std::string& field) const {
    if (!v.is_array() || v.empty()) fail(field, "expected a non-empty array");
    CVector out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_complex(v[i], field + "[" + std::to_string(i) + "]"));
    return out;
  }

  CMatrix as_matrix(const json& v, const std::string& field) const {
    if (!v.is_array() || v.empty()) fail(field, "expected a non-empty array of rows");
    const std::size_t rows = v.size();
    std::size_t cols = 0;
    std::vector<cplx> data;
    for (std::size_t i = 0; i < rows; ++i) {
      const auto row = as_vector(v[i], field + "[" + std::to_string(i) + "]");
      if (i == 0) cols = row.size();
      if (row.size() != cols) fail(field, "rows have different lengths");
      data.insert(data.end(), row.begin(), row.end());
    }
    return CMatrix(rows, cols, std::move(data));
  }

  cpf::Kernel as_kernel(const json& v, const std::string& field) const {
    if (!v.is_array() || v.empty()) fail(field, "expected a non-empty array of rows");
    cpf::Kernel k;
    for (std::size_t i = 0; i < v.size(); ++i) k.push_back(as_reals(v[i], field + "[" + std::to_string(i) + "]"));
    return k;
  }

  const std::string& source() const { return src_; }

 private:
  const json& obj_;
  std::string path_;
  const std::string& src_;
  std::set<std::string> seen_;
};

// Scalar applied to every spin, or one entry per spin.
std::vector<cplx> per_spin(const Fields& f, const json& v, const std::string& field, std::size_t n) {
  if (v.is_array() && !(v.size() == 2 && n != 2 && v[0].is_number())) {
    auto out = f.as_vector(v, field);
    if (out.size() != n) f.fail(field, "expected " + std::to_string(n) + " entries");
    return out;
  }
  return std::vector<cplx>(n, f.as_complex(v, field));
}

SpinBathSpec parse_spinbath(Fields& m) {
  SpinBathSpec s;
  const std::size_t n = m.count("n_spins", 1);
  const double amp = 1.0 / std::sqrt(2.0);
  auto& p = s.params;
  if (m.has("couplings")) {
    if (m.has("g")) m.fail(m.at("g"), "give either g or couplings, not both");
    p.g = m.as_reals(m.get("couplings"), m.at("couplings"));
    if (p.g.size() != n) m.fail(m.at("couplings"), "expected " + std::to_string(n) + " entries");
  } else {
    p.g.assign(n, m.number_or("g", 1.0) / std::sqrt(static_cast<double>(n)));
  }
  p.alpha = m.has("alpha") ? per_spin(m, m.get("alpha"), m.at("alpha"), n) : std::vector<cplx>(n, amp);
  p.beta = m.has("beta") ? per_spin(m, m.get("beta"), m.at("beta"), n) : std::vector<cplx>(n, amp);
  if (const json* a = m.maybe("a")) p.a = m.as_complex(*a, m.at("a"));
  if (const json* b = m.maybe("b")) p.b = m.as_complex(*b, m.at("b"));
  const std::string path = m.string_or("path", "analytic");
  if (path != "analytic" && path != "dense") m.fail(m.at("path"), "expected \"analytic\" or \"dense\"");
  s.dense = path == "dense";
  try {
    p.validate();
  } catch (const ConfigError& e) {
    m.fail(m.at("alpha"), e.what());
  }
  if (s.dense && n > models::kMaxDenseBath) {
    m.fail(m.at("path"), "dense path supports at most " + std::to_string(models::kMaxDenseBath) + " spins");
  }
  if (!s.dense && (std::abs(p.a - cplx{1.0, 0.0}) > 1e-12 || std::abs(p.b) > 1e-12)) {
    m.fail(m.at("path"), "the analytic path requires a = 1, b = 0; use \"path\": \"dense\"");
  }
  return s;
}

StochasticSpec parse_stochastic(Fields& m) {
  StochasticSpec s;
  const std::string kind = m.string("noise");
  try {
    if (kind == "ou") {
      s.noise = stochastic::NoiseModel::ou(m.number("g"), m.number("tau_c"));
    } else if (kind == "white") {
      s.noise = stochastic::NoiseModel::white(m.number("gamma_w"));
    } else if (kind == "dichotomic") {
      s.noise = stochastic::NoiseModel::dichotomic(m.number("g"), m.number("tau_c"));
    } else {
      m.fail(m.at("noise"), "expected \"ou\", \"white\" or \"dichotomic\"");
    }
  } catch (const ConfigError& e) {
    if (std::string(e.what()).rfind(m.source(), 0) == 0) throw;
    m.fail(m.at("noise"), e.what());
  }
  s.max_step = m.number_or("max_step", 0.0);
  if (s.max_step < 0.0) m.fail(m.at("max_step"), "must be >= 0");
  const std::string est = m.string_or("estimator", "table");
  if (est != "table" && est != "fast-path") m.fail(m.at("estimator"), "expected \"table\" or \"fast-path\"");
  s.fast_path = est == "fast-path";
  return s;
}

measure::KrausSet parse_measurement(Fields& m, const std::string& key) {
  const json& v = m.get(key);
  const std::string field = m.at(key);
  if (v.is_string()) {
    const std::string b = v.get<std::string>();
    if (b == "x") return measure::pauli_x_basis();
    if (b == "y") return measure::pauli_y_basis();
    if (b == "z") return measure::pauli_z_basis();
    m.fail(field, "expected \"x\", \"y\", \"z\" or a measurement object");
  }
  Fields f(v, field, m.source());
  const auto labels_json = f.get("labels");
  if (!labels_json.is_array()) f.fail(f.at("labels"), "expected an array of strings");
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < labels_json.size(); ++i) {
    labels.push_back(f.as_string(labels_json[i], f.at("labels") + "[" + std::to_string(i) + "]"));
  }
  const auto values = f.as_reals(f.get("values"), f.at("values"));
  try {
    if (f.has("basis")) {
      const json& b = f.get("basis");
      if (!b.is_array()) f.fail(f.at("basis"), "expected an array of vectors");
      std::vector<CVector> basis;
      for (std::size_t i = 0; i < b.size(); ++i) basis.push_back(f.as_vector(b[i], f.at("basis") + "[" + std::to_string(i) + "]"));
      f.finish();
      return measure::projective(basis, values, labels);
    }
    const json& k = f.get("kraus");
    if (!k.is_array()) f.fail(f.at("kraus"), "expected an array of matrices");
    std::vector<CMatrix> ops;
    for (std::size_t i = 0; i < k.size(); ++i) ops.push_back(f.as_matrix(k[i], f.at("kraus") + "[" + std::to_string(i) + "]"));
    f.finish();
    return measure::KrausSet(labels, values, ops);
  } catch (const ConfigError& e) {
    if (std::string(e.what()).rfind(m.source(), 0) == 0) throw;
    m.fail(field, e.what());
  } catch (const CpfError& e) {
    m.fail(field, e.what());
  }
}

BipartiteSpec parse_bipartite(Fields& m) {
  BipartiteSpec s;
  s.dims = {m.count("d_s", 1), m.count("d_e", 1)};
  s.hamiltonian = m.as_matrix(m.get("hamiltonian"), m.at("hamiltonian"));
  if (s.hamiltonian.rows() != s.dims.total() || !s.hamiltonian.is_square()) {
    m.fail(m.at("hamiltonian"), "expected a " + std::to_string(s.dims.total()) + "x" + std::to_string(s.dims.total()) +
                                    " matrix");
  }
  if (m.has("rho0") == m.has("psi0")) m.fail(m.at("rho0"), "give exactly one of rho0 or psi0");
  if (m.has("psi0")) {
    const auto psi = m.as_vector(m.get("psi0"), m.at("psi0"));
    double norm = 0.0;
    for (const auto& c : psi) norm += std::norm(c);
    if (psi.size() != s.dims.total() || norm == 0.0) m.fail(m.at("psi0"), "wrong length or zero vector");
    s.rho0 = qmat::DensityMatrix::pure(psi).matrix();
  } else {
    s.rho0 = m.as_matrix(m.get("rho0"), m.at("rho0"));
  }
  s.first = parse_measurement(m, "first");
  s.middle = parse_measurement(m, "middle");
  s.last = parse_measurement(m, "last");
  for (const auto* set : {&*s.first, &*s.middle, &*s.last}) {
    if (set->dim() != s.dims.system) m.fail(m.at("first"), "measurement dimension must equal d_s");
  }
  if (const json* p = m.maybe("preparation")) {
    if (!p->is_object()) m.fail(m.at("preparation"), "expected an object mapping labels to vectors");
    std::map<std::string, CVector> targets;
    for (auto it = p->begin(); it != p->end(); ++it) {
      targets[it.key()] = m.as_vector(it.value(), m.at("preparation") + "." + it.key());
    }
    try {
      s.prep = measure::Preparation(std::move(targets));
    } catch (const CpfError& e) {
      m.fail(m.at("preparation"), e.what());
    }
  }
  return s;
}

ChainSpec parse_chain(Fields& m) {
  ChainSpec s;
  s.initial = m.as_reals(m.get("initial"), m.at("initial"));
  s.kernel = m.as_kernel(m.get("kernel"), m.at("kernel"));
  s.observables = m.as_reals(m.get("observables"), m.at("observables"));
  if (const json* e = m.maybe("emission")) s.emission = m.as_kernel(*e, m.at("emission"));
  const std::size_t d = s.initial.size();
  const std::size_t obs = s.emission ? s.emission->front().size() : d;
  if (s.observables.size() != obs) m.fail(m.at("observables"), "expected one value per observed state");
  try {
    cpf::ClassicalChain(s.initial, {s.kernel, s.kernel});
    if (s.emission) cpf::HiddenMarkovChain(cpf::ClassicalChain(s.initial, {s.kernel, s.kernel}), *s.emission);
  } catch (const CpfError& e) {
    m.fail(m.at("kernel"), e.what());
  }
  return s;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": syntax error: " + e.what());
  }

  ExperimentConfig cfg;
  Fields root(doc, "", source);

  Fields model(root.get("model"), "model", source);
  const std::string type = model.string("type");
  if (type == "spinbath") {
    cfg.kind = ModelKind::spinbath;
    cfg.spinbath = parse_spinbath(model);
  } else if (type == "stochastic") {
    cfg.kind = ModelKind::stochastic;
    cfg.stochastic = parse_stochastic(model);
  } else if (type == "generic-bipartite") {
    cfg.kind = ModelKind::generic_bipartite;
    cfg.bipartite = parse_bipartite(model);
  } else if (type == "classical-chain") {
    cfg.kind = ModelKind::classical_chain;
    cfg.chain = parse_chain(model);
  } else {
    model.fail("model.type", "expected spinbath, stochastic, generic-bipartite or classical-chain");
  }
  model.finish();

  Fields grid(root.get("grid"), "grid", source);
  auto& g = cfg.grid;
  g.t_min = grid.number("t_min");
  g.t_max = grid.number("t_max");
  g.n_t = grid.count("n_t", 1);
  g.tau_min = grid.number("tau_min");
  g.tau_max = grid.number("tau_max");
  g.n_tau = grid.count("n_tau", 1);
  grid.finish();
  for (double v : {g.t_min, g.t_max, g.tau_min, g.tau_max}) {
    if (!std::isfinite(v) || v < 0.0) grid.fail("grid", "times must be finite and >= 0");
  }
  if (g.t_max < g.t_min) grid.fail("grid.t_max", "must be >= t_min");
  if (g.tau_max < g.tau_min) grid.fail("grid.tau_max", "must be >= tau_min");
  if (cfg.kind == ModelKind::classical_chain) {
    for (double v : io::linspace(g.t_min, g.t_max, g.n_t))
      if (v != std::floor(v)) grid.fail("grid.t_max", "classical-chain grids must contain integer step counts");
    for (double v : io::linspace(g.tau_min, g.tau_max, g.n_tau))
      if (v != std::floor(v)) grid.fail("grid.tau_max", "classical-chain grids must contain integer step counts");
  }

  cfg.y = root.string_or("y", cfg.kind == ModelKind::classical_chain ? "0" : "+");
  if (cfg.kind == ModelKind::classical_chain) {
    const std::size_t obs = cfg.chain->emission ? cfg.chain->emission->front().size() : cfg.chain->initial.size();
    std::size_t idx = 0;
    try {
      std::size_t pos = 0;
      idx = std::stoul(cfg.y, &pos);
      if (pos != cfg.y.size()) throw std::invalid_argument("y");
    } catch (const std::exception&) {
      root.fail("y", "expected a state index for classical-chain models");
    }
    if (idx >= obs) root.fail("y", "state index out of range");
  } else if (cfg.kind == ModelKind::generic_bipartite) {
    const auto& labels = cfg.bipartite->middle->labels();
    if (std::find(labels.begin(), labels.end(), cfg.y) == labels.end()) root.fail("y", "not a label of model.middle");
  } else if (cfg.y != "+" && cfg.y != "-") {
    root.fail("y", "expected \"+\" or \"-\"");
  }

  if (const json* mc = root.maybe("mc")) {
    if (cfg.kind != ModelKind::stochastic) root.fail("mc", "only valid for stochastic models");
    Fields f(*mc, "mc", source);
    McSpec spec;
    spec.n_traj = f.count("n_traj", 2);
    const json& seed = f.get("seed");
    if (!seed.is_number_unsigned()) f.fail("mc.seed", "expected a non-negative integer");
    spec.seed = seed.get<std::uint64_t>();
    f.finish();
    cfg.mc = spec;
  } else if (cfg.kind == ModelKind::stochastic) {
    root.fail("mc", "required for stochastic models");
  }

  if (const json* out = root.maybe("output")) {
    Fields f(*out, "output", source);
    cfg.output.csv = f.string_or("csv", "");
    cfg.output.json = f.string_or("json", "");
    cfg.output.svg = f.string_or("svg", "");
    f.finish();
  }
  cfg.allow_degenerate = root.boolean_or("allow_degenerate", false);
  root.finish();

  // Output paths do not change results, so they stay out of the hash.
  json hashed = doc;
  hashed.erase("output");
  cfg.canonical = hashed.dump();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return parse_config(text, path.string());
}

}  // namespace cpfsim::config
