#include "cpfsim/cpf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cpfsim/errors.hpp"

namespace cpfsim::cpf {

using qmat::cplx;
using qmat::matmul;

namespace {

CMatrix sandwich(const CMatrix& op, const CMatrix& rho) { return matmul(matmul(op, rho), op.adjoint()); }

CMatrix conjugate_or_identity(const CMatrix& u, const CMatrix& rho) { return u.empty() ? rho : sandwich(u, rho); }

}  // namespace

// ---------------------------------------------------------------------------
// MeasurementSchedule

MeasurementSchedule::MeasurementSchedule(KrausSet first, std::vector<MiddleMeasurement> middle, KrausSet last,
                                         std::vector<double> times)
    : first_(std::move(first)), middle_(std::move(middle)), last_(std::move(last)), times_(std::move(times)) {
  if (middle_.empty()) throw ConfigError("MeasurementSchedule: at least one conditioning measurement is required");
  if (times_.size() != middle_.size() + 2) {
    throw ConfigError("MeasurementSchedule: expected " + std::to_string(middle_.size() + 2) + " times, got " +
                      std::to_string(times_.size()));
  }
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (!std::isfinite(times_[i])) throw ConfigError("MeasurementSchedule: non-finite time");
    if (i > 0 && times_[i] < times_[i - 1]) throw ConfigError("MeasurementSchedule: times must be non-decreasing");
  }
  const std::size_t d = first_.dim();
  if (last_.dim() != d) throw ShapeError("MeasurementSchedule: first and last measurements act on different spaces");
  for (const auto& m : middle_) {
    if (m.set.dim() != d) throw ShapeError("MeasurementSchedule: middle measurement dimension mismatch");
    m.set.index_of(m.outcome);
    if (m.prep && !m.prep->contains(m.outcome)) {
      throw ConfigError("MeasurementSchedule: preparation has no target for outcome '" + m.outcome + "'");
    }
  }
  const auto& yn = middle_.back();
  if (!yn.prep && !yn.set.is_rank_one_projective()) {
    throw ConfigError(
        "MeasurementSchedule: the last conditioning measurement must be rank-one projective or carry a "
        "preparation");
  }
}

MeasurementSchedule MeasurementSchedule::three_point(KrausSet first, KrausSet middle, std::string y, KrausSet last,
                                                     double t, double tau, std::optional<Preparation> prep) {
  std::vector<MiddleMeasurement> mid;
  mid.push_back(MiddleMeasurement{std::move(middle), std::move(y), std::move(prep)});
  return MeasurementSchedule(std::move(first), std::move(mid), std::move(last), {0.0, t, t + tau});
}

std::vector<std::string> MeasurementSchedule::y_labels() const {
  std::vector<std::string> out;
  out.reserve(middle_.size());
  for (const auto& m : middle_) out.push_back(m.outcome);
  return out;
}

CMatrix MeasurementSchedule::conditioned_state() const {
  const auto& yn = middle_.back();
  if (yn.prep) return CMatrix::projector(yn.prep->target(yn.outcome));
  return yn.set.op(yn.set.index_of(yn.outcome));
}

MeasurementSchedule MeasurementSchedule::with_times(std::vector<double> times) const {
  return MeasurementSchedule(first_, middle_, last_, std::move(times));
}

MeasurementSchedule MeasurementSchedule::with_outcomes(const std::vector<std::string>& y) const {
  if (y.size() != middle_.size()) throw ConfigError("with_outcomes: wrong number of conditioning labels");
  auto mid = middle_;
  for (std::size_t k = 0; k < y.size(); ++k) mid[k].outcome = y[k];
  return MeasurementSchedule(first_, std::move(mid), last_, times_);
}

// ---------------------------------------------------------------------------
// CpfProbabilityTable

CpfProbabilityTable::CpfProbabilityTable(std::vector<std::string> y, std::vector<std::string> z_labels,
                                         std::vector<std::string> x_labels, std::vector<double> probs)
    : y_(std::move(y)), z_labels_(std::move(z_labels)), x_labels_(std::move(x_labels)), p_(std::move(probs)) {
  if (p_.size() != z_labels_.size() * x_labels_.size()) throw ShapeError("CpfProbabilityTable: entry count mismatch");
  for (double v : p_) {
    if (!std::isfinite(v)) throw NumericsError("CpfProbabilityTable: non-finite entry");
    if (v < -1e-12) throw NumericsError("CpfProbabilityTable: negative entry " + std::to_string(v));
  }
  const double tot = total();
  if (std::abs(tot - 1.0) > kTotalTol) {
    throw NumericsError("CpfProbabilityTable: entries sum to " + std::to_string(tot));
  }
}

double CpfProbabilityTable::at(const std::string& z, const std::string& x) const {
  const auto zi = std::find(z_labels_.begin(), z_labels_.end(), z);
  const auto xi = std::find(x_labels_.begin(), x_labels_.end(), x);
  if (zi == z_labels_.end() || xi == x_labels_.end()) throw ConfigError("CpfProbabilityTable: unknown label");
  return (*this)(static_cast<std::size_t>(zi - z_labels_.begin()), static_cast<std::size_t>(xi - x_labels_.begin()));
}

std::vector<double> CpfProbabilityTable::pz() const {
  std::vector<double> out(nz(), 0.0);
  for (std::size_t z = 0; z < nz(); ++z)
    for (std::size_t x = 0; x < nx(); ++x) out[z] += (*this)(z, x);
  return out;
}

std::vector<double> CpfProbabilityTable::px() const {
  std::vector<double> out(nx(), 0.0);
  for (std::size_t z = 0; z < nz(); ++z)
    for (std::size_t x = 0; x < nx(); ++x) out[x] += (*this)(z, x);
  return out;
}

double CpfProbabilityTable::total() const { return std::accumulate(p_.begin(), p_.end(), 0.0); }

double cpf_correlation(const CpfProbabilityTable& table, std::span<const double> o_z, std::span<const double> o_x) {
  if (o_z.size() != table.nz() || o_x.size() != table.nx()) {
    throw ShapeError("cpf_correlation: observable count does not match the outcome alphabet");
  }
  const auto pz = table.pz();
  const auto px = table.px();
  double c = 0.0;
  for (std::size_t z = 0; z < table.nz(); ++z)
    for (std::size_t x = 0; x < table.nx(); ++x) c += (table(z, x) - pz[z] * px[x]) * o_z[z] * o_x[x];
  return c;
}

double cpf_correlation(const CpfProbabilityTable& table, const KrausSet& last, const KrausSet& first) {
  return cpf_correlation(table, last.values(), first.values());
}

// ---------------------------------------------------------------------------
// Channel

Channel::Channel(std::vector<CMatrix> kraus) : kraus_(std::move(kraus)) {
  if (kraus_.empty()) throw ConfigError("Channel: no Kraus operators");
  const std::size_t d = kraus_.front().rows();
  CMatrix sum(d, d);
  for (const auto& k : kraus_) {
    if (k.rows() != d || k.cols() != d) throw ShapeError("Channel: Kraus operators must be square and equal-sized");
    sum += matmul(k.adjoint(), k);
  }
  const double residual = qmat::max_abs_diff(sum, CMatrix::identity(d));
  if (residual > measure::kCompletenessTol) throw CompletenessError("Channel: not trace preserving", residual);
}

Channel Channel::identity(std::size_t d) { return Channel({CMatrix::identity(d)}); }

Channel Channel::unitary(CMatrix u) { return Channel({std::move(u)}); }

Channel Channel::depolarizing(std::size_t d) {
  // Kraus operators |i><j| / sqrt(d) send every state to I/d.
  std::vector<CMatrix> ks;
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      CMatrix k(d, d);
      k(i, j) = s;
      ks.push_back(std::move(k));
    }
  return Channel(std::move(ks));
}

CMatrix Channel::apply(const CMatrix& rho) const {
  CMatrix out(rho.rows(), rho.cols());
  for (const auto& k : kraus_) out += sandwich(k, rho);
  return out;
}

// ---------------------------------------------------------------------------
// BipartiteModel

BipartiteModel::BipartiteModel(Dims dims, HermitianMatrix hamiltonian, DensityMatrix rho0)
    : dims_(dims), h_(std::move(hamiltonian)), rho0_(std::move(rho0)) {
  if (dims_.total() > qmat::kMaxHilbertDim) {
    throw CapacityError("BipartiteModel: dimension " + std::to_string(dims_.total()) + " exceeds cap");
  }
  if (h_.dim() != dims_.total()) throw ShapeError("BipartiteModel: Hamiltonian dimension != d_s * d_e");
  if (rho0_.dim() != dims_.total()) throw ShapeError("BipartiteModel: initial state dimension != d_s * d_e");
  prop_ = std::make_shared<const qmat::UnitaryPropagator>(h_);
}

BipartiteModel BipartiteModel::non_interacting(const HermitianMatrix& h_s, const HermitianMatrix& h_e,
                                               const DensityMatrix& rho_s, const DensityMatrix& rho_e) {
  const Dims dims{h_s.dim(), h_e.dim()};
  CMatrix h = qmat::kron(h_s.matrix(), CMatrix::identity(dims.environment)) +
              qmat::kron(CMatrix::identity(dims.system), h_e.matrix());
  return BipartiteModel(dims, HermitianMatrix(std::move(h)),
                        DensityMatrix(qmat::kron(rho_s.matrix(), rho_e.matrix())));
}

BipartiteModel BipartiteModel::system_only(const HermitianMatrix& h_s, const DensityMatrix& rho_s) {
  return BipartiteModel(Dims{h_s.dim(), 1}, h_s, rho_s);
}

CMatrix BipartiteModel::lift(const CMatrix& system_op) const {
  if (dims_.environment == 1) return system_op;
  return qmat::kron(system_op, CMatrix::identity(dims_.environment));
}

// ---------------------------------------------------------------------------
// Chains

double ChainWeights::total_weight() const { return std::accumulate(weight.begin(), weight.end(), 0.0); }

ChainWeights chain_weights(const CMatrix& rho0_joint, Dims dims, const MeasurementSchedule& sched,
                           std::span<const CMatrix> windows) {
  const std::size_t n = sched.order();
  if (windows.size() != n + 1) throw ShapeError("chain_weights: expected n + 1 window propagators");
  if (rho0_joint.rows() != dims.total() || sched.dim() != dims.system) {
    throw ShapeError("chain_weights: state, dims and measurements disagree");
  }
  const std::size_t de = dims.environment;
  const CMatrix id_e = CMatrix::identity(de);
  auto lift = [&](const CMatrix& op) { return de == 1 ? op : qmat::kron(op, id_e); };

  std::vector<CMatrix> y_ops;
  y_ops.reserve(n);
  for (const auto& m : sched.middle()) y_ops.push_back(lift(m.set.op(m.set.index_of(m.outcome))));

  const auto& first = sched.first();
  const auto& last = sched.last();
  std::vector<CMatrix> z_effects;
  z_effects.reserve(last.size());
  for (std::size_t z = 0; z < last.size(); ++z) z_effects.push_back(lift(last.effect(z)));
  const CMatrix rho_y = sched.conditioned_state();

  ChainWeights out;
  out.weight.assign(first.size(), 0.0);
  out.joint.assign(last.size() * first.size(), 0.0);
  for (std::size_t x = 0; x < first.size(); ++x) {
    CMatrix sigma = sandwich(lift(first.op(x)), rho0_joint);
    sigma = conjugate_or_identity(windows[0], sigma);
    for (std::size_t k = 0; k < n; ++k) {
      sigma = sandwich(y_ops[k], sigma);
      if (k + 1 < n) sigma = conjugate_or_identity(windows[k + 1], sigma);
    }
    const double w = sigma.trace().real();
    out.weight[x] = w;
    if (w <= 0.0) continue;
    // Causal break: system reset to ρ_{y_n}, environment keeps Tr_s of the
    // unnormalized branch, so the product already carries the weight P(y,x).
    const CMatrix env = de == 1 ? CMatrix{{w}} : qmat::partial_trace(sigma, dims, qmat::Keep::environment);
    const CMatrix after = conjugate_or_identity(windows[n], qmat::kron(rho_y, env));
    for (std::size_t z = 0; z < last.size(); ++z) {
      out.joint[z * first.size() + x] = qmat::trace_product(z_effects[z], after).real();
    }
  }
  return out;
}

CpfProbabilityTable table_from_weights(const MeasurementSchedule& sched, std::span<const double> joint,
                                       double total_weight) {
  if (!(total_weight > measure::kZeroProbability)) {
    throw DegeneratePostSelection("conditioning outcome has probability " + std::to_string(total_weight));
  }
  std::vector<double> p(joint.begin(), joint.end());
  for (auto& v : p) v /= total_weight;
  return CpfProbabilityTable(sched.y_labels(), sched.last().labels(), sched.first().labels(), std::move(p));
}

CpfProbabilityTable cpf_table_isolated(const DensityMatrix& rho0, const MeasurementSchedule& sched) {
  const auto id = Channel::identity(rho0.dim());
  return cpf_table_markov(rho0, sched, id, id);
}

CpfProbabilityTable cpf_table_markov(const DensityMatrix& rho0, const MeasurementSchedule& sched,
                                     const Channel& before_y, const Channel& after_y) {
  if (sched.order() != 1) throw ConfigError("cpf_table_markov: expects a single conditioning measurement");
  if (rho0.dim() != sched.dim() || before_y.dim() != sched.dim() || after_y.dim() != sched.dim()) {
    throw ShapeError("cpf_table_markov: dimension mismatch");
  }
  const auto& first = sched.first();
  const auto& last = sched.last();
  const auto& y = sched.middle().front();
  const CMatrix e_y = y.set.effect(y.set.index_of(y.outcome));

  std::vector<double> w(first.size());
  for (std::size_t x = 0; x < first.size(); ++x) {
    w[x] = qmat::trace_product(e_y, before_y.apply(sandwich(first.op(x), rho0.matrix()))).real();
  }
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(total > measure::kZeroProbability)) {
    throw DegeneratePostSelection("cpf_table_markov: P(y) = " + std::to_string(total));
  }
  const CMatrix evolved_y = after_y.apply(sched.conditioned_state());
  std::vector<double> p(last.size() * first.size());
  for (std::size_t z = 0; z < last.size(); ++z) {
    const double pz = qmat::trace_product(last.effect(z), evolved_y).real();
    for (std::size_t x = 0; x < first.size(); ++x) p[z * first.size() + x] = pz * (w[x] / total);
  }
  return CpfProbabilityTable(sched.y_labels(), last.labels(), first.labels(), std::move(p));
}

namespace {

std::vector<CMatrix> model_windows(const BipartiteModel& model, const MeasurementSchedule& sched) {
  const auto& times = sched.times();
  std::vector<CMatrix> w;
  w.reserve(times.size() - 1);
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    const double dt = times[i + 1] - times[i];
    w.push_back(dt == 0.0 ? CMatrix{} : model.propagator().at(dt));
  }
  return w;
}

void check_model_schedule(const BipartiteModel& model, const MeasurementSchedule& sched) {
  if (sched.dim() != model.dims().system) throw ShapeError("measurement dimension != model system dimension");
}

}  // namespace

DensityMatrix env_state_n(const BipartiteModel& model, const MeasurementSchedule& sched, const std::string& x_label) {
  check_model_schedule(model, sched);
  const auto windows = model_windows(model, sched);
  const std::size_t x = sched.first().index_of(x_label);
  CMatrix sigma = sandwich(model.lift(sched.first().op(x)), model.rho0().matrix());
  sigma = conjugate_or_identity(windows[0], sigma);
  const std::size_t n = sched.order();
  for (std::size_t k = 0; k < n; ++k) {
    const auto& m = sched.middle()[k];
    sigma = sandwich(model.lift(m.set.op(m.set.index_of(m.outcome))), sigma);
    if (k + 1 < n) sigma = conjugate_or_identity(windows[k + 1], sigma);
  }
  const double w = sigma.trace().real();
  if (!(w > measure::kZeroProbability)) {
    throw DegeneratePostSelection("env_state: P(y, x) = " + std::to_string(w));
  }
  CMatrix env = qmat::partial_trace(sigma, model.dims(), qmat::Keep::environment);
  env *= 1.0 / w;
  return DensityMatrix(std::move(env));
}

DensityMatrix env_state(const BipartiteModel& model, const MeasurementSchedule& sched, const std::string& x_label,
                        const std::string& y_label) {
  if (sched.order() != 1) throw ConfigError("env_state: expects a single conditioning measurement");
  return env_state_n(model, sched.with_outcomes({y_label}), x_label);
}

CpfProbabilityTable cpf_table_n(const BipartiteModel& model, const MeasurementSchedule& sched) {
  check_model_schedule(model, sched);
  const auto windows = model_windows(model, sched);
  const auto cw = chain_weights(model.rho0().matrix(), model.dims(), sched, windows);
  return table_from_weights(sched, cw.joint, cw.total_weight());
}

CpfProbabilityTable cpf_table_bipartite(const BipartiteModel& model, const MeasurementSchedule& sched) {
  if (sched.order() != 1) throw ConfigError("cpf_table_bipartite: expects a single conditioning measurement");
  return cpf_table_n(model, sched);
}

CMatrix effect_operator_heisenberg(std::span<const CMatrix> omegas, std::span<const CMatrix> windows) {
  if (omegas.empty()) throw ShapeError("effect_operator_heisenberg: no measurement operators");
  if (windows.size() + 1 != omegas.size()) throw ShapeError("effect_operator_heisenberg: expected n - 1 windows");
  const std::size_t d = omegas.front().rows();
  // a = Ω_n(t_n,t_1) ⋯ Ω_2(t_2,t_1) Ω_1, built left-multiplying in time order.
  CMatrix a = omegas.front();
  CMatrix cumulative = CMatrix::identity(d);
  for (std::size_t k = 1; k < omegas.size(); ++k) {
    if (!windows[k - 1].empty()) cumulative = matmul(windows[k - 1], cumulative);
    const CMatrix heis = matmul(matmul(cumulative.adjoint(), omegas[k]), cumulative);
    a = matmul(heis, a);
  }
  return matmul(a.adjoint(), a);
}

measure::EffectOperator effect_operator_n(const BipartiteModel& model, const MeasurementSchedule& sched) {
  check_model_schedule(model, sched);
  const auto windows = model_windows(model, sched);
  std::vector<CMatrix> omegas;
  for (const auto& m : sched.middle()) omegas.push_back(model.lift(m.set.op(m.set.index_of(m.outcome))));
  std::vector<CMatrix> between;
  const std::size_t d = model.dims().total();
  for (std::size_t k = 1; k + 1 < windows.size(); ++k) {
    between.push_back(windows[k].empty() ? CMatrix::identity(d) : windows[k]);
  }
  return measure::EffectOperator(effect_operator_heisenberg(omegas, between));
}

}  // namespace cpfsim::cpf
