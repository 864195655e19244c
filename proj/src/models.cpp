#include "cpfsim/models.hpp"

#include <cmath>
#include <string>

#include "cpfsim/errors.hpp"

namespace cpfsim::models {

using qmat::CMatrix;

SpinBathParams SpinBathParams::uniform(std::size_t n, double g) {
  if (n == 0) throw ConfigError("spin bath needs at least one spin");
  const double amp = 1.0 / std::sqrt(2.0);
  SpinBathParams p;
  p.g.assign(n, g / std::sqrt(static_cast<double>(n)));
  p.alpha.assign(n, amp);
  p.beta.assign(n, amp);
  return p;
}

void SpinBathParams::validate() const {
  if (alpha.size() != g.size() || beta.size() != g.size()) {
    throw ConfigError("spin bath: g, alpha and beta must have the same length");
  }
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!std::isfinite(g[k])) throw ConfigError("spin bath: non-finite coupling g[" + std::to_string(k) + "]");
    const double norm = std::norm(alpha[k]) + std::norm(beta[k]);
    if (std::abs(norm - 1.0) > 1e-12) {
      throw ConfigError("spin bath: |alpha|^2 + |beta|^2 = " + std::to_string(norm) + " for spin " +
                        std::to_string(k));
    }
  }
  const double norm = std::norm(a) + std::norm(b);
  if (std::abs(norm - 1.0) > 1e-12) throw ConfigError("spin bath: |a|^2 + |b|^2 = " + std::to_string(norm));
}

bool SpinBathParams::symmetric() const {
  for (std::size_t k = 0; k < g.size(); ++k)
    if (std::abs(std::norm(alpha[k]) - std::norm(beta[k])) > 1e-12) return false;
  return true;
}

cpf::BipartiteModel build_bipartite(const SpinBathParams& params) {
  params.validate();
  const std::size_t n = params.size();
  if (n > kMaxDenseBath) {
    throw CapacityError("spin bath with N = " + std::to_string(n) + " exceeds the dense limit N <= " +
                        std::to_string(kMaxDenseBath));
  }
  const std::size_t de = std::size_t{1} << n;
  const std::size_t dim = 2 * de;

  std::vector<cplx> diag(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const double s = (i & de) ? -1.0 : 1.0;
    double bath = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t bit = std::size_t{1} << (n - 1 - k);
      bath += (i & bit) ? -params.g[k] : params.g[k];
    }
    diag[i] = s * bath;
  }

  qmat::CVector psi{params.a, params.b};
  for (std::size_t k = 0; k < n; ++k) {
    qmat::CVector next;
    next.reserve(psi.size() * 2);
    for (const cplx& v : psi) {
      next.push_back(v * params.alpha[k]);
      next.push_back(v * params.beta[k]);
    }
    psi = std::move(next);
  }
  return cpf::BipartiteModel(qmat::Dims{2, de}, qmat::HermitianMatrix(CMatrix::diagonal(diag)),
                             qmat::DensityMatrix::pure(psi));
}

cplx coherence_product(const SpinBathParams& params, double t) {
  cplx c{1.0, 0.0};
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double w = 2.0 * params.g[k] * t;
    c *= std::norm(params.alpha[k]) * std::polar(1.0, w) + std::norm(params.beta[k]) * std::polar(1.0, -w);
  }
  return c;
}

double ou_coherence_analytic(double g, double tau_c, double t) {
  if (std::isinf(tau_c)) return std::exp(-2.0 * g * g * t * t);
  return std::exp(-4.0 * g * g * tau_c * tau_c * (t / tau_c - 1.0 + std::exp(-t / tau_c)));
}

DephasingRates dephasing_rates(const CoherenceFunction& c, double t, double h) {
  if (!(h > 0.0)) throw ConfigError("dephasing_rates: step must be positive");
  const cplx ct = c(t);
  if (std::abs(ct) <= 1e-12) {
    throw SingularCoherence("dephasing_rates: |c_t| = " + std::to_string(std::abs(ct)) + " at t = " +
                            std::to_string(t));
  }
  cplx dc;
  if (t >= h) {
    dc = (c(t + h) - c(t - h)) / (2.0 * h);
  } else {
    dc = (-3.0 * ct + 4.0 * c(t + h) - c(t + 2.0 * h)) / (2.0 * h);
  }
  const cplx rate = -dc / ct;
  return {rate.imag(), rate.real()};
}

double f_single(const SpinBathParams& params, double t) { return coherence_product(params, t).real(); }

double f_pair(const SpinBathParams& params, double t, double tau) {
  return 0.5 * (f_single(params, t + tau) + f_single(params, t - tau));
}

namespace {

void require_plus_state(const SpinBathParams& params) {
  if (std::abs(params.a - cplx{1.0, 0.0}) > 1e-12 || std::abs(params.b) > 1e-12) {
    throw ConfigError("analytic spin-bath table requires a = 1, b = 0; use the dense path otherwise");
  }
}

}  // namespace

cpf::CpfProbabilityTable cpf_prob_spin_analytic(const SpinBathParams& params, double t, double tau,
                                                const std::string& y) {
  params.validate();
  require_plus_state(params);
  if (y != "+" && y != "-") throw ConfigError("conditioning outcome must be \"+\" or \"-\", got \"" + y + "\"");
  const double yv = y == "+" ? 1.0 : -1.0;
  const double ft = f_single(params, t);
  const double ftau = f_single(params, tau);
  const double fpair = f_pair(params, t, tau);
  const double vals[2] = {1.0, -1.0};
  std::vector<double> p(4);
  for (std::size_t z = 0; z < 2; ++z)
    for (std::size_t x = 0; x < 2; ++x) {
      const double zv = vals[z];
      const double xv = vals[x];
      p[z * 2 + x] = 0.25 * (1.0 + xv * yv * ft + zv * yv * ftau + zv * xv * fpair);
    }
  return cpf::CpfProbabilityTable({y}, {"+", "-"}, {"+", "-"}, std::move(p));
}

double cpf_spin_exact(const SpinBathParams& params, double t, double tau) {
  params.validate();
  require_plus_state(params);
  return f_pair(params, t, tau) - f_single(params, t) * f_single(params, tau);
}

double cpf_gaussian_approx(double g, double t, double tau) {
  const double g2 = g * g;
  return 0.5 * (std::exp(-2.0 * g2 * (t + tau) * (t + tau)) + std::exp(-2.0 * g2 * (t - tau) * (t - tau))) -
         std::exp(-2.0 * g2 * (t * t + tau * tau));
}

cpf::MeasurementSchedule x_basis_schedule(double t, double tau, const std::string& y) {
  return cpf::MeasurementSchedule::three_point(measure::pauli_x_basis(), measure::pauli_x_basis(), y,
                                               measure::pauli_x_basis(), t, tau);
}

StochasticDephasing stochastic_dephasing_model(const stochastic::NoiseModel& noise) {
  noise.validate();
  return {stochastic::StochasticSystem(qmat::HermitianMatrix(qmat::pauli_z()),
                                       qmat::DensityMatrix::pure(qmat::ket_plus())),
          noise};
}

}  // namespace cpfsim::models
