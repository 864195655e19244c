#include "cpfsim/classical.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "cpfsim/errors.hpp"

namespace cpfsim::cpf {

namespace {

void check_stochastic_rows(const Kernel& k, std::size_t rows, std::size_t cols, const char* what) {
  if (k.size() != rows) throw ShapeError(std::string(what) + ": wrong row count");
  for (const auto& row : k) {
    if (row.size() != cols) throw ShapeError(std::string(what) + ": wrong column count");
    double s = 0.0;
    for (double v : row) {
      if (!(v >= 0.0)) throw ConfigError(std::string(what) + ": negative or non-finite entry");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-12) throw ConfigError(std::string(what) + ": row sums to " + std::to_string(s));
  }
}

std::size_t ipow(std::size_t base, std::size_t exp) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < exp; ++i) r *= base;
  return r;
}

// Decodes a flat index into a sequence, slowest digit first.
void decode(std::size_t idx, std::size_t alphabet, std::span<std::size_t> seq) {
  for (std::size_t i = seq.size(); i-- > 0;) {
    seq[i] = idx % alphabet;
    idx /= alphabet;
  }
}

}  // namespace

SequenceDistribution::SequenceDistribution(std::size_t alphabet, std::size_t length, std::vector<double> probs)
    : alphabet_(alphabet), length_(length), p_(std::move(probs)) {
  if (length_ < 3) throw ShapeError("SequenceDistribution: need at least x, y, z");
  if (p_.size() != ipow(alphabet_, length_)) throw ShapeError("SequenceDistribution: entry count mismatch");
  const double s = std::accumulate(p_.begin(), p_.end(), 0.0);
  if (std::abs(s - 1.0) > 1e-10) throw NumericsError("SequenceDistribution: sums to " + std::to_string(s));
}

double SequenceDistribution::operator()(std::span<const std::size_t> seq) const {
  std::size_t idx = 0;
  for (std::size_t s : seq) idx = idx * alphabet_ + s;
  return p_.at(idx);
}

ClassicalChain::ClassicalChain(std::vector<double> initial, std::vector<Kernel> kernels)
    : initial_(std::move(initial)), kernels_(std::move(kernels)) {
  const std::size_t d = initial_.size();
  if (d == 0) throw ShapeError("ClassicalChain: empty alphabet");
  if (kernels_.size() < 2) throw ShapeError("ClassicalChain: need at least two transitions (x→y→z)");
  check_stochastic_rows(Kernel{initial_}, 1, d, "ClassicalChain initial distribution");
  for (const auto& k : kernels_) check_stochastic_rows(k, d, d, "ClassicalChain kernel");
}

Kernel kernel_power(const Kernel& k, unsigned power) {
  const std::size_t d = k.size();
  Kernel out(d, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < d; ++i) out[i][i] = 1.0;
  for (unsigned p = 0; p < power; ++p) {
    Kernel next(d, std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t m = 0; m < d; ++m)
        for (std::size_t j = 0; j < d; ++j) next[i][j] += out[i][m] * k[m][j];
    out = std::move(next);
  }
  return out;
}

ClassicalChain ClassicalChain::homogeneous(std::vector<double> initial, const Kernel& kernel,
                                           std::span<const unsigned> steps) {
  std::vector<Kernel> ks;
  for (unsigned s : steps) ks.push_back(kernel_power(kernel, s));
  return ClassicalChain(std::move(initial), std::move(ks));
}

SequenceDistribution ClassicalChain::joint() const {
  const std::size_t d = states();
  const std::size_t len = observations();
  std::vector<double> p(ipow(d, len));
  std::vector<std::size_t> seq(len);
  for (std::size_t idx = 0; idx < p.size(); ++idx) {
    decode(idx, d, seq);
    double v = initial_[seq[0]];
    for (std::size_t k = 0; k + 1 < len && v != 0.0; ++k) v *= kernels_[k][seq[k]][seq[k + 1]];
    p[idx] = v;
  }
  return SequenceDistribution(d, len, std::move(p));
}

HiddenMarkovChain::HiddenMarkovChain(ClassicalChain hidden, Kernel emission)
    : hidden_(std::move(hidden)), emission_(std::move(emission)) {
  if (emission_.empty()) throw ShapeError("HiddenMarkovChain: empty emission matrix");
  check_stochastic_rows(emission_, hidden_.states(), emission_.front().size(), "HiddenMarkovChain emission");
}

SequenceDistribution HiddenMarkovChain::joint() const {
  const SequenceDistribution h = hidden_.joint();
  const std::size_t dh = hidden_.states();
  const std::size_t dobs = observed_states();
  const std::size_t len = h.length();
  std::vector<double> p(ipow(dobs, len), 0.0);
  std::vector<std::size_t> hs(len);
  std::vector<std::size_t> os(len);
  for (std::size_t hidx = 0; hidx < h.probs().size(); ++hidx) {
    const double ph = h.probs()[hidx];
    if (ph == 0.0) continue;
    decode(hidx, dh, hs);
    for (std::size_t oidx = 0; oidx < p.size(); ++oidx) {
      decode(oidx, dobs, os);
      double v = ph;
      for (std::size_t k = 0; k < len && v != 0.0; ++k) v *= emission_[hs[k]][os[k]];
      p[oidx] += v;
    }
  }
  return SequenceDistribution(dobs, len, std::move(p));
}

double cpf_from_joint(const SequenceDistribution& joint, std::span<const double> observables,
                      std::span<const std::size_t> y) {
  const std::size_t d = joint.alphabet();
  const std::size_t n = joint.length() - 2;
  if (y.size() != n) throw ShapeError("cpf_from_joint: conditioning vector length != order");
  if (observables.size() != d) throw ShapeError("cpf_from_joint: one observable value per state required");
  for (std::size_t v : y)
    if (v >= d) throw ConfigError("cpf_from_joint: conditioning state out of range");

  std::vector<double> pzx(d * d, 0.0);
  std::vector<std::size_t> seq(joint.length());
  for (std::size_t k = 0; k < n; ++k) seq[k + 1] = y[k];
  double py = 0.0;
  for (std::size_t x = 0; x < d; ++x)
    for (std::size_t z = 0; z < d; ++z) {
      seq.front() = x;
      seq.back() = z;
      const double v = joint(seq);
      pzx[z * d + x] = v;
      py += v;
    }
  if (!(py > 1e-14)) throw DegeneratePostSelection("cpf_from_joint: P(y) = " + std::to_string(py));

  std::vector<double> pz(d, 0.0), px(d, 0.0);
  for (std::size_t z = 0; z < d; ++z)
    for (std::size_t x = 0; x < d; ++x) {
      pzx[z * d + x] /= py;
      pz[z] += pzx[z * d + x];
      px[x] += pzx[z * d + x];
    }
  double c = 0.0;
  for (std::size_t z = 0; z < d; ++z)
    for (std::size_t x = 0; x < d; ++x) c += (pzx[z * d + x] - pz[z] * px[x]) * observables[z] * observables[x];
  return c;
}

double classical_cpf(const ClassicalChain& chain, std::span<const double> observables,
                     std::span<const std::size_t> y, std::size_t order) {
  if (order < 1) throw ConfigError("classical_cpf: order must be at least 1");
  if (chain.observations() != order + 2) {
    throw ShapeError("classical_cpf: chain has " + std::to_string(chain.observations()) +
                     " observations, order " + std::to_string(order) + " needs " + std::to_string(order + 2));
  }
  return cpf_from_joint(chain.joint(), observables, y);
}

}  // namespace cpfsim::cpf
