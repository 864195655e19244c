#pragma once

#include <span>
#include <vector>

// Classical oracle for CPF correlations: exact enumeration over finite
// alphabets.

namespace cpfsim::cpf {

using Kernel = std::vector<std::vector<double>>;

/// Joint distribution over sequences (x, y_1, …, y_n, z) on a shared alphabet,
/// stored densely with x as the slowest index.
class SequenceDistribution {
 public:
  SequenceDistribution(std::size_t alphabet, std::size_t length, std::vector<double> probs);

  std::size_t alphabet() const noexcept { return alphabet_; }
  std::size_t length() const noexcept { return length_; }
  double operator()(std::span<const std::size_t> seq) const;
  const std::vector<double>& probs() const noexcept { return p_; }

 private:
  std::size_t alphabet_;
  std::size_t length_;
  std::vector<double> p_;
};

/// A (possibly time-inhomogeneous) Markov chain observed at n + 2 times.
class ClassicalChain {
 public:
  ClassicalChain(std::vector<double> initial, std::vector<Kernel> kernels);

  /// Same kernel raised to the given integer powers between observations.
  static ClassicalChain homogeneous(std::vector<double> initial, const Kernel& kernel,
                                    std::span<const unsigned> steps);

  std::size_t states() const noexcept { return initial_.size(); }
  std::size_t observations() const noexcept { return kernels_.size() + 1; }
  const std::vector<double>& initial() const noexcept { return initial_; }
  const std::vector<Kernel>& kernels() const noexcept { return kernels_; }

  SequenceDistribution joint() const;

 private:
  std::vector<double> initial_;
  std::vector<Kernel> kernels_;
};

/// A hidden Markov chain observed through an emission matrix
/// emission[hidden][observed]. Its observation process is generally not
/// Markov.
class HiddenMarkovChain {
 public:
  HiddenMarkovChain(ClassicalChain hidden, Kernel emission);

  SequenceDistribution joint() const;
  std::size_t observed_states() const noexcept { return emission_.front().size(); }

 private:
  ClassicalChain hidden_;
  Kernel emission_;
};

Kernel kernel_power(const Kernel& k, unsigned power);

/// C_pf^(n) from a joint sequence distribution, conditioned on y (length n).
/// Throws DegeneratePostSelection if P(y) ≤ 1e-14.
double cpf_from_joint(const SequenceDistribution& joint, std::span<const double> observables,
                      std::span<const std::size_t> y);

/// C_pf^(n) of a Markov chain by exhaustive enumeration; n is the number of
/// conditioning observations and must match the chain's length.
double classical_cpf(const ClassicalChain& chain, std::span<const double> observables,
                     std::span<const std::size_t> y, std::size_t order);

}  // namespace cpfsim::cpf
