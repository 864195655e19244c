#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cpfsim/classical.hpp"
#include "cpfsim/errors.hpp"
#include "cpfsim/random_ops.hpp"

using namespace cpfsim;
using namespace cpfsim::cpf;

namespace {

const double kSpin[2] = {1.0, -1.0};

// Σ_{z,x} [P(z,x|y) − P(z|y)P(x|y)] O_z O_x from an explicit 3-index table.
double cpf_of(const std::vector<std::vector<std::vector<double>>>& p, std::size_t y, std::span<const double> obs) {
  const std::size_t d = obs.size();
  double py = 0.0;
  for (std::size_t x = 0; x < d; ++x)
    for (std::size_t z = 0; z < d; ++z) py += p[x][y][z];
  double exz = 0.0, ex = 0.0, ez = 0.0;
  for (std::size_t x = 0; x < d; ++x)
    for (std::size_t z = 0; z < d; ++z) {
      const double w = p[x][y][z] / py;
      exz += w * obs[x] * obs[z];
      ex += w * obs[x];
      ez += w * obs[z];
    }
  return exz - ex * ez;
}

}  // namespace

TEST(Chain, RejectsBadKernels) {
  EXPECT_THROW(ClassicalChain({0.5, 0.5}, {{{0.5, 0.5}, {0.2, 0.7}}, {{1, 0}, {0, 1}}}), ConfigError);
  EXPECT_THROW(ClassicalChain({0.5, 0.5}, {{{1.5, -0.5}, {0, 1}}, {{1, 0}, {0, 1}}}), ConfigError);
  EXPECT_THROW(ClassicalChain({0.5, 0.5}, {{{1, 0}, {0, 1}}}), ShapeError);
  EXPECT_THROW(ClassicalChain({0.5, 0.5}, {{{1, 0}}, {{1, 0}, {0, 1}}}), ShapeError);
}

TEST(Chain, KernelPower) {
  const Kernel k = {{0.9, 0.1}, {0.3, 0.7}};
  const auto k0 = kernel_power(k, 0);
  EXPECT_EQ(k0, (Kernel{{1, 0}, {0, 1}}));
  const auto k2 = kernel_power(k, 2);
  EXPECT_NEAR(k2[0][0], 0.81 + 0.03, 1e-15);
  EXPECT_NEAR(k2[0][1], 0.09 + 0.07, 1e-15);
  EXPECT_NEAR(k2[1][0], 0.27 + 0.21, 1e-15);
  EXPECT_NEAR(k2[1][1], 0.03 + 0.49, 1e-15);
}

TEST(Chain, JointIsProductOfKernels) {
  const std::vector<double> init = {0.2, 0.8};
  const Kernel a = {{0.6, 0.4}, {0.1, 0.9}};
  const Kernel b = {{0.3, 0.7}, {0.5, 0.5}};
  const auto joint = ClassicalChain(init, {a, b}).joint();
  for (std::size_t x = 0; x < 2; ++x)
    for (std::size_t y = 0; y < 2; ++y)
      for (std::size_t z = 0; z < 2; ++z) {
        const std::size_t seq[3] = {x, y, z};
        EXPECT_NEAR(joint(seq), init[x] * a[x][y] * b[y][z], 1e-16);
      }
}

TEST(Chain, MarkovCpfVanishesAtEveryOrder) {
  randgen::Rng rng(51);
  for (std::size_t n = 1; n <= 3; ++n) {
    for (int trial = 0; trial < 30; ++trial) {
      const std::size_t d = 2 + trial % 3;
      std::vector<Kernel> kernels;
      for (std::size_t k = 0; k <= n; ++k) kernels.push_back(randgen::stochastic_kernel(d, d, rng));
      const ClassicalChain chain(randgen::distribution(d, rng), kernels);
      std::vector<double> obs(d);
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      for (auto& o : obs) o = u(rng);
      std::vector<std::size_t> y(n);
      for (auto& v : y) v = rng() % d;
      EXPECT_LE(std::abs(classical_cpf(chain, obs, y, n)), 1e-13);
    }
  }
}

TEST(Chain, HomogeneousStepsMatchExplicitPowers) {
  const Kernel k = {{0.9, 0.1}, {0.3, 0.7}};
  const unsigned steps[2] = {2, 3};
  const auto h = ClassicalChain::homogeneous({0.5, 0.5}, k, steps).joint();
  const auto e = ClassicalChain({0.5, 0.5}, {kernel_power(k, 2), kernel_power(k, 3)}).joint();
  for (std::size_t i = 0; i < h.probs().size(); ++i) EXPECT_NEAR(h.probs()[i], e.probs()[i], 1e-16);
}

TEST(Chain, OrderMismatchAndDegenerateConditioning) {
  const Kernel id = {{1, 0}, {0, 1}};
  const ClassicalChain chain({1.0, 0.0}, {id, id});
  const std::size_t y1[1] = {1};
  EXPECT_THROW(classical_cpf(chain, kSpin, y1, 1), DegeneratePostSelection);
  const std::size_t y2[2] = {0, 0};
  EXPECT_THROW(classical_cpf(chain, kSpin, y2, 2), ShapeError);
}

TEST(HiddenMarkov, MatchesHandEnumeration) {
  const double p = 0.2, e = 0.15;
  const Kernel k = {{1 - p, p}, {p, 1 - p}};
  const Kernel em = {{1 - e, e}, {e, 1 - e}};
  const std::vector<double> init = {0.7, 0.3};
  const HiddenMarkovChain hmm(ClassicalChain(init, {k, k}), em);

  std::vector<std::vector<std::vector<double>>> obs(2, std::vector<std::vector<double>>(2, std::vector<double>(2, 0.0)));
  for (std::size_t h0 = 0; h0 < 2; ++h0)
    for (std::size_t h1 = 0; h1 < 2; ++h1)
      for (std::size_t h2 = 0; h2 < 2; ++h2)
        for (std::size_t o0 = 0; o0 < 2; ++o0)
          for (std::size_t o1 = 0; o1 < 2; ++o1)
            for (std::size_t o2 = 0; o2 < 2; ++o2)
              obs[o0][o1][o2] += init[h0] * k[h0][h1] * k[h1][h2] * em[h0][o0] * em[h1][o1] * em[h2][o2];

  const auto joint = hmm.joint();
  for (std::size_t y = 0; y < 2; ++y) {
    const std::size_t ys[1] = {y};
    const double c = cpf_from_joint(joint, kSpin, ys);
    EXPECT_NEAR(c, cpf_of(obs, y, kSpin), 1e-14);
    EXPECT_GT(std::abs(c), 1e-3);
  }
}

TEST(HiddenMarkov, NoiselessEmissionIsMarkov) {
  const Kernel k = {{0.8, 0.2}, {0.4, 0.6}};
  const HiddenMarkovChain hmm(ClassicalChain({0.5, 0.5}, {k, k}), {{1, 0}, {0, 1}});
  const std::size_t y[1] = {0};
  EXPECT_LE(std::abs(cpf_from_joint(hmm.joint(), kSpin, y)), 1e-15);
}
