#pragma once

#include <random>
#include <vector>

#include "cpfsim/classical.hpp"
#include "cpfsim/measure.hpp"
#include "cpfsim/qmat.hpp"

// Random operators, states and measurements for property checks.

namespace cpfsim::randgen {

using Rng = std::mt19937_64;

qmat::CMatrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng);
/// Orthonormalized columns of a Gaussian matrix (rows ≥ cols).
qmat::CMatrix isometry(std::size_t rows, std::size_t cols, Rng& rng);
qmat::CMatrix unitary(std::size_t d, Rng& rng);
qmat::HermitianMatrix hermitian(std::size_t d, Rng& rng, double scale = 1.0);
qmat::DensityMatrix density(std::size_t d, Rng& rng);
qmat::CVector pure_state(std::size_t d, Rng& rng);

/// k Kraus operators taken from blocks of a random isometry; labels "0".."k-1"
/// with observable values uniform in [-1, 1].
measure::KrausSet kraus_set(std::size_t d, std::size_t k, Rng& rng);
/// Rank-one projective measurement in a random orthonormal basis.
measure::KrausSet projective_set(std::size_t d, Rng& rng);
/// Random pure targets for every label of `set`.
measure::Preparation preparation_for(const measure::KrausSet& set, Rng& rng);

std::vector<double> distribution(std::size_t d, Rng& rng);
cpf::Kernel stochastic_kernel(std::size_t rows, std::size_t cols, Rng& rng);

}  // namespace cpfsim::randgen
