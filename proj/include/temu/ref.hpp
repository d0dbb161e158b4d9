#pragma once

// Serial reference implementations of the parallel kernels. These are the
// independent oracles used by the test suite and the baseline side of the
// benchmark; they stay naive on purpose (plain index loops, no Eigen products,
// no OpenMP).

#include <Eigen/Dense>

#include "temu/tensor.hpp"

namespace temu::ref {

/// Mode-n unfolding by brute-force index enumeration.
[[nodiscard]] Eigen::MatrixXd unfold(const Tensor& t, std::size_t mode);

/// Mode-n product by triple-loop summation over every output element.
[[nodiscard]] Tensor mode_multiply(const Tensor& t, const Eigen::MatrixXd& m, std::size_t mode);

/// Reconstruction summing core[j] * prod_k U_k(i_k, j_k) for every output
/// element; O(size(t) * size(core)), test sizes only.
[[nodiscard]] Tensor reconstruct(const HosvdFactors& f);

/// Plain serial sum of squares.
[[nodiscard]] double sum_squares(std::span<const double> xs);

}  // namespace temu::ref
