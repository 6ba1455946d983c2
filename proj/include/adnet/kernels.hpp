#pragma once

// Per-iteration kernels over stacked agent iterates (K x M, one row per
// agent). Each parallel kernel has a serial dense reference with the same
// contract; tests compare the two and the benchmark target times them.

#include <span>

#include "adnet/linalg.hpp"
#include "adnet/topology.hpp"

namespace adnet {

/// Row-parallel kernels only fan out above this many K*M entries.
inline constexpr std::size_t kParallelThreshold = 1u << 14;

/// out.row(k) = sum_l a_{lk} in.row(l), i.e. out = A^T in.
void combine(const SparseWeights& a, const Matrix& in, Matrix& out);
void combine_reference(const Matrix& a, const Matrix& in, Matrix& out);

/// out = a * in for a dense K x K matrix.
void apply_dense(const Matrix& a, const Matrix& in, Matrix& out);
void apply_dense_reference(const Matrix& a, const Matrix& in, Matrix& out);

/// out = x - mu * g, elementwise.
void axpy_step(const Matrix& x, const Matrix& g, double mu, Matrix& out);

/// (1/K) sum_k ||w_k - w_star||^2. Serial so results do not depend on the
/// thread count.
double mean_square_deviation(const Matrix& w, std::span<const double> w_star);

}  // namespace adnet
