#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "lgmd/core.hpp"

namespace lgmd {

/// Ground truth and noisy observation of one synthetic draw.
struct SyntheticInstance {
  DataMatrix y_gt;
  DataMatrix y_no;
  Matrix x_gt;
  Matrix w_gt;
  PrecisionGraph a_gt;
  PrecisionGraph b_gt;
  double sigma_n = 0.0;
  std::uint64_t seed = 0;
};

/// Deterministic generator for (seed, stream); independent streams for the
/// different random pieces of one instance.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0);

/// Uniform random graph with exactly round(edge_fraction * d(d-1)/2) edges
/// (at least one), weights +-U[0.4, 1], diagonal = absolute row sum + 0.5.
PrecisionGraph gen_sparse_precision(Index d, double edge_fraction, std::uint64_t seed);

/// Matrix normal draw with row covariance row_prec^-1 and column covariance
/// col_prec^-1; std::nullopt stands for the identity.
Matrix sample_matrix_normal(Index rows, Index cols, const std::optional<PrecisionGraph>& row_prec,
                            const std::optional<PrecisionGraph>& col_prec, std::uint64_t seed);

/// X ~ MN(0, A^-1, I), W ~ MN(0, B^-1, I), Y_gt = X W^T, Y_no = Y_gt + E with
/// iid N(0, sigma_n^2) noise and sigma_n = sigma_ratio * std(Y_gt).
SyntheticInstance gen_instance(Index n, Index p, Index k, double sigma_ratio, double edge_fraction,
                               std::uint64_t seed);

/// Exactly round(keep_fraction * n * p) observed entries; every row and column keeps one.
Mask gen_mask(Index n, Index p, double keep_fraction, std::uint64_t seed);

/// Labelled mixture whose clusters are connected blocks of the sample graph.
struct ClusterInstance {
  DataMatrix y;
  std::vector<int> labels;
  PrecisionGraph a_gt;
  Matrix x_gt;
};

struct ClusterMixtureParams {
  Index n = 500;
  Index p = 50;
  Index k = 10;
  int clusters = 5;
  // Fraction of within-cluster pairs joined by an edge.
  double within_edge_fraction = 0.05;
  // Added to each diagonal of the block Laplacian; smaller values tie a block closer together.
  double diagonal_offset = 0.05;
  double sigma_ratio = 1.0;
};

ClusterInstance gen_cluster_mixture(const ClusterMixtureParams& params, std::uint64_t seed);

}  // namespace lgmd
