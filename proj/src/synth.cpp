#include "lgmd/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lgmd/decomposition.hpp"

namespace lgmd {

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x4c474d44u};
  return std::mt19937_64(seq);
}

namespace {

double random_weight(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mag(0.4, 1.0);
  std::bernoulli_distribution sign(0.5);
  const double m = mag(rng);
  return sign(rng) ? m : -m;
}

Matrix standard_normal(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix z(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) z(i, j) = dist(rng);
  }
  return z;
}

double population_std(const Matrix& m) { return std::sqrt((m.array() - m.mean()).square().mean()); }

}  // namespace

PrecisionGraph gen_sparse_precision(Index d, double edge_fraction, std::uint64_t seed) {
  if (d < 2) throw Error(ErrorCode::InvalidArgument, "precision dimension must be at least 2");
  if (!(edge_fraction > 0.0 && edge_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "edge fraction must lie in (0, 1]");
  }
  auto rng = make_rng(seed, 1);
  std::vector<Edge> pairs;
  for (Index i = 0; i < d; ++i) {
    for (Index j = i + 1; j < d; ++j) pairs.push_back({i, j});
  }
  const auto count = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(edge_fraction * static_cast<double>(pairs.size()))));
  std::shuffle(pairs.begin(), pairs.end(), rng);
  pairs.resize(std::min(count, pairs.size()));
  std::sort(pairs.begin(), pairs.end());

  Matrix theta = Matrix::Zero(d, d);
  for (const Edge& e : pairs) {
    const double w = random_weight(rng);
    theta(e.i, e.j) = theta(e.j, e.i) = w;
  }
  for (Index i = 0; i < d; ++i) theta(i, i) = theta.row(i).cwiseAbs().sum() + 0.5;
  return PrecisionGraph(std::move(theta));
}

Matrix sample_matrix_normal(Index rows, Index cols, const std::optional<PrecisionGraph>& row_prec,
                            const std::optional<PrecisionGraph>& col_prec, std::uint64_t seed) {
  if (row_prec && row_prec->dim() != rows) throw Error(ErrorCode::DimensionMismatch, "row precision size");
  if (col_prec && col_prec->dim() != cols) throw Error(ErrorCode::DimensionMismatch, "column precision size");
  auto rng = make_rng(seed, 2);
  Matrix z = standard_normal(rows, cols, rng);
  if (row_prec) z = inv_sqrt_spd(row_prec->theta()) * z;
  if (col_prec) z = z * inv_sqrt_spd(col_prec->theta());
  return z;
}

SyntheticInstance gen_instance(Index n, Index p, Index k, double sigma_ratio, double edge_fraction,
                               std::uint64_t seed) {
  if (k < 1 || k > std::min(n, p)) throw Error(ErrorCode::InvalidArgument, "rank outside [1, min(n, p)]");
  if (!(sigma_ratio >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise ratio must be non-negative");
  const std::uint64_t base = seed * 0x9E3779B97F4A7C15ull;
  PrecisionGraph a = gen_sparse_precision(n, edge_fraction, base + 11);
  PrecisionGraph b = gen_sparse_precision(p, edge_fraction, base + 12);
  Matrix x = sample_matrix_normal(n, k, a, std::nullopt, base + 13);
  Matrix w = sample_matrix_normal(p, k, b, std::nullopt, base + 14);
  Matrix y_gt = x * w.transpose();
  const double sigma_n = sigma_ratio * population_std(y_gt);
  Matrix y_no = y_gt;
  if (sigma_n > 0.0) {
    auto rng = make_rng(base + 15, 3);
    y_no += sigma_n * standard_normal(n, p, rng);
  }
  return SyntheticInstance{DataMatrix(std::move(y_gt)), DataMatrix(std::move(y_no)), std::move(x), std::move(w),
                           std::move(a), std::move(b), sigma_n, seed};
}

Mask gen_mask(Index n, Index p, double keep_fraction, std::uint64_t seed) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "keep fraction must lie in (0, 1]");
  }
  const Index total = n * p;
  const Index keep = static_cast<Index>(std::llround(keep_fraction * static_cast<double>(total)));
  if (keep < 1) throw Error(ErrorCode::InvalidArgument, "keep fraction selects no entries");
  if (keep == total) return Mask::Constant(n, p, true);
  if (keep < std::max(n, p)) throw Error(ErrorCode::DegenerateMask, "too few entries to cover every row and column");

  auto rng = make_rng(seed, 4);
  std::vector<Index> idx(static_cast<std::size_t>(total));
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::iota(idx.begin(), idx.end(), Index{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    Mask mask = Mask::Constant(n, p, false);
    for (Index t = 0; t < keep; ++t) mask(idx[t] % n, idx[t] / n) = true;
    if (mask.rowwise().any().all() && mask.colwise().any().all()) return mask;
  }
  throw Error(ErrorCode::DegenerateMask, "could not cover every row and column in 100 attempts");
}

ClusterInstance gen_cluster_mixture(const ClusterMixtureParams& params, std::uint64_t seed) {
  const Index n = params.n;
  if (params.clusters < 1 || params.clusters > n) throw Error(ErrorCode::InvalidArgument, "cluster count");
  if (params.k < 1 || params.k > std::min(n, params.p)) throw Error(ErrorCode::InvalidArgument, "rank");
  if (!(params.diagonal_offset > 0.0)) throw Error(ErrorCode::InvalidArgument, "diagonal offset must be positive");
  auto rng = make_rng(seed, 5);

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> labels(static_cast<std::size_t>(n));
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(params.clusters));
  for (Index t = 0; t < n; ++t) {
    const int c = static_cast<int>(t % params.clusters);
    labels[order[t]] = c;
    members[c].push_back(order[t]);
  }

  std::uniform_real_distribution<double> weight(0.4, 1.0);
  std::bernoulli_distribution extra(params.within_edge_fraction);
  Matrix theta = Matrix::Zero(n, n);
  auto connect = [&](Index i, Index j) {
    if (theta(i, j) != 0.0) return;
    const double w = weight(rng);
    theta(i, j) = theta(j, i) = -w;
    theta(i, i) += w;
    theta(j, j) += w;
  };
  for (const auto& block : members) {
    // Random spanning tree keeps each block connected.
    for (std::size_t t = 1; t < block.size(); ++t) {
      std::uniform_int_distribution<std::size_t> parent(0, t - 1);
      connect(block[t], block[parent(rng)]);
    }
    for (std::size_t a = 0; a < block.size(); ++a) {
      for (std::size_t b = a + 1; b < block.size(); ++b) {
        if (extra(rng)) connect(block[a], block[b]);
      }
    }
  }
  theta.diagonal().array() += params.diagonal_offset;
  PrecisionGraph a(std::move(theta));

  Matrix x = sample_matrix_normal(n, params.k, a, std::nullopt, seed * 31 + 7);
  auto wrng = make_rng(seed, 6);
  const Matrix w = standard_normal(params.p, params.k, wrng);
  Matrix y = x * w.transpose();
  const double sigma_n = params.sigma_ratio * population_std(y);
  if (sigma_n > 0.0) {
    auto nrng = make_rng(seed, 7);
    y += sigma_n * standard_normal(n, params.p, nrng);
  }
  return ClusterInstance{DataMatrix(std::move(y)), std::move(labels), std::move(a), std::move(x)};
}

}  // namespace lgmd
