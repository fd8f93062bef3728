#pragma once

#include "lgmd/decomposition.hpp"
#include "lgmd/harness.hpp"
#include "lgmd/synth.hpp"

namespace lgmd::detail {

/// Dispatches one fit; kmeans has no factor model and is rejected.
inline FitResult fit_method(Method method, const DataMatrix& y, const ExperimentConfig& cfg, double lambda1,
                            double lambda2) {
  const Hyperparams h = make_hyperparams(cfg, lambda1, lambda2);
  switch (method) {
    case Method::Pca:
      return fit_pca(y, cfg.k);
    case Method::Pmf:
      return fit_pmf(y, h);
    case Method::Dgrmd:
      return fit_dgrmd(y, h, knn_graph(y, cfg.knn_neighbors, Axis::Rows), knn_graph(y, cfg.knn_neighbors, Axis::Columns));
    case Method::Lgmd:
      return fit_lgmd(y, h, Variant::Plain);
    case Method::LgmdPlus:
      return fit_lgmd(y, h, Variant::LaplacianPlus);
    case Method::Kmeans:
      break;
  }
  throw Error(ErrorCode::InvalidArgument, "method " + to_string(method) + " has no factor model");
}

inline bool tunable(Method m) { return m != Method::Pca && m != Method::Kmeans; }

/// Data for one experiment cell: training matrix plus whatever ground truth the task scores against.
struct CellData {
  DataMatrix train;
  std::optional<SyntheticInstance> truth;  // synthetic sources only
  std::optional<Mask> eval_mask;           // entries scored by E1
  Matrix eval_values;                      // reference values for E1
  std::vector<int> labels;                 // cluster task
  int clusters = 0;
};

CellData make_cell(const ExperimentConfig& cfg, std::size_t sweep_index, std::uint64_t seed);

/// Seed for the tuning instance of one sweep position; never equal to an evaluation cell seed.
std::uint64_t tuning_seed(std::uint64_t base, std::size_t sweep_index);

}  // namespace lgmd::detail
