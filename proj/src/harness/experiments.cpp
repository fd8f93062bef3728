#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include "fit_method.hpp"
#include "lgmd/metrics.hpp"
#include "lgmd/synth.hpp"

namespace lgmd {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Runs task(i) for i in [0, count) on a bounded pool; each index is claimed once.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& task) {
  unsigned threads = workers > 0 ? static_cast<unsigned>(workers) : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) task(i);
    });
  }
  for (auto& th : pool) th.join();
}

Index numerical_rank(const Matrix& m) {
  if (m.size() == 0) return 0;
  const Eigen::JacobiSVD<Matrix> svd(m);
  const Vector s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  return (s.array() > 1e-8 * s(0)).count();
}

std::string fraction_key(const char* metric, double f) {
  std::ostringstream ss;
  ss << metric << '@' << f;
  return ss.str();
}

void score_graph(ExperimentRow& row, const ExperimentConfig& cfg, const SyntheticInstance& truth,
                 const std::vector<Edge>& a_support, const std::vector<Edge>& b_support) {
  row.metrics.e7 = static_cast<double>(edge_recovery(truth.a_gt, a_support, cfg.top_fractions.front()));
  row.metrics.e8 = static_cast<double>(edge_recovery(truth.b_gt, b_support, cfg.top_fractions.front()));
  for (double f : cfg.top_fractions) {
    const double a_top = std::ceil(f * static_cast<double>(truth.a_gt.support().size()));
    const double b_top = std::ceil(f * static_cast<double>(truth.b_gt.support().size()));
    const auto e7 = static_cast<double>(edge_recovery(truth.a_gt, a_support, f));
    const auto e8 = static_cast<double>(edge_recovery(truth.b_gt, b_support, f));
    row.extra[fraction_key("e7", f)] = e7;
    row.extra[fraction_key("e8", f)] = e8;
    row.extra[fraction_key("e7_rate", f)] = a_top > 0 ? e7 / a_top : 0.0;
    row.extra[fraction_key("e8_rate", f)] = b_top > 0 ? e8 / b_top : 0.0;
  }
  row.extra["a_edges"] = static_cast<double>(a_support.size());
  row.extra["b_edges"] = static_cast<double>(b_support.size());
}

void evaluate(ExperimentRow& row, const ExperimentConfig& cfg, const detail::CellData& cell, std::uint64_t seed) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  if (row.method == Method::Kmeans) {
    if (cfg.task != Task::Cluster) throw Error(ErrorCode::InvalidArgument, "kmeans only runs in the cluster task");
    if (cell.train.has_mask()) throw Error(ErrorCode::InvalidArgument, "kmeans needs fully observed data");
    const auto labels = kmeans(cell.train.values(), cell.clusters, seed);
    row.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    row.metrics.clustering_accuracy = clustering_accuracy(labels, cell.labels);
    return;
  }

  const FitResult fit = detail::fit_method(row.method, cell.train, cfg, row.lambda1, row.lambda2);
  const Matrix recon = fit.factors.product();
  Matrix x = fit.factors.x, w = fit.factors.w;
  const bool learned = row.method == Method::Lgmd || row.method == Method::LgmdPlus;
  // GPCA gives unique factors for the angle and correlation metrics; clustering uses X as fitted.
  if (learned && cfg.task != Task::Cluster) {
    const GpcaResult g = gpca_postprocess(recon, fit.a, fit.b, cfg.k);
    x = g.x();
    w = g.w();
  }
  row.seconds = std::chrono::duration<double>(clock::now() - t0).count();
  row.extra["x_rank"] = static_cast<double>(numerical_rank(x));
  if (fit.diagnostics.count("outer_iterations")) row.extra["outer_iterations"] = fit.diagnostics.at("outer_iterations");

  if (cell.eval_mask) row.metrics.e1 = masked_rmse(cell.eval_values, recon, *cell.eval_mask);
  // Correlations and angles are undefined for collapsed factors; those metrics stay empty.
  try {
    row.metrics.e3 = column_correlations(x);
    row.metrics.e4 = column_correlations(w);
  } catch (const Error&) {
  }
  if (cell.truth) {
    const SyntheticInstance& t = *cell.truth;
    row.metrics.e2 = masked_rmse(t.y_gt.values(), recon, Mask::Constant(recon.rows(), recon.cols(), true));
    try {
      row.metrics.e5 = subspace_angle(x, t.x_gt);
      row.metrics.e6 = subspace_angle(w, t.w_gt);
    } catch (const Error&) {
    }
    if (learned) {
      score_graph(row, cfg, t, fit.a.support(), fit.b.support());
    } else if (row.method == Method::Dgrmd) {
      score_graph(row, cfg, t, fit.sample_laplacian->support(), fit.feature_laplacian->support());
    }
  }
  if (cfg.task == Task::Cluster) {
    row.metrics.clustering_accuracy = clustering_accuracy(kmeans(x, cell.clusters, seed), cell.labels);
  }
}

ExperimentReport run_task(const ExperimentConfig& cfg, Task task) {
  ExperimentConfig c = cfg;
  c.task = task;
  c.validate();
  const std::size_t sweeps = c.sweep.size(), methods = c.methods.size();
  const auto reps = static_cast<std::size_t>(c.repetitions);

  // Tuning per (method, sweep value) on a dedicated instance.
  std::vector<TuneResult> tuned(methods * sweeps);
  std::vector<std::string> tune_error(methods * sweeps);
  parallel_for(methods * sweeps, c.workers, [&](std::size_t idx) {
    const std::size_t m = idx / sweeps, s = idx % sweeps;
    try {
      if (!detail::tunable(c.methods[m]) || c.tune_budget == 0) {
        tuned[idx].lambda1 = c.lambda1;
        tuned[idx].lambda2 = c.lambda2;
        return;
      }
      const std::uint64_t seed = detail::tuning_seed(c.seed, s);
      const detail::CellData cell = detail::make_cell(c, s, seed);
      tuned[idx] = tune_method(c.methods[m], cell.train, c, seed);
    } catch (const std::exception& e) {
      tune_error[idx] = e.what();
    }
  });

  ExperimentReport report;
  report.task = task;
  report.rows.resize(sweeps * reps * methods);
  parallel_for(sweeps * reps, c.workers, [&](std::size_t cell_idx) {
    const std::size_t s = cell_idx / reps;
    const int r = static_cast<int>(cell_idx % reps);
    // Completion reuses one instance per repetition across keep fractions so E1 pairs up by seed.
    const std::uint64_t seed = cell_seed(c.seed, task == Task::Complete ? 0 : s, r);
    std::optional<detail::CellData> cell;
    std::string cell_error;
    try {
      cell = detail::make_cell(c, s, seed);
    } catch (const std::exception& e) {
      cell_error = e.what();
    }
    for (std::size_t m = 0; m < methods; ++m) {
      ExperimentRow& row = report.rows[cell_idx * methods + m];
      row.method = c.methods[m];
      row.task = task;
      row.sweep_value = c.sweep[s];
      row.metrics.context = c.sweep[s];
      row.repetition = r;
      const std::size_t tidx = m * sweeps + s;
      row.lambda1 = tuned[tidx].lambda1;
      row.lambda2 = tuned[tidx].lambda2;
      if (!cell) {
        row.status = "failed: " + cell_error;
        continue;
      }
      if (!tune_error[tidx].empty()) {
        row.status = "failed: tuning: " + tune_error[tidx];
        continue;
      }
      try {
        evaluate(row, c, *cell, splitmix64(seed + m));
      } catch (const std::exception& e) {
        row.status = std::string("failed: ") + e.what();
      }
    }
  });
  report.aggregates = aggregate(report.rows);
  return report;
}

}  // namespace

namespace detail {

std::uint64_t tuning_seed(std::uint64_t base, std::size_t sweep_index) {
  return splitmix64(splitmix64(base ^ 0x74756e696e67ULL) + sweep_index);
}

CellData make_cell(const ExperimentConfig& cfg, std::size_t sweep_index, std::uint64_t seed) {
  CellData cell;
  const double v = cfg.sweep.at(sweep_index);
  auto hold_out = [&](const DataMatrix& full, double fraction) {
    const auto [train, hold] = split_holdout(full, fraction, seed);
    cell.train = DataMatrix(full.values(), train);
    cell.eval_mask = hold;
    cell.eval_values = full.values();
  };

  if (cfg.data_path) {
    DataMatrix data = load_matrix(*cfg.data_path, format_from_path(*cfg.data_path));
    if (cfg.task == Task::Cluster) {
      if (data.cols() < 2) throw Error(ErrorCode::DimensionMismatch, "cluster file needs features and a label column");
      const Index p = data.cols() - 1;
      for (Index i = 0; i < data.rows(); ++i) {
        if (!data.observed(i, p)) throw Error(ErrorCode::ParseError, "missing label in row " + std::to_string(i + 1));
        const double l = data.values()(i, p);
        if (l != std::floor(l)) throw Error(ErrorCode::ParseError, "non-integer label in row " + std::to_string(i + 1));
        cell.labels.push_back(static_cast<int>(l));
      }
      const Matrix feats = data.values().leftCols(p);
      cell.train = data.has_mask() ? DataMatrix(feats, data.mask()->leftCols(p)) : DataMatrix(feats);
      cell.clusters = static_cast<int>(v);
    } else if (cfg.task == Task::Complete && v < 1.0) {
      hold_out(data, 1.0 - v);
    } else {
      hold_out(data, cfg.holdout_fraction);
    }
    return cell;
  }

  switch (cfg.task) {
    case Task::Denoise:
    case Task::Structure: {
      cell.truth = gen_instance(cfg.n, cfg.p, cfg.k, v, cfg.edge_fraction, seed);
      cell.train = cell.truth->y_no;
      break;
    }
    case Task::Complete: {
      cell.truth = gen_instance(cfg.n, cfg.p, cfg.k, cfg.noise_ratio, cfg.edge_fraction, seed);
      if (v < 1.0) {
        const Mask keep = gen_mask(cfg.n, cfg.p, v, splitmix64(seed ^ (0x6d61736bULL + sweep_index)));
        cell.train = DataMatrix(cell.truth->y_no.values(), keep);
        cell.eval_mask = Mask((!keep.array()).matrix());
        cell.eval_values = cell.truth->y_no.values();
      } else {
        hold_out(cell.truth->y_no, cfg.holdout_fraction);
      }
      break;
    }
    case Task::Cluster: {
      ClusterMixtureParams params;
      params.n = cfg.n;
      params.p = cfg.p;
      params.k = cfg.cluster_dim;
      params.clusters = static_cast<int>(v);
      params.within_edge_fraction = cfg.within_edge_fraction;
      params.diagonal_offset = cfg.diagonal_offset;
      params.sigma_ratio = cfg.cluster_noise;
      ClusterInstance inst = gen_cluster_mixture(params, seed);
      cell.train = std::move(inst.y);
      cell.labels = std::move(inst.labels);
      cell.clusters = params.clusters;
      break;
    }
  }
  return cell;
}

}  // namespace detail

std::uint64_t cell_seed(std::uint64_t base, std::size_t sweep_index, int rep) {
  return splitmix64(splitmix64(base) ^ splitmix64((static_cast<std::uint64_t>(sweep_index) << 32) +
                                                  static_cast<std::uint64_t>(rep)));
}

ExperimentReport run_denoise(const ExperimentConfig& cfg) { return run_task(cfg, Task::Denoise); }
ExperimentReport run_complete(const ExperimentConfig& cfg) { return run_task(cfg, Task::Complete); }
ExperimentReport run_cluster(const ExperimentConfig& cfg) { return run_task(cfg, Task::Cluster); }
ExperimentReport run_structure(const ExperimentConfig& cfg) { return run_task(cfg, Task::Structure); }

ExperimentReport run_experiment(const ExperimentConfig& cfg) { return run_task(cfg, cfg.task); }

}  // namespace lgmd
