#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lgmd/core.hpp"
#include "lgmd/metrics.hpp"

namespace lgmd {

// ---------------------------------------------------------------------------
// Matrix files

enum class MatrixFormat { Csv, MatrixMarket };

MatrixFormat parse_matrix_format(const std::string& name);
/// ".mtx" and ".mm" map to MatrixMarket, everything else to CSV.
MatrixFormat format_from_path(const std::string& path);

/// CSV: empty field = missing entry. MatrixMarket: coordinate entries that are
/// absent are missing; array files are dense. Errors carry "line L, column C".
DataMatrix load_matrix(const std::string& path, MatrixFormat format);
DataMatrix parse_csv(const std::string& text);
DataMatrix parse_matrix_market(const std::string& text);

/// Values are written with 17 significant digits; masked entries are left out.
void save_matrix(const DataMatrix& m, const std::string& path, MatrixFormat format);
std::string to_csv(const DataMatrix& m);
std::string to_matrix_market(const DataMatrix& m);

// ---------------------------------------------------------------------------
// Configuration

enum class Task { Denoise, Complete, Cluster, Structure };
enum class Method { Pca, Pmf, Dgrmd, Lgmd, LgmdPlus, Kmeans };
enum class TuneStrategy { Random, Surrogate };

std::string to_string(Task t);
std::string to_string(Method m);
Task parse_task(const std::string& s);
Method parse_method(const std::string& s);

struct ExperimentConfig {
  Task task = Task::Denoise;
  std::vector<Method> methods{Method::Pca, Method::Lgmd};

  // Data source: synthetic unless data_path is set.
  std::optional<std::string> data_path;
  // Cluster task with a file: the last column holds integer labels.
  bool label_column = false;
  Index n = 100;
  Index p = 100;
  double edge_fraction = 0.06;
  // Denoise/structure sweep noise ratios, complete sweeps keep fractions,
  // cluster sweeps cluster counts.
  std::vector<double> sweep{0.5};
  int repetitions = 1;
  Index k = 20;

  // Log-scale search box; lambda1/lambda2 are used as-is when tune_budget == 0.
  double lambda1_min = 1e-2, lambda1_max = 1e2;
  double lambda2_min = 1e-2, lambda2_max = 1e2;
  double lambda1 = 1.0, lambda2 = 1.0;
  // Tie lambda2 to lambda1 during the search.
  bool tie_lambdas = false;
  double eta1 = 4.0, eta2 = 4.0;
  int tune_budget = 0;
  TuneStrategy tune_strategy = TuneStrategy::Random;
  double holdout_fraction = 0.1;

  Index knn_neighbors = 5;
  std::vector<double> top_fractions{0.1};
  // Complete task: noise ratio of the synthetic data (0 per protocol).
  double noise_ratio = 0.0;

  // Cluster mixtures.
  Index cluster_dim = 10;
  double within_edge_fraction = 0.05;
  double diagonal_offset = 0.05;
  double cluster_noise = 1.0;

  int max_outer = 50;
  int max_inner = 100;
  double tol_outer = 1e-5;
  double tol_inner = 1e-6;
  int workers = 0;  // 0 = hardware concurrency
  std::uint64_t seed = 0;

  /// Throws ConfigError.
  void validate() const;
};

/// Flat JSON object; unknown keys, wrong types and invalid values raise ConfigError.
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// Applies one "key=value" override where value is JSON (bare strings allowed).
void apply_override(ExperimentConfig& cfg, const std::string& assignment);
std::string config_to_json(const ExperimentConfig& cfg);

/// Hyperparams for one fit from the config and a lambda pair.
Hyperparams make_hyperparams(const ExperimentConfig& cfg, double lambda1, double lambda2);

// ---------------------------------------------------------------------------
// Hyperparameter search

struct TuneOptions {
  double lambda1_min = 1e-2, lambda1_max = 1e2;
  double lambda2_min = 1e-2, lambda2_max = 1e2;
  bool tie = false;
  int budget = 8;
  TuneStrategy strategy = TuneStrategy::Random;
  std::uint64_t seed = 0;
};

struct TuneProbe {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double score = 0.0;  // +inf when the fit failed
  bool random = true;
};

struct TuneResult {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double score = 0.0;
  std::vector<TuneProbe> history;
};

/// Minimizes score over the log box. Surrogate mode spends about a third of
/// the budget on random probes, then maximizes expected improvement of a
/// Gaussian radial-basis interpolant on a 64 x 64 grid.
TuneResult tune_search(const std::function<double(double, double)>& score, const TuneOptions& opts);

/// Splits the observed entries of y into (training mask, holdout mask); every
/// row and column keeps at least one training entry.
std::pair<Mask, Mask> split_holdout(const DataMatrix& y, double fraction, std::uint64_t seed);

/// Fits `method` and returns its reconstruction X W^T.
Matrix fit_reconstruction(Method method, const DataMatrix& y, const ExperimentConfig& cfg, double lambda1,
                          double lambda2);

/// Tunes (lambda1, lambda2) for `method` by held-out RMSE on y.
TuneResult tune_method(Method method, const DataMatrix& y, const ExperimentConfig& cfg, std::uint64_t seed);

/// Tunes the first tunable method of cfg on the tuning instance of the first sweep value.
TuneResult tune_hyperparams(const ExperimentConfig& cfg, int budget);

// ---------------------------------------------------------------------------
// Experiments and reports

struct ExperimentRow {
  Method method = Method::Pca;
  Task task = Task::Denoise;
  double sweep_value = 0.0;
  int repetition = 0;
  std::string status = "ok";  // "ok" or "failed: <reason>"
  double seconds = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  MetricReport metrics;
  // Additional named values, e.g. edge recovery at several top fractions.
  std::map<std::string, double> extra;

  bool ok() const { return status == "ok"; }
};

struct AggregateRow {
  Method method = Method::Pca;
  double sweep_value = 0.0;
  std::string metric;
  int count = 0;
  double mean = 0.0;
  double standard_error = 0.0;
};

struct ExperimentReport {
  Task task = Task::Denoise;
  std::vector<ExperimentRow> rows;
  std::vector<AggregateRow> aggregates;
};

/// Scalar metric columns in report order.
const std::vector<std::string>& metric_names();
/// Named scalar of a row (metric column or extra key); nullopt when absent.
std::optional<double> row_value(const ExperimentRow& row, const std::string& name);

/// Mean and standard error over successful rows per (method, sweep value, metric).
std::vector<AggregateRow> aggregate(const std::vector<ExperimentRow>& rows);

/// Seed of repetition `rep` at sweep position `sweep_index`; shared by all methods.
std::uint64_t cell_seed(std::uint64_t base, std::size_t sweep_index, int rep);

ExperimentReport run_denoise(const ExperimentConfig& cfg);
ExperimentReport run_complete(const ExperimentConfig& cfg);
ExperimentReport run_cluster(const ExperimentConfig& cfg);
/// Denoising sweep scored by edge recovery at every top fraction; dgrmd rows
/// score the kNN graph built from the noisy data.
ExperimentReport run_structure(const ExperimentConfig& cfg);
ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// CSV columns: method, task, sweep_value, repetition, status, seconds,
/// lambda1, lambda2, then metric_names(), then extras as "key=value;...".
/// Aggregates follow with repetition "mean" or "se".
std::string report_to_csv(const ExperimentReport& r);
std::string report_to_json(const ExperimentReport& r);
ExperimentReport report_from_json(const std::string& text);
void emit_report(const ExperimentReport& r, const std::string& path, const std::string& format);

}  // namespace lgmd
