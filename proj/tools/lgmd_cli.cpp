// Command-line front end: synth, fit, denoise, complete, cluster, tune.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "lgmd/decomposition.hpp"
#include "lgmd/harness.hpp"
#include "lgmd/synth.hpp"

namespace {

using namespace lgmd;
using nlohmann::json;

constexpr int kOk = 0, kConfigError = 1, kDataError = 2, kRuntimeError = 3;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "csv";
  std::vector<std::string> sets;
  std::vector<std::string> methods;
  std::vector<double> sweep;
  std::optional<int> repetitions, tune_budget, workers;
  std::optional<Index> k;
  std::optional<double> lambda1, lambda2, eta1, eta2;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON config file");
  app->add_option("--seed", c.seed, "Base random seed");
  app->add_option("--out", c.out, "Output path (file, directory or prefix depending on the command)");
  app->add_option("--format", c.format, "Output format");
  app->add_option("--set", c.sets, "Config override key=value (repeatable)");
  app->add_option("--methods", c.methods, "Methods: pca pmf dgrmd lgmd lgmd_plus kmeans");
  app->add_option("--sweep", c.sweep, "Sweep values");
  app->add_option("--repetitions", c.repetitions);
  app->add_option("--k", c.k, "Rank");
  app->add_option("--lambda1", c.lambda1);
  app->add_option("--lambda2", c.lambda2);
  app->add_option("--eta1", c.eta1);
  app->add_option("--eta2", c.eta2);
  app->add_option("--tune-budget", c.tune_budget);
  app->add_option("--workers", c.workers);
}

ExperimentConfig build_config(const Common& c, std::optional<Task> task) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
  if (task) cfg.task = *task;
  for (const auto& s : c.sets) apply_override(cfg, s);
  if (!c.methods.empty()) {
    cfg.methods.clear();
    for (const auto& m : c.methods) cfg.methods.push_back(parse_method(m));
  }
  if (!c.sweep.empty()) cfg.sweep = c.sweep;
  if (c.seed) cfg.seed = *c.seed;
  if (c.repetitions) cfg.repetitions = *c.repetitions;
  if (c.tune_budget) cfg.tune_budget = *c.tune_budget;
  if (c.workers) cfg.workers = *c.workers;
  if (c.k) cfg.k = *c.k;
  if (c.lambda1) cfg.lambda1 = *c.lambda1;
  if (c.lambda2) cfg.lambda2 = *c.lambda2;
  if (c.eta1) cfg.eta1 = *c.eta1;
  if (c.eta2) cfg.eta2 = *c.eta2;
  cfg.validate();
  return cfg;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << text;
}

std::string matrix_ext(MatrixFormat f) { return f == MatrixFormat::Csv ? ".csv" : ".mtx"; }

int run_synth(const Common& c, double keep) {
  const ExperimentConfig cfg = build_config(c, std::nullopt);
  const MatrixFormat fmt = parse_matrix_format(c.format);
  const double ratio = cfg.sweep.front();
  const SyntheticInstance inst = gen_instance(cfg.n, cfg.p, cfg.k, ratio, cfg.edge_fraction, cfg.seed);
  const std::filesystem::path dir = c.out.empty() ? "." : c.out;
  std::filesystem::create_directories(dir);
  DataMatrix y = inst.y_no;
  if (keep < 1.0) y = DataMatrix(inst.y_no.values(), gen_mask(cfg.n, cfg.p, keep, cfg.seed));
  const std::string ext = matrix_ext(fmt);
  save_matrix(y, (dir / ("y" + ext)).string(), fmt);
  save_matrix(inst.y_gt, (dir / ("y_gt" + ext)).string(), fmt);
  save_matrix(DataMatrix(inst.x_gt), (dir / ("x_gt" + ext)).string(), fmt);
  save_matrix(DataMatrix(inst.w_gt), (dir / ("w_gt" + ext)).string(), fmt);
  save_matrix(DataMatrix(inst.a_gt.theta()), (dir / ("a_gt" + ext)).string(), fmt);
  save_matrix(DataMatrix(inst.b_gt.theta()), (dir / ("b_gt" + ext)).string(), fmt);
  json summary{{"n", cfg.n}, {"p", cfg.p}, {"k", cfg.k}, {"noise_ratio", ratio}, {"sigma_n", inst.sigma_n},
               {"keep", keep}, {"seed", cfg.seed}, {"a_edges", inst.a_gt.support().size()},
               {"b_edges", inst.b_gt.support().size()}};
  std::cout << summary.dump(2) << "\n";
  return kOk;
}

int run_fit(const Common& c, const std::string& input) {
  const ExperimentConfig cfg = build_config(c, std::nullopt);
  const std::string path = !input.empty() ? input : cfg.data_path.value_or("");
  if (path.empty()) throw Error(ErrorCode::ConfigError, "fit needs --input or data_path");
  const DataMatrix y = load_matrix(path, format_from_path(path));
  const Method method = cfg.methods.front();
  if (method == Method::Kmeans) throw Error(ErrorCode::ConfigError, "kmeans has no factor model");
  const Hyperparams h = make_hyperparams(cfg, cfg.lambda1, cfg.lambda2);
  FitResult fit;
  switch (method) {
    case Method::Pca: fit = fit_pca(y, cfg.k); break;
    case Method::Pmf: fit = fit_pmf(y, h); break;
    case Method::Dgrmd:
      fit = fit_dgrmd(y, h, knn_graph(y, cfg.knn_neighbors, Axis::Rows), knn_graph(y, cfg.knn_neighbors, Axis::Columns));
      break;
    case Method::Lgmd: fit = fit_lgmd(y, h, Variant::Plain); break;
    default: fit = fit_lgmd(y, h, Variant::LaplacianPlus); break;
  }
  const MatrixFormat fmt = parse_matrix_format(c.format);
  if (!c.out.empty()) {
    const std::string ext = matrix_ext(fmt);
    const auto parent = std::filesystem::path(c.out).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    save_matrix(DataMatrix(fit.factors.x), c.out + "_x" + ext, fmt);
    save_matrix(DataMatrix(fit.factors.w), c.out + "_w" + ext, fmt);
    save_matrix(DataMatrix(fit.a.theta()), c.out + "_a" + ext, fmt);
    save_matrix(DataMatrix(fit.b.theta()), c.out + "_b" + ext, fmt);
  }
  json summary{{"method", to_string(method)},
               {"objective", fit.objective_trace.empty() ? 0.0 : fit.objective_trace.back()},
               {"iterations", fit.iterations},
               {"converged", fit.converged},
               {"a_edges", fit.a.support().size()},
               {"b_edges", fit.b.support().size()},
               {"diagnostics", fit.diagnostics}};
  std::cout << summary.dump(2) << "\n";
  return kOk;
}

int run_report(const Common& c, Task task) {
  const ExperimentConfig cfg = build_config(c, task);
  if (c.format != "csv" && c.format != "json") throw Error(ErrorCode::ConfigError, "report format must be csv or json");
  // Unreadable input is a data error rather than a failure of every cell.
  if (cfg.data_path) load_matrix(*cfg.data_path, format_from_path(*cfg.data_path));
  const ExperimentReport report = run_experiment(cfg);
  write_text(c.out, c.format == "csv" ? report_to_csv(report) : report_to_json(report));
  bool any_ok = false;
  for (const auto& r : report.rows) any_ok = any_ok || r.ok();
  if (!any_ok) {
    std::cerr << "error: every cell failed";
    if (!report.rows.empty()) std::cerr << " (first: " << report.rows.front().status << ")";
    std::cerr << "\n";
    return kRuntimeError;
  }
  return kOk;
}

int run_tune(const Common& c, std::optional<int> budget) {
  const ExperimentConfig cfg = build_config(c, std::nullopt);
  const int b = budget.value_or(cfg.tune_budget > 0 ? cfg.tune_budget : 8);
  const TuneResult r = tune_hyperparams(cfg, b);
  json history = json::array();
  for (const auto& p : r.history) {
    history.push_back({{"lambda1", p.lambda1},
                       {"lambda2", p.lambda2},
                       {"score", std::isfinite(p.score) ? json(p.score) : json(nullptr)},
                       {"random", p.random}});
  }
  json out{{"lambda1", r.lambda1}, {"lambda2", r.lambda2}, {"score", std::isfinite(r.score) ? json(r.score) : json(nullptr)},
           {"history", history}};
  write_text(c.out, out.dump(2) + "\n");
  return std::isfinite(r.score) ? kOk : kRuntimeError;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidArgument:
      return kConfigError;
    case ErrorCode::ParseError:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::IoError:
    case ErrorCode::DegenerateMask:
    case ErrorCode::ZeroVariance:
    case ErrorCode::DegenerateInput:
    case ErrorCode::NonFinite:
      return kDataError;
    default:
      return kRuntimeError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learnable graph-regularized matrix decomposition"};
  app.require_subcommand(1);

  Common synth_c, fit_c, den_c, comp_c, clus_c, tune_c;
  double keep = 1.0;
  std::string input;
  std::optional<int> budget;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic instance");
  add_common(synth, synth_c);
  synth->add_option("--keep", keep, "Observed fraction of y");
  auto* fit = app.add_subcommand("fit", "Fit one method to a matrix file");
  add_common(fit, fit_c);
  fit->add_option("--input", input, "Matrix file (.csv or .mtx)");
  auto* den = app.add_subcommand("denoise", "Denoising experiment");
  add_common(den, den_c);
  auto* comp = app.add_subcommand("complete", "Completion experiment");
  add_common(comp, comp_c);
  auto* clus = app.add_subcommand("cluster", "Clustering experiment");
  add_common(clus, clus_c);
  auto* tune = app.add_subcommand("tune", "Tune lambda1 and lambda2 by held-out RMSE");
  add_common(tune, tune_c);
  tune->add_option("--budget", budget, "Number of fits");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*synth) return run_synth(synth_c, keep);
    if (*fit) return run_fit(fit_c, input);
    if (*den) return run_report(den_c, Task::Denoise);
    if (*comp) return run_report(comp_c, Task::Complete);
    if (*clus) return run_report(clus_c, Task::Cluster);
    if (*tune) return run_tune(tune_c, budget);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kConfigError;
}
