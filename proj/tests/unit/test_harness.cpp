#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <cstring>

#include "doctest.h"
#include "lgmd/decomposition.hpp"
#include "lgmd/harness.hpp"
#include "lgmd/synth.hpp"
#include "test_util.hpp"

using namespace lgmd;

namespace {

std::filesystem::path scratch_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "lgmd_harness_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an lgmd::Error");
  return ErrorCode::InvalidArgument;
}

bool bit_identical(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

// Rows with wall time removed, for determinism comparisons.
std::string rows_without_time(ExperimentReport r) {
  for (auto& row : r.rows) row.seconds = 0.0;
  r.aggregates.clear();
  return report_to_json(r);
}

ExperimentConfig small_config(Task task) {
  ExperimentConfig c;
  c.task = task;
  c.n = 30;
  c.p = 25;
  c.k = 3;
  c.edge_fraction = 0.1;
  c.repetitions = 2;
  c.eta1 = c.eta2 = 2.0;
  c.workers = 1;
  return c;
}

}  // namespace

TEST_CASE("load_matrix: CSV") {
  SUBCASE("dense") {
    const DataMatrix m = parse_csv("1,2\n3,4\n");
    CHECK_FALSE(m.has_mask());
    CHECK(m.values() == (Matrix(2, 2) << 1, 2, 3, 4).finished());
  }
  SUBCASE("empty fields are missing") {
    const DataMatrix m = parse_csv("1,,\n,2,\n");
    REQUIRE(m.has_mask());
    CHECK(m.rows() == 2);
    CHECK(m.cols() == 3);
    CHECK(m.observed_count() == 2);
    CHECK(m.observed(0, 0));
    CHECK(m.observed(1, 1));
    CHECK(m.values()(1, 1) == 2.0);
  }
  SUBCASE("quoted fields, CRLF and exponents") {
    const DataMatrix m = parse_csv("\"1.5\", -2e3\r\n\"\",+4\r\n");
    CHECK(m.values()(0, 0) == 1.5);
    CHECK(m.values()(0, 1) == -2000.0);
    CHECK_FALSE(m.observed(1, 0));
    CHECK(m.values()(1, 1) == 4.0);
  }
  SUBCASE("parse error location") {
    try {
      parse_csv("1,2\n3,x\n");
      FAIL("expected ParseError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ParseError);
      CHECK(std::string(e.what()).find("line 2, column 2") != std::string::npos);
    }
  }
  SUBCASE("ragged rows") { CHECK(code_of([] { parse_csv("1,2\n3\n"); }) == ErrorCode::DimensionMismatch); }
  SUBCASE("missing file") {
    CHECK(code_of([] { load_matrix("/nonexistent/lgmd.csv", MatrixFormat::Csv); }) == ErrorCode::IoError);
  }
}

TEST_CASE("load_matrix: MatrixMarket") {
  SUBCASE("coordinate entries define the mask") {
    const DataMatrix m = parse_matrix_market(
        "%%MatrixMarket matrix coordinate real general\n% comment\n2 3 2\n1 1 5\n2 3 -1.25\n");
    REQUIRE(m.has_mask());
    CHECK(m.observed_count() == 2);
    CHECK(m.values()(0, 0) == 5.0);
    CHECK(m.values()(1, 2) == -1.25);
  }
  SUBCASE("symmetric coordinate files are mirrored") {
    const DataMatrix m =
        parse_matrix_market("%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 2\n2 1 0.5\n2 2 3\n");
    CHECK_FALSE(m.has_mask());
    CHECK(m.values()(0, 1) == 0.5);
  }
  SUBCASE("array layout is column-major and dense") {
    const DataMatrix m = parse_matrix_market("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n");
    CHECK(m.values() == (Matrix(2, 2) << 1, 3, 2, 4).finished());
  }
  SUBCASE("errors") {
    CHECK(code_of([] { parse_matrix_market("not a banner\n1 1 1\n"); }) == ErrorCode::ParseError);
    CHECK(code_of([] { parse_matrix_market("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n"); }) ==
          ErrorCode::ParseError);
    CHECK(code_of([] { parse_matrix_market("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n"); }) ==
          ErrorCode::DimensionMismatch);
    try {
      parse_matrix_market("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 zz\n");
      FAIL("expected ParseError");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("line 3, column 3") != std::string::npos);
    }
  }
}

TEST_CASE("save_matrix round trip is bit-exact") {
  const auto dir = scratch_dir();
  const Matrix v = testutil::random_matrix(50, 40, 1) * 1e3;
  for (MatrixFormat f : {MatrixFormat::Csv, MatrixFormat::MatrixMarket}) {
    const auto path = (dir / (f == MatrixFormat::Csv ? "rt.csv" : "rt.mtx")).string();
    save_matrix(DataMatrix(v), path, f);
    const DataMatrix back = load_matrix(path, format_from_path(path));
    CHECK_FALSE(back.has_mask());
    CHECK(bit_identical(back.values(), v));

    const Mask mask = gen_mask(50, 40, 0.5, 2);
    save_matrix(DataMatrix(v, mask), path, f);
    const DataMatrix masked = load_matrix(path, f);
    REQUIRE(masked.has_mask());
    CHECK(*masked.mask() == mask);
    for (Index j = 0; j < 40; ++j) {
      for (Index i = 0; i < 50; ++i) {
        if (mask(i, j)) CHECK(masked.values()(i, j) == v(i, j));
      }
    }
  }
  // Values with extreme exponents and signed zero.
  Matrix odd(1, 4);
  odd << 1e-308, -0.0, 1.7976931348623157e308, 0.1;
  CHECK(bit_identical(parse_csv(to_csv(DataMatrix(odd))).values(), odd));
}

TEST_CASE("config parsing") {
  SUBCASE("valid file") {
    const ExperimentConfig c = config_from_json(R"({"task": "complete", "methods": ["pmf", "lgmd"],
      "sweep": [0.3, 0.8], "repetitions": 4, "k": 5, "eta1": 1.5, "seed": 9, "tune_strategy": "surrogate"})");
    CHECK(c.task == Task::Complete);
    CHECK(c.methods == std::vector<Method>{Method::Pmf, Method::Lgmd});
    CHECK(c.sweep == std::vector<double>{0.3, 0.8});
    CHECK(c.repetitions == 4);
    CHECK(c.k == 5);
    CHECK(c.eta1 == 1.5);
    CHECK(c.seed == 9u);
    CHECK(c.tune_strategy == TuneStrategy::Surrogate);
  }
  SUBCASE("unknown keys and bad values are config errors") {
    for (const char* text : {R"({"bogus": 1})", R"({"repetitions": 0})", R"({"sweep": []})",
                             R"({"lambda1_min": 5, "lambda1_max": 1})", R"({"k": "five"})", R"({"methods": ["svd"]})",
                             R"({"task": "complete", "sweep": [1.5]})", R"([1, 2])", R"({"k": )"}) {
      CAPTURE(text);
      CHECK(code_of([&] { config_from_json(text); }) == ErrorCode::ConfigError);
    }
  }
  SUBCASE("overrides and serialization") {
    ExperimentConfig c;
    apply_override(c, "methods=pca");
    apply_override(c, "sweep=[0.1,0.2]");
    apply_override(c, "task=cluster");
    CHECK(c.methods == std::vector<Method>{Method::Pca});
    CHECK(c.sweep.size() == 2);
    CHECK(c.task == Task::Cluster);
    CHECK(code_of([&] { apply_override(c, "noequals"); }) == ErrorCode::ConfigError);
    CHECK(code_of([&] { apply_override(c, "nokey=1"); }) == ErrorCode::ConfigError);
    c.sweep = {2, 3};
    const ExperimentConfig back = config_from_json(config_to_json(c));
    CHECK(config_to_json(back) == config_to_json(c));
  }
}

TEST_CASE("tune_search") {
  TuneOptions opts;
  opts.lambda1_min = opts.lambda2_min = 1e-2;
  opts.lambda1_max = opts.lambda2_max = 1e2;

  SUBCASE("budget one returns the single probe") {
    opts.budget = 1;
    const TuneResult r = tune_search([](double a, double b) { return a + b; }, opts);
    REQUIRE(r.history.size() == 1);
    CHECK(r.lambda1 == r.history[0].lambda1);
    CHECK(r.lambda2 == r.history[0].lambda2);
  }
  SUBCASE("flat landscape") {
    for (TuneStrategy s : {TuneStrategy::Random, TuneStrategy::Surrogate}) {
      opts.strategy = s;
      opts.budget = 10;
      const TuneResult r = tune_search([](double, double) { return 3.0; }, opts);
      CHECK(r.score == 3.0);
      CHECK(r.history.size() == 10u);
    }
  }
  SUBCASE("probes stay in the box and failures are skipped") {
    opts.budget = 12;
    int calls = 0;
    const TuneResult r = tune_search(
        [&](double a, double b) {
          CHECK(a >= 1e-2 * (1 - 1e-12));
          CHECK(a <= 1e2 * (1 + 1e-12));
          CHECK(b >= 1e-2 * (1 - 1e-12));
          CHECK(b <= 1e2 * (1 + 1e-12));
          if (++calls % 2) throw Error(ErrorCode::NotConverged, "synthetic failure");
          return std::log(a) * std::log(a);
        },
        opts);
    CHECK(std::isfinite(r.score));
  }
  SUBCASE("tied lambdas") {
    opts.tie = true;
    opts.budget = 6;
    for (const auto& p : tune_search([](double a, double) { return a; }, opts).history) CHECK(p.lambda1 == p.lambda2);
  }
  SUBCASE("surrogate versus dense random search on a quadratic surface") {
    // Box-relative coordinates in [0, 1]^2; minimum at (0.3, 0.7).
    auto unit = [](double l) { return (std::log(l) - std::log(1e-2)) / (std::log(1e2) - std::log(1e-2)); };
    auto score = [&](double a, double b) {
      const double u = unit(a) - 0.3, v = unit(b) - 0.7;
      return u * u + 2.0 * v * v;
    };
    // Dense-grid oracle of the surface minimum.
    double grid_min = 1e300;
    for (int i = 0; i <= 400; ++i) {
      for (int j = 0; j <= 400; ++j) {
        const double u = i / 400.0 - 0.3, v = j / 400.0 - 0.7;
        grid_min = std::min(grid_min, u * u + 2.0 * v * v);
      }
    }
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      TuneOptions rnd = opts, sur = opts;
      rnd.budget = 200;
      rnd.seed = sur.seed = seed;
      sur.budget = 30;
      sur.strategy = TuneStrategy::Surrogate;
      const double gap_random = tune_search(score, rnd).score - grid_min;
      const TuneResult s = tune_search(score, sur);
      const double gap_surrogate = s.score - grid_min;
      ok += gap_surrogate <= 10.0 * gap_random ? 1 : 0;
      double best_random = 1e300;
      for (const auto& p : s.history) {
        if (p.random) best_random = std::min(best_random, p.score);
      }
      CHECK(s.score <= best_random);
    }
    CHECK(ok == 5);
  }
}

TEST_CASE("split_holdout") {
  const SyntheticInstance inst = gen_instance(20, 15, 2, 0.1, 0.2, 3);
  const DataMatrix y(inst.y_no.values(), gen_mask(20, 15, 0.6, 4));
  const auto [train, hold] = split_holdout(y, 0.2, 5);
  const Mask& observed = *y.mask();
  CHECK((train.array() && hold.array()).count() == 0);
  CHECK(Mask((train.array() || hold.array()).matrix()) == observed);
  CHECK(hold.count() == std::llround(0.2 * static_cast<double>(observed.count())));
  CHECK(train.rowwise().any().all());
  CHECK(train.colwise().any().all());
  const auto again = split_holdout(y, 0.2, 5);
  CHECK(again.second == hold);
}

TEST_CASE("tuning never trains on held-out entries") {
  const SyntheticInstance inst = gen_instance(25, 20, 3, 0.3, 0.1, 6);
  const auto [train_mask, hold] = split_holdout(inst.y_no, 0.1, 7);
  Matrix perturbed = inst.y_no.values();
  for (Index j = 0; j < perturbed.cols(); ++j) {
    for (Index i = 0; i < perturbed.rows(); ++i) {
      if (hold(i, j)) perturbed(i, j) += 100.0;
    }
  }
  ExperimentConfig cfg = small_config(Task::Denoise);
  cfg.n = 25;
  cfg.p = 20;
  for (Method m : {Method::Pmf, Method::Dgrmd, Method::Lgmd, Method::LgmdPlus}) {
    CAPTURE(to_string(m));
    const Matrix a = fit_reconstruction(m, DataMatrix(inst.y_no.values(), train_mask), cfg, 0.5, 0.5);
    const Matrix b = fit_reconstruction(m, DataMatrix(perturbed, train_mask), cfg, 0.5, 0.5);
    CHECK(bit_identical(a, b));
  }
  // The tuned pair depends on held-out values only through the validation score.
  cfg.tune_budget = 4;
  const TuneResult r = tune_method(Method::Pmf, inst.y_no, cfg, 8);
  CHECK(r.history.size() == 4u);
}

TEST_CASE("run_denoise") {
  SUBCASE("PCA at the true rank recovers noiseless data") {
    ExperimentConfig c = small_config(Task::Denoise);
    c.methods = {Method::Pca};
    c.sweep = {0.0};
    const ExperimentReport r = run_denoise(c);
    REQUIRE(r.rows.size() == 2u);
    for (const auto& row : r.rows) {
      CHECK(row.ok());
      REQUIRE(row.metrics.e2);
      const SyntheticInstance inst = gen_instance(30, 25, 3, 0.0, 0.1, cell_seed(c.seed, 0, row.repetition));
      CHECK(*row.metrics.e2 < 1e-8 * std::sqrt(inst.y_gt.values().squaredNorm() / 750.0));
      CHECK(*row.metrics.e5 < 1e-6);
    }
  }
  SUBCASE("one row per cell, deterministic, GPCA-processed LGMD factors") {
    ExperimentConfig c = small_config(Task::Denoise);
    c.methods = {Method::Pca, Method::Pmf, Method::Dgrmd, Method::Lgmd};
    c.sweep = {0.1, 0.5, 1.0};
    c.top_fractions = {0.1, 0.5};
    const ExperimentReport r = run_denoise(c);
    CHECK(r.rows.size() == 3u * 2u * 4u);
    std::set<std::tuple<int, double, int>> cells;
    for (const auto& row : r.rows) {
      CHECK(row.ok());
      cells.insert({static_cast<int>(row.method), row.sweep_value, row.repetition});
      CHECK(row.metrics.e2);
      CHECK(row.metrics.e5);
      if (row.method == Method::Lgmd || row.method == Method::Dgrmd) {
        CHECK(row.metrics.e7);
        CHECK(row.extra.count("e7@0.5"));
      } else {
        CHECK_FALSE(row.metrics.e7);
      }
    }
    CHECK(cells.size() == r.rows.size());
    c.workers = 3;
    CHECK(rows_without_time(run_denoise(c)) == rows_without_time(r));
  }
  SUBCASE("failing cells are recorded and the sweep continues") {
    ExperimentConfig c = small_config(Task::Complete);
    c.methods = {Method::Pca, Method::Pmf};
    c.sweep = {0.6};
    const ExperimentReport r = run_complete(c);
    REQUIRE(r.rows.size() == 4u);
    for (const auto& row : r.rows) {
      if (row.method == Method::Pca) {
        CHECK(row.status.rfind("failed:", 0) == 0);
      } else {
        CHECK(row.ok());
      }
    }
  }
}

TEST_CASE("run_complete") {
  SUBCASE("keep 1.0 scores an internal holdout") {
    ExperimentConfig c = small_config(Task::Complete);
    c.methods = {Method::Pmf};
    c.sweep = {1.0};
    c.lambda1 = c.lambda2 = 1e-6;
    c.max_inner = 2000;
    c.tol_inner = 1e-12;
    const ExperimentReport r = run_complete(c);
    for (const auto& row : r.rows) {
      REQUIRE(row.ok());
      REQUIRE(row.metrics.e1);
      CHECK(*row.metrics.e1 < 1e-3);
    }
  }
  SUBCASE("fewer observations do not help") {
    ExperimentConfig c = small_config(Task::Complete);
    c.methods = {Method::Pmf, Method::Lgmd};
    c.sweep = {0.3, 0.8};
    c.repetitions = 4;
    c.lambda1 = c.lambda2 = 0.1;
    const ExperimentReport r = run_complete(c);
    for (Method m : c.methods) {
      for (int rep = 0; rep < 4; ++rep) {
        double low = 0, high = 0;
        for (const auto& row : r.rows) {
          if (row.method != m || row.repetition != rep) continue;
          (row.sweep_value == 0.3 ? low : high) = *row.metrics.e1;
        }
        CHECK(high <= low);
      }
    }
  }
}

TEST_CASE("run_cluster") {
  // Two well-separated blobs with a label column.
  const Matrix noise = testutil::random_matrix(40, 6, 9) * 0.1;
  Matrix data(40, 7);
  std::vector<int> truth;
  for (Index i = 0; i < 40; ++i) {
    const int label = static_cast<int>(i % 2);
    data.row(i).head(6) = noise.row(i).array() + (label ? 10.0 : -10.0);
    data(i, 6) = label;
    truth.push_back(label);
  }
  const auto dir = scratch_dir();
  save_matrix(DataMatrix(data), (dir / "blobs.csv").string(), MatrixFormat::Csv);
  Matrix relabeled = data;
  relabeled.col(6) = (1.0 - data.col(6).array()) * 7.0;
  save_matrix(DataMatrix(relabeled), (dir / "blobs_relabeled.csv").string(), MatrixFormat::Csv);

  ExperimentConfig c;
  c.task = Task::Cluster;
  c.methods = {Method::Kmeans, Method::Pmf, Method::Lgmd};
  c.sweep = {2};
  c.k = 2;
  c.repetitions = 2;
  c.label_column = true;
  c.data_path = (dir / "blobs.csv").string();
  const ExperimentReport a = run_cluster(c);
  for (const auto& row : a.rows) {
    REQUIRE(row.ok());
    CHECK(*row.metrics.clustering_accuracy == 1.0);
  }
  c.data_path = (dir / "blobs_relabeled.csv").string();
  const ExperimentReport b = run_cluster(c);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(*a.rows[i].metrics.clustering_accuracy == *b.rows[i].metrics.clustering_accuracy);
  }

  ExperimentConfig syn = small_config(Task::Cluster);
  syn.n = 60;
  syn.p = 12;
  syn.cluster_dim = 4;
  syn.sweep = {3};
  syn.methods = {Method::Kmeans, Method::Pmf};
  for (const auto& row : run_cluster(syn).rows) {
    REQUIRE(row.ok());
    CHECK(*row.metrics.clustering_accuracy >= 1.0 / 3.0);
    CHECK(*row.metrics.clustering_accuracy <= 1.0);
  }
}

TEST_CASE("reports") {
  SUBCASE("empty report is header-only CSV") {
    const std::string csv = report_to_csv(ExperimentReport{});
    CHECK(csv ==
          "method,task,sweep_value,repetition,status,seconds,lambda1,lambda2,e1,e2,e3,e4,e5,e6,e7,e8,accuracy,extra\n");
  }
  ExperimentReport r;
  r.task = Task::Denoise;
  const double e2s[] = {0.5, 0.25, 0.75};
  for (int i = 0; i < 3; ++i) {
    ExperimentRow row;
    row.method = Method::Lgmd;
    row.sweep_value = 0.5;
    row.repetition = i;
    row.seconds = 0.1 * (i + 1);
    row.lambda1 = 2.0;
    row.lambda2 = 3.0;
    row.metrics.e2 = e2s[i];
    row.metrics.e3 = {0.1, -0.3};
    row.extra["e7@0.1"] = i;
    r.rows.push_back(row);
  }
  ExperimentRow failed = r.rows.front();
  failed.repetition = 3;
  failed.status = "failed: boom, with comma";
  failed.metrics.e2 = 100.0;
  r.rows.push_back(failed);
  r.aggregates = aggregate(r.rows);

  SUBCASE("aggregates match hand computation and skip failed rows") {
    const auto it = std::find_if(r.aggregates.begin(), r.aggregates.end(), [](const AggregateRow& a) { return a.metric == "e2"; });
    REQUIRE(it != r.aggregates.end());
    CHECK(it->count == 3);
    CHECK(it->mean == doctest::Approx(0.5).epsilon(1e-12));
    // Sample standard deviation 0.25 over three values.
    CHECK(it->standard_error == doctest::Approx(0.25 / std::sqrt(3.0)).epsilon(1e-12));
    const auto e3 = std::find_if(r.aggregates.begin(), r.aggregates.end(), [](const AggregateRow& a) { return a.metric == "e3"; });
    REQUIRE(e3 != r.aggregates.end());
    CHECK(e3->mean == doctest::Approx(0.2));
  }
  SUBCASE("JSON round trip") {
    const std::string text = report_to_json(r);
    CHECK(text.find("\"schema_version\": \"1\"") != std::string::npos);
    const ExperimentReport back = report_from_json(text);
    CHECK(report_to_json(back) == text);
    CHECK(back.rows.size() == 4u);
    CHECK(back.rows[3].status == failed.status);
    CHECK(code_of([] { report_from_json(R"({"schema_version": "2"})"); }) == ErrorCode::ParseError);
  }
  SUBCASE("CSV rows and aggregate lines") {
    const std::string csv = report_to_csv(r);
    const DataMatrix parsed = [&] {
      // Reuse the CSV reader on the numeric columns only.
      std::string numeric;
      std::istringstream in(csv);
      std::string line;
      std::getline(in, line);
      int rows = 0;
      while (std::getline(in, line) && rows < 3) {
        std::vector<std::string> f;
        std::string cur;
        for (char ch : line) {
          if (ch == ',') {
            f.push_back(cur);
            cur.clear();
          } else {
            cur += ch;
          }
        }
        numeric += f[2] + "," + f[6] + "," + f[7] + "," + f[9] + "\n";
        ++rows;
      }
      return parse_csv(numeric);
    }();
    CHECK(parsed.values()(1, 3) == 0.25);
    CHECK(parsed.values()(2, 1) == 2.0);
    CHECK(csv.find("\"failed: boom, with comma\"") != std::string::npos);
    CHECK(csv.find("lgmd,denoise,0.5,mean,aggregate") != std::string::npos);
    CHECK(csv.find("lgmd,denoise,0.5,se,aggregate") != std::string::npos);
  }
  SUBCASE("emit_report writes both formats") {
    const auto dir = scratch_dir();
    emit_report(r, (dir / "r.csv").string(), "csv");
    emit_report(r, (dir / "r.json").string(), "json");
    std::ifstream in(dir / "r.json");
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(report_from_json(ss.str()).rows.size() == 4u);
    CHECK(code_of([&] { emit_report(r, (dir / "r.txt").string(), "xml"); }) == ErrorCode::ConfigError);
  }
}

TEST_CASE("cell seeds are distinct") {
  std::set<std::uint64_t> seen;
  for (std::size_t s = 0; s < 10; ++s) {
    for (int r = 0; r < 30; ++r) seen.insert(cell_seed(42, s, r));
  }
  CHECK(seen.size() == 300u);
}
