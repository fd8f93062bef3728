#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "fit_method.hpp"
#include "lgmd/metrics.hpp"
#include "lgmd/synth.hpp"

namespace lgmd {

namespace {

constexpr int kGrid = 64;
constexpr double kLengthScale = 0.15;
constexpr double kNugget = 1e-8;

struct Box {
  double lo1, hi1, lo2, hi2;  // natural logs
  bool tie;

  double lambda1(double u) const { return std::exp(lo1 + u * (hi1 - lo1)); }
  double lambda2(double u1, double u2) const {
    return tie ? std::exp(std::clamp(lo1 + u1 * (hi1 - lo1), lo2, hi2)) : std::exp(lo2 + u2 * (hi2 - lo2));
  }
};

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double kernel(double a1, double a2, double b1, double b2) {
  const double r2 = (a1 - b1) * (a1 - b1) + (a2 - b2) * (a2 - b2);
  return std::exp(-r2 / (2.0 * kLengthScale * kLengthScale));
}

// Grid point with the largest expected improvement under a Gaussian RBF
// interpolant with kriging variance; nullopt when nothing improves.
std::optional<std::pair<double, double>> next_candidate(const std::vector<double>& u1, const std::vector<double>& u2,
                                                        const std::vector<double>& scores, bool tie) {
  const auto m = static_cast<Index>(scores.size());
  double worst = -std::numeric_limits<double>::infinity();
  for (double s : scores) {
    if (std::isfinite(s)) worst = std::max(worst, s);
  }
  if (!std::isfinite(worst)) return std::nullopt;
  Vector y(m);
  for (Index i = 0; i < m; ++i) {
    y(i) = std::isfinite(scores[static_cast<std::size_t>(i)]) ? scores[static_cast<std::size_t>(i)] : worst;
  }
  const double mean = y.mean();
  const double sd = std::sqrt((y.array() - mean).square().mean());
  if (!(sd > 0.0)) return std::nullopt;
  const Vector z = (y.array() - mean) / sd;

  Matrix k(m, m);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < m; ++j) {
      k(i, j) = kernel(u1[static_cast<std::size_t>(i)], u2[static_cast<std::size_t>(i)], u1[static_cast<std::size_t>(j)],
                       u2[static_cast<std::size_t>(j)]);
    }
  }
  k.diagonal().array() += kNugget;
  const Eigen::LDLT<Matrix> ldlt(k);
  const Vector alpha = ldlt.solve(z);
  const double best = z.minCoeff();

  double best_ei = 0.0;
  std::optional<std::pair<double, double>> arg;
  const int second = tie ? 1 : kGrid;
  for (int a = 0; a < kGrid; ++a) {
    for (int b = 0; b < second; ++b) {
      const double g1 = a / (kGrid - 1.0);
      const double g2 = tie ? g1 : b / (kGrid - 1.0);
      Vector kv(m);
      for (Index i = 0; i < m; ++i) kv(i) = kernel(g1, g2, u1[static_cast<std::size_t>(i)], u2[static_cast<std::size_t>(i)]);
      const double mu = kv.dot(alpha);
      const double var = std::max(0.0, 1.0 - kv.dot(ldlt.solve(kv)));
      const double s = std::sqrt(var);
      double ei = std::max(0.0, best - mu);
      if (s > 1e-12) {
        const double t = (best - mu) / s;
        ei = (best - mu) * normal_cdf(t) + s * normal_pdf(t);
      }
      if (ei > best_ei) {
        best_ei = ei;
        arg = std::make_pair(g1, g2);
      }
    }
  }
  if (best_ei <= 1e-12) return std::nullopt;
  return arg;
}

}  // namespace

TuneResult tune_search(const std::function<double(double, double)>& score, const TuneOptions& opts) {
  if (opts.budget < 1) throw Error(ErrorCode::InvalidArgument, "tuning budget must be at least 1");
  if (!(opts.lambda1_min > 0 && opts.lambda1_min < opts.lambda1_max && opts.lambda2_min > 0 &&
        opts.lambda2_min < opts.lambda2_max)) {
    throw Error(ErrorCode::InvalidArgument, "search box needs 0 < min < max");
  }
  const Box box{std::log(opts.lambda1_min), std::log(opts.lambda1_max), std::log(opts.lambda2_min),
                std::log(opts.lambda2_max), opts.tie};
  auto rng = make_rng(opts.seed, 0x74756e65);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  TuneResult result;
  std::vector<double> u1, u2, scores;
  auto probe = [&](double a, double b, bool random) {
    if (box.tie) b = a;
    TuneProbe p{box.lambda1(a), box.lambda2(a, b), 0.0, random};
    try {
      p.score = score(p.lambda1, p.lambda2);
      if (!std::isfinite(p.score)) p.score = std::numeric_limits<double>::infinity();
    } catch (const std::exception&) {
      p.score = std::numeric_limits<double>::infinity();
    }
    u1.push_back(a);
    u2.push_back(b);
    scores.push_back(p.score);
    result.history.push_back(p);
  };

  const int random_probes =
      opts.strategy == TuneStrategy::Random ? opts.budget : std::min(opts.budget, std::max(4, opts.budget / 3));
  for (int i = 0; i < random_probes; ++i) {
    const double a = unit(rng), b = unit(rng);
    probe(a, b, true);
  }
  while (static_cast<int>(result.history.size()) < opts.budget) {
    const auto next = next_candidate(u1, u2, scores, box.tie);
    if (next) {
      probe(next->first, next->second, false);
    } else {
      const double a = unit(rng), b = unit(rng);
      probe(a, b, true);
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < result.history.size(); ++i) {
    if (result.history[i].score < result.history[best].score) best = i;
  }
  result.lambda1 = result.history[best].lambda1;
  result.lambda2 = result.history[best].lambda2;
  result.score = result.history[best].score;
  return result;
}

std::pair<Mask, Mask> split_holdout(const DataMatrix& y, double fraction, std::uint64_t seed) {
  if (!(fraction > 0 && fraction < 1)) throw Error(ErrorCode::InvalidArgument, "holdout fraction must lie in (0, 1)");
  Mask train = y.has_mask() ? *y.mask() : Mask::Constant(y.rows(), y.cols(), true);
  Mask hold = Mask::Constant(y.rows(), y.cols(), false);
  std::vector<std::pair<Index, Index>> cells;
  for (Index j = 0; j < y.cols(); ++j) {
    for (Index i = 0; i < y.rows(); ++i) {
      if (train(i, j)) cells.emplace_back(i, j);
    }
  }
  auto rng = make_rng(seed, 0x686f6c64);
  std::shuffle(cells.begin(), cells.end(), rng);
  const auto target = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * cells.size())));
  Eigen::VectorXi row_count = train.cast<int>().rowwise().sum();
  Eigen::RowVectorXi col_count = train.cast<int>().colwise().sum();
  std::size_t taken = 0;
  for (const auto& [i, j] : cells) {
    if (taken == target) break;
    if (row_count(i) > 1 && col_count(j) > 1) {
      train(i, j) = false;
      hold(i, j) = true;
      --row_count(i);
      --col_count(j);
      ++taken;
    }
  }
  if (taken == 0) throw Error(ErrorCode::DegenerateMask, "no entry can be held out");
  return {train, hold};
}

Matrix fit_reconstruction(Method method, const DataMatrix& y, const ExperimentConfig& cfg, double lambda1,
                          double lambda2) {
  return detail::fit_method(method, y, cfg, lambda1, lambda2).factors.product();
}

TuneResult tune_method(Method method, const DataMatrix& y, const ExperimentConfig& cfg, std::uint64_t seed) {
  if (!detail::tunable(method) || cfg.tune_budget == 0) {
    TuneResult fixed;
    fixed.lambda1 = cfg.lambda1;
    fixed.lambda2 = cfg.lambda2;
    return fixed;
  }
  const auto [train_mask, hold] = split_holdout(y, cfg.holdout_fraction, seed);
  const DataMatrix train(y.values(), train_mask);
  auto score = [&](double l1, double l2) {
    return masked_rmse(y.values(), fit_reconstruction(method, train, cfg, l1, l2), hold);
  };
  TuneOptions opts;
  opts.lambda1_min = cfg.lambda1_min;
  opts.lambda1_max = cfg.lambda1_max;
  opts.lambda2_min = cfg.lambda2_min;
  opts.lambda2_max = cfg.lambda2_max;
  opts.tie = cfg.tie_lambdas;
  opts.budget = cfg.tune_budget;
  opts.strategy = cfg.tune_strategy;
  opts.seed = seed;
  return tune_search(score, opts);
}

TuneResult tune_hyperparams(const ExperimentConfig& cfg, int budget) {
  const auto it = std::find_if(cfg.methods.begin(), cfg.methods.end(), detail::tunable);
  if (it == cfg.methods.end()) throw Error(ErrorCode::ConfigError, "no tunable method in config");
  ExperimentConfig c = cfg;
  c.tune_budget = budget;
  const std::uint64_t seed = detail::tuning_seed(cfg.seed, 0);
  const detail::CellData cell = detail::make_cell(c, 0, seed);
  return tune_method(*it, cell.train, c, seed);
}

}  // namespace lgmd
