#include <algorithm>
#include <cmath>

#include "als_engine.hpp"

namespace lgmd {
namespace detail {

AlsEngine::AlsEngine(const DataMatrix& y, Matrix a, Matrix b, double lambda1, double lambda2, double epsilon,
                     AlsUpdate update, bool safeguard)
    : y_(y),
      a_(std::move(a)),
      b_(std::move(b)),
      lambda1_(lambda1),
      lambda2_(lambda2),
      epsilon_(epsilon),
      update_(update),
      safeguard_(safeguard) {
  if (a_.rows() != y.rows() || a_.cols() != y.rows() || b_.rows() != y.cols() || b_.cols() != y.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "regularizer sizes do not match the data");
  }
}

Matrix AlsEngine::fill(const FactorPair& f) const {
  if (!y_.has_mask()) return y_.values();
  return y_.filled(f.product());
}

double AlsEngine::objective(const FactorPair& f) const {
  const Matrix recon = f.product();
  const double fit = y_.has_mask() ? (y_.filled(recon) - recon).squaredNorm() : (y_.values() - recon).squaredNorm();
  double value = 0.5 * fit;
  if (lambda1_ != 0.0) value += 0.5 * lambda1_ * f.x.cwiseProduct(a_ * f.x).sum();
  if (lambda2_ != 0.0) value += 0.5 * lambda2_ * f.w.cwiseProduct(b_ * f.w).sum();
  return value;
}

const AlsEngine::Eigen2& AlsEngine::eig_a() const {
  if (!eig_a_) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(a_);
    eig_a_ = Eigen2{eig.eigenvectors(), eig.eigenvalues()};
  }
  return *eig_a_;
}

const AlsEngine::Eigen2& AlsEngine::eig_b() const {
  if (!eig_b_) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(b_);
    eig_b_ = Eigen2{eig.eigenvectors(), eig.eigenvalues()};
  }
  return *eig_b_;
}

namespace {

double ridge(const Matrix& gram, double epsilon) {
  const double scale = gram.trace() / static_cast<double>(gram.rows());
  return epsilon * (scale > 0.0 ? scale : 1.0);
}

}  // namespace

Matrix AlsEngine::fixed_point_half(const Matrix& target, const Matrix& left, const Matrix& right, const Matrix& reg,
                                   double lambda) const {
  Matrix gram = right.transpose() * right;
  gram.diagonal().array() += ridge(gram, epsilon_);
  Matrix rhs = target * right;
  if (lambda != 0.0) rhs.noalias() -= lambda * (reg * left);
  Eigen::LLT<Matrix> llt(gram);
  return llt.solve(rhs.transpose()).transpose();
}

Matrix AlsEngine::exact_half(const Matrix& target, const Matrix& right, double lambda, const Eigen2& eig) const {
  const Matrix gram = right.transpose() * right;
  Eigen::SelfAdjointEigenSolver<Matrix> geig(gram);
  const double floor = ridge(gram, epsilon_);
  Matrix t = eig.vectors.transpose() * (target * right) * geig.eigenvectors();
  for (Index j = 0; j < t.cols(); ++j) {
    for (Index i = 0; i < t.rows(); ++i) {
      const double denom = lambda * std::max(eig.values(i), 0.0) + std::max(geig.eigenvalues()(j), 0.0);
      t(i, j) /= std::max(denom, floor);
    }
  }
  return eig.vectors * t * geig.eigenvectors().transpose();
}

Matrix AlsEngine::half_step(const Matrix& target, const Matrix& left, const Matrix& right, const Matrix& reg,
                            double lambda, const Eigen2& (AlsEngine::*eig)() const, AlsUpdate mode) const {
  if (mode == AlsUpdate::Exact) {
    if (lambda == 0.0) {
      Eigen2 identity{Matrix::Identity(left.rows(), left.rows()), Vector::Zero(left.rows())};
      return exact_half(target, right, 0.0, identity);
    }
    return exact_half(target, right, lambda, (this->*eig)());
  }
  return fixed_point_half(target, left, right, reg, lambda);
}

FactorPair AlsEngine::checked_step(const FactorPair& f, int* safeguard_count) const {
  FactorPair cur = f;
  const bool guard = safeguard_count != nullptr && update_ == AlsUpdate::FixedPoint;
  double before = guard ? objective(cur) : 0.0;

  {
    const Matrix target = fill(cur);
    Matrix x = half_step(target, cur.x, cur.w, a_, lambda1_, &AlsEngine::eig_a, update_);
    if (guard) {
      FactorPair trial(x, cur.w, cur.x_scale, cur.w_scale);
      const double after = objective(trial);
      if (!(after <= before)) {
        x = half_step(target, cur.x, cur.w, a_, lambda1_, &AlsEngine::eig_a, AlsUpdate::Exact);
        ++*safeguard_count;
        before = objective(FactorPair(x, cur.w, cur.x_scale, cur.w_scale));
      } else {
        before = after;
      }
    }
    cur.x = std::move(x);
  }
  {
    const Matrix target_t = fill(cur).transpose();
    Matrix w = half_step(target_t, cur.w, cur.x, b_, lambda2_, &AlsEngine::eig_b, update_);
    if (guard) {
      const double after = objective(FactorPair(cur.x, w, cur.x_scale, cur.w_scale));
      if (!(after <= before)) {
        w = half_step(target_t, cur.w, cur.x, b_, lambda2_, &AlsEngine::eig_b, AlsUpdate::Exact);
        ++*safeguard_count;
      }
    }
    cur.w = std::move(w);
  }
  if (!cur.x.allFinite() || !cur.w.allFinite()) {
    throw Error(ErrorCode::NonFinite, "ALS update produced non-finite factors");
  }
  return cur;
}

FactorPair AlsEngine::step(const FactorPair& f) const { return checked_step(f, nullptr); }

InnerAlsResult AlsEngine::run(FactorPair f, int max_steps, double tol) const {
  InnerAlsResult out;
  double prev = objective(f);
  int* guard = safeguard_ ? &out.safeguard_steps : nullptr;
  for (int s = 1; s <= max_steps; ++s) {
    f = checked_step(f, guard);
    const double obj = objective(f);
    out.trace.push_back(obj);
    out.steps = s;
    const double change = std::abs(obj - prev);
    if (change <= tol * std::abs(prev) || (obj == 0.0 && prev == 0.0)) {
      out.converged = true;
      break;
    }
    prev = obj;
  }
  out.factors = std::move(f);
  return out;
}

}  // namespace detail

namespace {

void check_shapes(const DataMatrix& y, const FactorPair& f, Index a_dim, Index b_dim) {
  if (f.x.rows() != y.rows() || f.w.rows() != y.cols() || f.x.cols() != f.w.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "factor shapes do not match the data");
  }
  if (a_dim != y.rows() || b_dim != y.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "precision sizes do not match the data");
  }
}

}  // namespace

double factor_objective(const DataMatrix& y, const FactorPair& f, const Matrix& a, const Matrix& b, double lambda1,
                        double lambda2) {
  check_shapes(y, f, a.rows(), b.rows());
  return detail::AlsEngine(y, a, b, lambda1, lambda2, 1e-8, AlsUpdate::Exact, false).objective(f);
}

double lgmd_objective(const DataMatrix& y, const FactorPair& f, const PrecisionGraph& a, const PrecisionGraph& b,
                      const Hyperparams& h) {
  check_shapes(y, f, a.dim(), b.dim());
  const double k = static_cast<double>(f.rank());
  double value = factor_objective(y, f, a.theta(), b.theta(), h.lambda1, h.lambda2);
  value += 0.5 * h.lambda1 * (-k * a.log_det() + h.eta1 * a.off_diagonal_l1());
  value += 0.5 * h.lambda2 * (-k * b.log_det() + h.eta2 * b.off_diagonal_l1());
  return value;
}

FactorPair als_step(const DataMatrix& y, const FactorPair& f, const PrecisionGraph& a, const PrecisionGraph& b,
                    const Hyperparams& h) {
  check_shapes(y, f, a.dim(), b.dim());
  return detail::AlsEngine(y, a.theta(), b.theta(), h.lambda1, h.lambda2, h.epsilon, h.update, false).step(f);
}

InnerAlsResult inner_als(const DataMatrix& y, const FactorPair& f, const PrecisionGraph& a, const PrecisionGraph& b,
                         const Hyperparams& h) {
  check_shapes(y, f, a.dim(), b.dim());
  return detail::AlsEngine(y, a.theta(), b.theta(), h.lambda1, h.lambda2, h.epsilon, h.update, h.monotone_safeguard)
      .run(f, h.max_inner, h.tol_inner);
}

}  // namespace lgmd
