#pragma once

#include <optional>

#include "lgmd/decomposition.hpp"

namespace lgmd::detail {

/// ALS on 1/2 ||P_O(Y - X W^T)||^2 + l1/2 tr(X^T A X) + l2/2 tr(W^T B W)
/// for fixed symmetric PSD regularizers A (n x n) and B (p x p).
class AlsEngine {
 public:
  AlsEngine(const DataMatrix& y, Matrix a, Matrix b, double lambda1, double lambda2, double epsilon,
            AlsUpdate update, bool safeguard);

  double objective(const FactorPair& f) const;
  FactorPair step(const FactorPair& f) const;
  InnerAlsResult run(FactorPair f, int max_steps, double tol) const;

 private:
  struct Eigen2 {
    Matrix vectors;
    Vector values;
  };

  // Half step for the left factor: target ~ left * right^T, left regularized by reg.
  Matrix half_step(const Matrix& target, const Matrix& left, const Matrix& right, const Matrix& reg, double lambda,
                   const Eigen2& (AlsEngine::*eig)() const, AlsUpdate mode) const;
  Matrix exact_half(const Matrix& target, const Matrix& right, double lambda, const Eigen2& eig) const;
  Matrix fixed_point_half(const Matrix& target, const Matrix& left, const Matrix& right, const Matrix& reg,
                          double lambda) const;
  Matrix fill(const FactorPair& f) const;
  FactorPair checked_step(const FactorPair& f, int* safeguard_count) const;

  const Eigen2& eig_a() const;
  const Eigen2& eig_b() const;

  const DataMatrix& y_;
  Matrix a_;
  Matrix b_;
  double lambda1_;
  double lambda2_;
  double epsilon_;
  AlsUpdate update_;
  bool safeguard_;
  mutable std::optional<Eigen2> eig_a_;
  mutable std::optional<Eigen2> eig_b_;
};

}  // namespace lgmd::detail
