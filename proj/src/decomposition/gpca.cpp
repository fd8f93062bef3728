#include "lgmd/decomposition.hpp"

namespace lgmd {

// With Q = A^-1 and R = B^-1: Q^1/2 = A^-1/2 and Q^-1/2 = A^1/2.
GpcaResult gpca_postprocess(const Matrix& y, const PrecisionGraph& a, const PrecisionGraph& b, Index k) {
  if (a.dim() != y.rows() || b.dim() != y.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "precision sizes do not match the data");
  }
  const Matrix a_half = sqrt_spd(a.theta());
  const Matrix b_half = sqrt_spd(b.theta());
  const Matrix a_inv_half = inv_sqrt_spd(a.theta());
  const Matrix b_inv_half = inv_sqrt_spd(b.theta());
  const TruncatedSvd svd = truncated_svd(a_inv_half * y * b_inv_half, k);
  return GpcaResult{a_half * svd.u, svd.s, b_half * svd.v};
}

GpcaResult gpca_postprocess(const DataMatrix& y, const PrecisionGraph& a, const PrecisionGraph& b, Index k) {
  if (y.has_mask()) throw Error(ErrorCode::InvalidArgument, "GPCA needs a fully observed matrix");
  return gpca_postprocess(y.values(), a, b, k);
}

}  // namespace lgmd
