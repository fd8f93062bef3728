#pragma once

#include "lgmd/decomposition.hpp"

namespace lgmd::detail {

/// X = U_k, W = V_k S_k so that X W^T is the rank-k SVD product. Masked data
/// is zero-filled and rescaled by the inverse observed fraction first.
FactorPair svd_initialization(const DataMatrix& y, Index k);

void append_segment(FitResult& fit, const InnerAlsResult& inner, double offset);

}  // namespace lgmd::detail
