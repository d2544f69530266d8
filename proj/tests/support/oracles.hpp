#pragma once

#include "coneflow/types.hpp"

#include <cmath>

namespace coneflow::testing {

/// exp(A) by scaling and squaring of a degree-20 Taylor polynomial.
inline Mat expm(const Mat& A) {
  const double norm = A.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Mat B = A / std::ldexp(1.0, squarings);
  Mat term = Mat::Identity(A.rows(), A.cols());
  Mat sum = term;
  for (int k = 1; k <= 20; ++k) {
    term = term * B / static_cast<double>(k);
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

}  // namespace coneflow::testing
