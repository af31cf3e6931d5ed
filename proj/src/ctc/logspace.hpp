#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "signrec/nn/tensor.hpp"

namespace signrec::ctc::detail {

inline double log_add(double a, double b) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// Row-wise log-softmax of the first `frames` rows, in double precision.
template <typename Real>
std::vector<double> log_softmax(const nn::Tensor<Real>& scores, std::size_t frames) {
  const std::size_t K = scores.dim(1);
  std::vector<double> out(frames * K);
  for (std::size_t t = 0; t < frames; ++t) {
    const Real* x = scores.row(t);
    double m = static_cast<double>(x[0]);
    for (std::size_t k = 1; k < K; ++k) m = std::max(m, static_cast<double>(x[k]));
    double s = 0.0;
    for (std::size_t k = 0; k < K; ++k) s += std::exp(static_cast<double>(x[k]) - m);
    const double lse = m + std::log(s);
    for (std::size_t k = 0; k < K; ++k) out[t * K + k] = static_cast<double>(x[k]) - lse;
  }
  return out;
}

}  // namespace signrec::ctc::detail
