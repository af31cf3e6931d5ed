#pragma once

#include <functional>
#include <span>
#include <vector>

namespace signrec::nn {

// A scalar function of a flat parameter vector. When `grad` is non-null the
// closure also writes the analytic gradient into it (same length as x).
using ScalarFunction = std::function<double(std::span<const double> x, std::vector<double>* grad)>;

// Compares the analytic gradient of f at x against central differences with
// the given step. Returns the largest per-coordinate relative error
// |a - n| / max(1, |a|, |n|).
double finite_diff_check(const ScalarFunction& f, std::vector<double> x, double step = 1e-5);

// Same comparison but only over the listed coordinates.
double finite_diff_check(const ScalarFunction& f, std::vector<double> x, double step,
                         std::span<const std::size_t> coordinates);

}  // namespace signrec::nn
