#include "signrec/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace signrec::nn {

double finite_diff_check(const ScalarFunction& f, std::vector<double> x, double step,
                         std::span<const std::size_t> coordinates) {
  std::vector<double> analytic(x.size(), 0.0);
  f(x, &analytic);
  double worst = 0.0;
  for (std::size_t i : coordinates) {
    const double saved = x[i];
    x[i] = saved + step;
    const double up = f(x, nullptr);
    x[i] = saved - step;
    const double down = f(x, nullptr);
    x[i] = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

double finite_diff_check(const ScalarFunction& f, std::vector<double> x, double step) {
  std::vector<std::size_t> all(x.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return finite_diff_check(f, std::move(x), step, all);
}

}  // namespace signrec::nn
