#include "ssmc/stats.hpp"

#include <cmath>
#include <numeric>

#include "ssmc/common.hpp"

namespace ssmc {

Interval wilson_interval(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  if (successes > trials) throw InvalidArgument("wilson_interval: successes exceed trials");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
  const double half = z / (1 + z2 / n) * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n));
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double binomial_sd(double p, std::size_t trials) {
  if (trials == 0) throw InvalidArgument("binomial_sd: no trials");
  return std::sqrt(p * (1 - p) / static_cast<double>(trials));
}

}  // namespace ssmc
