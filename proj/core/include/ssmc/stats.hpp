#pragma once

#include <cstddef>
#include <span>

namespace ssmc {

struct Interval {
  double low = 0.0;
  double high = 1.0;
};

/// Wilson score interval for a binomial proportion; z = 1.96 gives 95%.
Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

double mean(std::span<const double> xs);

/// Binomial standard deviation of a frequency estimate, sqrt(p (1-p) / n).
double binomial_sd(double p, std::size_t trials);

}  // namespace ssmc
