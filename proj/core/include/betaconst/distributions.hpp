#pragma once

#include <functional>
#include <span>

namespace betaconst {

/// Standard normal CDF.
double normal_cdf(double x);

/// P(Z > x) for standard normal Z, computed without cancellation in the tail.
double normal_upper_tail(double x);

/// Inverse standard normal CDF; p must lie in (0, 1).
double normal_quantile(double p);

/// CDF of the chi-square distribution with one degree of freedom.
double chi2_1_cdf(double x);

/// Two-sided Kolmogorov-Smirnov distance sup_x |F_n(x) - F(x)|.
double ks_distance(std::span<const double> sample,
                   const std::function<double(double)>& cdf);

/// Two-sample Kolmogorov-Smirnov distance between empirical CDFs.
double ks_distance(std::span<const double> a, std::span<const double> b);

}  // namespace betaconst
