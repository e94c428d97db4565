#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace drdb::stats {

double mean(std::span<const double> v);

// Unbiased sample variance (n - 1 denominator); requires v.size() >= 2.
double sample_variance(std::span<const double> v);

// Standard normal quantile Phi^{-1}(p), p in (0, 1). Acklam's rational
// approximation refined with one Halley step; absolute error below 1e-13.
double normal_quantile(double p);

// Type-7 (linear interpolation) quantile of an unsorted sample, the R
// default. p in [0, 1]; requires a nonempty sample.
double quantile(std::vector<double> v, double p);

// Quantile of an already ascending-sorted sample.
double quantile_sorted(std::span<const double> sorted, double p);

double logistic(double z);

}  // namespace drdb::stats
