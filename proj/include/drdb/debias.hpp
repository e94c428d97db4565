#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "drdb/data.hpp"
#include "drdb/nuisance.hpp"

namespace drdb {

/// Location-scale Student-t law t_nu(eta, c2). c2 = 0 encodes a point mass at
/// eta, which arises legitimately from constant nuisance draws. Moment
/// queries return empty instead of throwing when the moment does not exist.
struct TPosterior {
  double nu = 1.0;
  double eta = 0.0;
  double c2 = 0.0;

  bool is_point_mass() const { return c2 == 0.0; }
  std::optional<double> mean() const {
    if (is_point_mass() || nu > 1.0) return eta;
    return std::nullopt;
  }
  std::optional<double> variance() const {
    if (is_point_mass()) return 0.0;
    if (nu > 2.0) return c2 * nu / (nu - 2.0);
    return std::nullopt;
  }
};

/// Density-ratio pair built from one propensity draw and one p1 estimate:
/// r1(x) = p1/e(x) retargets treated residuals at the whole population,
/// r0(x) = (1-p1)/(1-e(x)) does the same for controls.
struct DensityRatioPair {
  std::function<double(Eigen::Ref<const Eigen::VectorXd>)> r1, r0;
  double p1_hat = 0.5;
};

/// Weighted observables W_i = r(X_i) * (Y_i - m(X_i)) over one treatment arm
/// of a test fold, in row order.
struct WeightedObservables {
  std::vector<double> values;
  int arm = 0;
};

DensityRatioPair density_ratio(const NuisanceDraw& e_draw, double p1_hat);

WeightedObservables weighted_observables(
    const ArmSubset& test_arm, const NuisanceDraw& m_draw,
    const std::function<double(Eigen::Ref<const Eigen::VectorXd>)>& ratio);

/// Bias posterior of the Normal working model with improper prior:
/// t_{n-1}(mean W, sum (W - mean)^2 / (n (n-1))). All-equal samples collapse
/// to a point mass. Requires at least two observations.
TPosterior bias_posterior(const WeightedObservables& w);

/// Conditional target posterior given a bias value b:
/// t_{n-1}(mean m + b, sum (m - mean)^2 / (n (n-1))).
TPosterior conditional_posterior(const std::vector<double>& m_values, double b);

/// One draw eta + c * T_nu with T_nu standard Student-t (normal over
/// root-chi-square); a point mass returns eta.
double sample_t(const TPosterior& post, std::mt19937_64& rng);

}  // namespace drdb
