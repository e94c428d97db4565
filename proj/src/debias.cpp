#include "drdb/debias.hpp"

#include <cmath>
#include <string>

#include "drdb/errors.hpp"

namespace drdb {

namespace {

// Shared closed form of Propositions behind bias_posterior and
// conditional_posterior: t_{n-1}(mean + shift, ss / (n (n-1))).
TPosterior t_from_sample(const std::vector<double>& values, double shift) {
  const auto n = static_cast<double>(values.size());
  if (values.size() < 2)
    throw TooFewObservationsError("posterior needs at least 2 observations, got " +
                                  std::to_string(values.size()));
  double sum = 0.0;
  for (double v : values) sum += v;
  const double center = sum / n;
  double ss = 0.0;
  for (double v : values) {
    const double d = v - center;
    ss += d * d;
  }
  TPosterior post;
  post.nu = n - 1.0;
  post.eta = center + shift;
  post.c2 = ss / (n * (n - 1.0));
  return post;
}

}  // namespace

DensityRatioPair density_ratio(const NuisanceDraw& e_draw, double p1_hat) {
  if (!(p1_hat > 0.0 && p1_hat < 1.0))
    throw ConfigError("p1_hat must lie in (0, 1)");
  DensityRatioPair pair;
  pair.p1_hat = p1_hat;
  auto e = e_draw.evaluate;
  pair.r1 = [e, p1_hat](Eigen::Ref<const Eigen::VectorXd> x) {
    return p1_hat / e(x);
  };
  pair.r0 = [e, p1_hat](Eigen::Ref<const Eigen::VectorXd> x) {
    return (1.0 - p1_hat) / (1.0 - e(x));
  };
  return pair;
}

WeightedObservables weighted_observables(
    const ArmSubset& test_arm, const NuisanceDraw& m_draw,
    const std::function<double(Eigen::Ref<const Eigen::VectorXd>)>& ratio) {
  if (test_arm.size() == 0) throw EmptyArmError(test_arm.arm);
  WeightedObservables out;
  out.arm = test_arm.arm;
  out.values.reserve(test_arm.indices.size());
  for (int j = 0; j < test_arm.size(); ++j) {
    const Eigen::VectorXd x = test_arm.x_row(j);
    out.values.push_back(ratio(x) * (test_arm.y(j) - m_draw(x)));
  }
  return out;
}

TPosterior bias_posterior(const WeightedObservables& w) {
  return t_from_sample(w.values, 0.0);
}

TPosterior conditional_posterior(const std::vector<double>& m_values,
                                 double b) {
  return t_from_sample(m_values, b);
}

double sample_t(const TPosterior& post, std::mt19937_64& rng) {
  if (post.is_point_mass()) return post.eta;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::gamma_distribution<double> gamma(post.nu / 2.0, 2.0);  // chi-square
  const double z = normal(rng);
  const double v = gamma(rng);
  return post.eta + std::sqrt(post.c2) * z / std::sqrt(v / post.nu);
}

}  // namespace drdb
