#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <string>

#include "drdb/data.hpp"
#include "drdb/nuisance.hpp"

namespace drdb {

enum class Estimand { ate, mu1, mu0, att, atc, subgroup };

/// Covariate-threshold subgroup rule x_j > delta (or x_j <= delta).
struct SubgroupRule {
  int covariate = 1;  // 1-based index, matching the x1..xp column names
  double threshold = 0.0;
  bool greater = true;

  bool contains(Eigen::Ref<const Eigen::VectorXd> x) const {
    const double v = x(covariate - 1);
    return greater ? v > threshold : v <= threshold;
  }
};

struct EstimandSpec {
  Estimand kind = Estimand::ate;
  std::optional<SubgroupRule> rule;  // present iff kind == subgroup

  static EstimandSpec ate() { return {Estimand::ate, std::nullopt}; }
  static EstimandSpec att() { return {Estimand::att, std::nullopt}; }
  static EstimandSpec atc() { return {Estimand::atc, std::nullopt}; }
  static EstimandSpec mu1() { return {Estimand::mu1, std::nullopt}; }
  static EstimandSpec mu0() { return {Estimand::mu0, std::nullopt}; }
  static EstimandSpec subgroup(SubgroupRule r) {
    return {Estimand::subgroup, r};
  }

  bool one_arm() const { return kind == Estimand::mu1 || kind == Estimand::mu0; }
  std::string label() const;
};

/// Parses "ate", "att", "atc", "mu1", "mu0", or "subgroup:xJ>DELTA" /
/// "subgroup:xJ<=DELTA". Throws ConfigError on anything else.
EstimandSpec parse_estimand(const std::string& text);

/// Retargeting weights for a weighted estimand: w(x) multiplies the
/// conditional-posterior observables, r1/r0 reweight each arm's residuals.
struct TargetWeights {
  std::function<double(Eigen::Ref<const Eigen::VectorXd>)> w, r1, r0;
  double pA_hat = 1.0;  // estimate of P(subpopulation)
};

/// Builds the weights for the requested estimand from one propensity draw and
/// the point estimates p1_hat (and, for subgroups, the subgroup share
/// pA_hat). ATE weights are the plain density-ratio pair with w = 1.
TargetWeights build_weights(const EstimandSpec& spec,
                            const NuisanceDraw& e_draw, double p1_hat,
                            std::optional<double> pA_hat = std::nullopt);

/// Share of rows satisfying the subgroup rule; used as P-hat(A).
double subgroup_share(const SubgroupRule& rule, const ObservedData& data,
                      const std::vector<int>& rows);

}  // namespace drdb
