#include <doctest.h>

#include <cmath>
#include <random>

#include "drdb/errors.hpp"
#include "drdb/estimands.hpp"
#include "drdb/estimate.hpp"
#include "drdb/stats.hpp"

using namespace drdb;

namespace {

NuisanceDraw constant_propensity(double e) {
  return {NuisanceDraw::Kind::propensity,
          [e](Eigen::Ref<const Eigen::VectorXd>) { return e; }};
}

Eigen::VectorXd vec1(double v) {
  Eigen::VectorXd x(1);
  x << v;
  return x;
}

// Dataset whose treatment is exactly balanced within every fold of the plan,
// so the test-fold treated share equals the constant true propensity 0.5.
ObservedData balanced_fold_data(int n, int k, std::uint64_t plan_seed,
                                std::uint64_t data_seed) {
  const FoldPlan plan = split_folds(n, k, plan_seed);
  std::mt19937_64 rng(data_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd y(n), t(n);
  Eigen::MatrixXd x(n, 2);
  for (int fold = 1; fold <= k; ++fold) {
    const auto idx = plan.test_indices(fold);
    for (std::size_t j = 0; j < idx.size(); ++j)
      t(idx[j]) = j < idx.size() / 2 ? 1.0 : 0.0;
  }
  for (int i = 0; i < n; ++i) {
    x(i, 0) = normal(rng);
    x(i, 1) = normal(rng);
    y(i) = (t(i) == 1.0 ? 2.0 : 0.0) + x(i, 0) + 0.3 * normal(rng);
  }
  return ObservedData(std::move(y), std::move(t), std::move(x));
}

}  // namespace

TEST_CASE("estimand labels parse and print") {
  CHECK(parse_estimand("ate").kind == Estimand::ate);
  CHECK(parse_estimand("att").kind == Estimand::att);
  CHECK(parse_estimand("mu0").kind == Estimand::mu0);
  const EstimandSpec sg = parse_estimand("subgroup:x2>0.5");
  CHECK(sg.kind == Estimand::subgroup);
  CHECK(sg.rule->covariate == 2);
  CHECK(sg.rule->threshold == 0.5);
  CHECK(sg.rule->greater);
  const EstimandSpec le = parse_estimand("subgroup:x1<=-1.25");
  CHECK(!le.rule->greater);
  CHECK(le.rule->threshold == -1.25);
  CHECK(le.label() == "subgroup:x1<=-1.25");
  CHECK_THROWS_AS(parse_estimand("atey"), ConfigError);
  CHECK_THROWS_AS(parse_estimand("subgroup:x>0"), ConfigError);
}

TEST_CASE("ATT weights under constant propensity collapse to ATE weights") {
  const double c = 0.42;
  const auto e = constant_propensity(c);
  const auto att = build_weights(EstimandSpec::att(), e, c);
  const auto ate = build_weights(EstimandSpec::ate(), e, c);
  const Eigen::VectorXd x = vec1(1.7);
  CHECK(att.w(x) == 1.0);
  CHECK(att.r1(x) == 1.0);
  CHECK(att.r0(x) == 1.0);
  CHECK(ate.r1(x) == att.r1(x));
  CHECK(ate.r0(x) == att.r0(x));
  CHECK(ate.w(x) == att.w(x));
}

TEST_CASE("ATT weight arithmetic") {
  const auto tw = build_weights(EstimandSpec::att(), constant_propensity(0.8), 0.5);
  const Eigen::VectorXd x = vec1(0.0);
  CHECK(tw.w(x) == doctest::Approx(1.6).epsilon(1e-15));
  CHECK(tw.r1(x) == 1.0);
  CHECK(tw.r0(x) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(tw.pA_hat == doctest::Approx(0.5));
}

TEST_CASE("ATC weight arithmetic mirrors the ATT") {
  const auto tw = build_weights(EstimandSpec::atc(), constant_propensity(0.8), 0.5);
  const Eigen::VectorXd x = vec1(0.0);
  CHECK(tw.w(x) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(tw.r1(x) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(tw.r0(x) == 1.0);
}

TEST_CASE("subgroup weights vanish off the subgroup") {
  SubgroupRule rule;
  rule.covariate = 1;
  rule.threshold = 0.0;
  rule.greater = true;
  const auto tw = build_weights(EstimandSpec::subgroup(rule),
                                constant_propensity(0.5), 0.5, 0.5);
  CHECK(tw.w(vec1(1.0)) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(tw.w(vec1(-1.0)) == 0.0);
  CHECK(tw.r1(vec1(-1.0)) == 0.0);
  CHECK(tw.r0(vec1(-1.0)) == 0.0);
  CHECK(tw.r1(vec1(0.5)) == doctest::Approx(0.5 / (0.5 * 0.5)).epsilon(1e-15));

  CHECK_THROWS_AS(build_weights(EstimandSpec::subgroup(rule),
                                constant_propensity(0.5), 0.5, 0.0),
                  EmptySubgroupError);
}

TEST_CASE("subgroup share is the indicator mean") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int n = 4000;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd t(n);
  Eigen::MatrixXd x(n, 1);
  for (int i = 0; i < n; ++i) {
    t(i) = i % 2;
    x(i, 0) = normal(rng);
  }
  const ObservedData data(y, t, x);
  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  SubgroupRule rule{1, 0.0, true};
  const double share = subgroup_share(rule, data, all);
  CHECK(std::abs(share - 0.5) < 4.0 * 0.5 / std::sqrt(n));
}

TEST_CASE("mean ATT weight over the covariate law is near one") {
  std::mt19937_64 rng(19);
  std::normal_distribution<double> normal(0.0, 1.0);
  NuisanceDraw e{NuisanceDraw::Kind::propensity,
                 [](Eigen::Ref<const Eigen::VectorXd> x) {
                   return stats::logistic(0.6 * x(0));
                 }};
  // With p1_hat equal to E[e(X)] = 0.5 by symmetry, E[w] = 1.
  const auto tw = build_weights(EstimandSpec::att(), e, 0.5);
  const int m = 20000;
  double acc = 0.0;
  for (int i = 0; i < m; ++i) acc += tw.w(vec1(normal(rng)));
  const double mean = acc / m;
  CHECK(std::abs(mean - 1.0) < 0.02);
}

TEST_CASE("an ATE spec reproduces the base pipeline bit for bit") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int n = 240;
  Eigen::VectorXd y(n), t(n);
  Eigen::MatrixXd x(n, 2);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = normal(rng);
    x(i, 1) = normal(rng);
    t(i) = unif(rng) < stats::logistic(0.3 * x(i, 0)) ? 1.0 : 0.0;
    y(i) = 1.0 + 2.0 * t(i) + x(i, 0) + 0.5 * normal(rng);
  }
  const ObservedData data(y, t, x);
  RunConfig cfg;
  cfg.seed = 808;
  cfg.m_draws = 300;
  const PosteriorSummary base = estimate(data, cfg);
  const PosteriorSummary weighted = estimate_weighted(data, EstimandSpec::ate(), cfg);
  CHECK(base.mean == weighted.mean);
  CHECK(base.cf_mean == weighted.cf_mean);
  CHECK(base.draws == weighted.draws);
}

TEST_CASE("ATT and ATE closed forms agree under fold-balanced randomization") {
  const int n = 200, k = 2;
  RunConfig cfg;
  cfg.k = k;
  cfg.seed = 31337;
  cfg.m_draws = 200;
  OracleNuisance truth;
  truth.m1 = [](Eigen::Ref<const Eigen::VectorXd> x) { return 2.0 + x(0); };
  truth.m0 = [](Eigen::Ref<const Eigen::VectorXd> x) { return x(0); };
  truth.e = [](Eigen::Ref<const Eigen::VectorXd>) { return 0.5; };
  cfg.nuisance.method = NuisanceConfig::Method::oracle;
  cfg.nuisance.oracle = &truth;
  cfg.nuisance.p1_source = NuisanceConfig::P1Source::test;

  const std::uint64_t plan_seed = derive_seed(cfg.seed, {rng_domain::kFoldSplit});
  const ObservedData data = balanced_fold_data(n, k, plan_seed, 400);

  const PosteriorSummary ate = estimate(data, cfg);
  const PosteriorSummary att = estimate_weighted(data, EstimandSpec::att(), cfg);
  const PosteriorSummary atc = estimate_weighted(data, EstimandSpec::atc(), cfg);
  CHECK(att.cf_mean == doctest::Approx(ate.cf_mean).epsilon(1e-10));
  CHECK(atc.cf_mean == doctest::Approx(ate.cf_mean).epsilon(1e-10));
  for (int f = 0; f < k; ++f)
    CHECK(att.per_fold[f].p1_hat == doctest::Approx(0.5));
}

TEST_CASE("constant-effect data makes the ATT agree with the ATE") {
  std::mt19937_64 rng(47);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int n = 800;
  Eigen::VectorXd y(n), t(n);
  Eigen::MatrixXd x(n, 2);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = normal(rng);
    x(i, 1) = normal(rng);
    const double e = stats::logistic(0.4 * x(i, 0) - 0.1);
    t(i) = unif(rng) < e ? 1.0 : 0.0;
    const double m0 = 1.0 + 0.8 * x(i, 0) - 0.4 * x(i, 1);
    y(i) = m0 + 2.0 * t(i) + 0.6 * normal(rng);
  }
  const ObservedData data(y, t, x);
  RunConfig cfg;
  cfg.seed = 5150;
  const PosteriorSummary ate = estimate(data, cfg);
  const PosteriorSummary att = estimate_weighted(data, EstimandSpec::att(), cfg);
  REQUIRE(ate.variance.has_value());
  const double sd = std::sqrt(*ate.variance);
  CHECK(std::abs(att.mean - ate.mean) < 5.0 * sd);
}

TEST_CASE("subgroup runs target the thresholded subpopulation") {
  std::mt19937_64 rng(53);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int n = 1200;
  Eigen::VectorXd y(n), t(n);
  Eigen::MatrixXd x(n, 1);
  // Effect 3 above the threshold, 1 below: the subgroup effect is 3.
  for (int i = 0; i < n; ++i) {
    x(i, 0) = normal(rng);
    t(i) = unif(rng) < 0.5 ? 1.0 : 0.0;
    const double effect = x(i, 0) > 0.0 ? 3.0 : 1.0;
    y(i) = 0.5 * x(i, 0) + effect * t(i) + 0.4 * normal(rng);
  }
  const ObservedData data(y, t, x);
  RunConfig cfg;
  cfg.seed = 6021;
  const EstimandSpec spec = parse_estimand("subgroup:x1>0");
  const PosteriorSummary s = estimate_weighted(data, spec, cfg);
  REQUIRE(s.variance.has_value());
  CHECK(std::abs(s.mean - 3.0) < 5.0 * std::sqrt(*s.variance));

  const EstimandSpec empty = parse_estimand("subgroup:x1>1000");
  CHECK_THROWS_AS(estimate_weighted(data, empty, cfg), Error);
}
