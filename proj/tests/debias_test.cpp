#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "drdb/debias.hpp"
#include "drdb/errors.hpp"
#include "drdb/stats.hpp"

using namespace drdb;

namespace {

NuisanceDraw constant_propensity(double e) {
  return {NuisanceDraw::Kind::propensity,
          [e](Eigen::Ref<const Eigen::VectorXd>) { return e; }};
}

NuisanceDraw constant_regression(double m) {
  return {NuisanceDraw::Kind::regression,
          [m](Eigen::Ref<const Eigen::VectorXd>) { return m; }};
}

Eigen::VectorXd vec1(double v) {
  Eigen::VectorXd x(1);
  x << v;
  return x;
}

ObservedData two_row_data(double y0, double y1) {
  Eigen::VectorXd y(2), t(2);
  Eigen::MatrixXd x(2, 1);
  y << y0, y1;
  t << 1, 1;
  x << 0.0, 0.0;
  return ObservedData(y, t, x);
}

// Independent oracle: two-pass mean/variance in extended precision.
TPosterior two_pass_reference(const std::vector<double>& w, double shift) {
  long double sum = 0.0L;
  for (double v : w) sum += v;
  const long double mean = sum / static_cast<long double>(w.size());
  long double ss = 0.0L;
  for (double v : w) ss += (v - mean) * (v - mean);
  const auto n = static_cast<long double>(w.size());
  TPosterior ref;
  ref.nu = static_cast<double>(n - 1.0L);
  ref.eta = static_cast<double>(mean + shift);
  ref.c2 = static_cast<double>(ss / (n * (n - 1.0L)));
  return ref;
}

}  // namespace

TEST_CASE("density ratio under randomized treatment is identically one") {
  const auto pair = density_ratio(constant_propensity(0.5), 0.5);
  CHECK(pair.r1(vec1(0.3)) == 1.0);
  CHECK(pair.r0(vec1(-2.0)) == 1.0);
}

TEST_CASE("density ratio arithmetic") {
  const auto pair = density_ratio(constant_propensity(0.25), 0.5);
  CHECK(pair.r1(vec1(0.0)) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(pair.r0(vec1(0.0)) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

  const auto clamped = density_ratio(constant_propensity(0.99), 0.5);
  CHECK(clamped.r1(vec1(0.0)) == doctest::Approx(0.5 / 0.99).epsilon(1e-15));

  CHECK_THROWS_AS(density_ratio(constant_propensity(0.5), 0.0), ConfigError);
}

TEST_CASE("weighted observables are ratio-scaled residuals") {
  const ObservedData data = two_row_data(3.0, 5.0);
  const ArmSubset arm{&data, {0, 1}, 1};

  const auto perfect = weighted_observables(arm, constant_regression(3.0),
                                            [](Eigen::Ref<const Eigen::VectorXd>) { return 1.0; });
  CHECK(perfect.values[0] == 0.0);

  const auto unit = weighted_observables(arm, constant_regression(2.0),
                                         [](Eigen::Ref<const Eigen::VectorXd>) { return 1.0; });
  CHECK(unit.values == std::vector<double>{1.0, 3.0});

  const auto doubled = weighted_observables(arm, constant_regression(2.0),
                                            [](Eigen::Ref<const Eigen::VectorXd>) { return 2.0; });
  CHECK(doubled.values == std::vector<double>{2.0, 6.0});
}

TEST_CASE("bias posterior closed form") {
  WeightedObservables w;
  w.arm = 1;

  w.values = {1.0, 2.0, 3.0};
  TPosterior post = bias_posterior(w);
  CHECK(post.nu == doctest::Approx(2.0));
  CHECK(post.eta == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(post.c2 == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  w.values = {0.0, 0.0, 0.0, 1.0};
  post = bias_posterior(w);
  CHECK(post.nu == doctest::Approx(3.0));
  CHECK(post.eta == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(post.c2 == doctest::Approx(0.0625).epsilon(1e-15));

  w.values = {4.2, 4.2, 4.2, 4.2};
  post = bias_posterior(w);
  CHECK(post.is_point_mass());
  CHECK(post.eta == 4.2);

  w.values = {1.0};
  CHECK_THROWS_AS(bias_posterior(w), TooFewObservationsError);
}

TEST_CASE("moments are flagged undefined at low degrees of freedom") {
  TPosterior low{2.0, 1.0, 0.5};
  CHECK(low.mean().has_value());
  CHECK(!low.variance().has_value());
  TPosterior lower{1.0, 1.0, 0.5};
  CHECK(!lower.mean().has_value());
  TPosterior fine{3.0, 1.0, 0.5};
  CHECK(fine.variance() == doctest::Approx(0.5 * 3.0).epsilon(1e-15));
  TPosterior point{1.0, 7.0, 0.0};
  CHECK(point.mean() == doctest::Approx(7.0));
  CHECK(point.variance() == doctest::Approx(0.0));
}

TEST_CASE("conditional posterior closed form") {
  TPosterior post = conditional_posterior({1.0, 2.0, 3.0}, 0.5);
  CHECK(post.nu == doctest::Approx(2.0));
  CHECK(post.eta == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(post.c2 == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  post = conditional_posterior({1.5, 1.5, 1.5}, 0.0);
  CHECK(post.is_point_mass());
  CHECK(post.eta == 1.5);
}

TEST_CASE("posterior parameters match a two-pass oracle on random samples") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> normal(5.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 49);
    std::vector<double> w(n);
    for (double& v : w) v = normal(rng);
    const TPosterior ref = two_pass_reference(w, 0.0);
    const TPosterior got = bias_posterior({w, 1});
    CHECK(got.nu == ref.nu);
    CHECK(got.eta == doctest::Approx(ref.eta).epsilon(1e-12));
    CHECK(got.c2 == doctest::Approx(ref.c2).epsilon(1e-12));
  }
}

TEST_CASE("posteriors are permutation invariant") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> w(25);
  for (double& v : w) v = normal(rng);
  const TPosterior base = bias_posterior({w, 0});
  for (int trial = 0; trial < 20; ++trial) {
    std::shuffle(w.begin(), w.end(), rng);
    const TPosterior perm = bias_posterior({w, 0});
    CHECK(perm.nu == base.nu);
    CHECK(perm.eta == doctest::Approx(base.eta).epsilon(1e-12));
    CHECK(perm.c2 == doctest::Approx(base.c2).epsilon(1e-12));
  }
}

TEST_CASE("bias posterior shift and scale equivariance") {
  std::vector<double> w{0.4, -1.2, 2.2, 0.9, -0.5};
  const TPosterior base = bias_posterior({w, 0});

  const double delta = 1.75;
  std::vector<double> shifted = w;
  for (double& v : shifted) v += delta;
  const TPosterior sh = bias_posterior({shifted, 0});
  CHECK(sh.nu == base.nu);
  CHECK(sh.eta == doctest::Approx(base.eta + delta).epsilon(1e-12));
  CHECK(sh.c2 == doctest::Approx(base.c2).epsilon(1e-12));

  const double a = 3.5;
  std::vector<double> scaled = w;
  for (double& v : scaled) v *= a;
  const TPosterior sc = bias_posterior({scaled, 0});
  CHECK(sc.eta == doctest::Approx(a * base.eta).epsilon(1e-12));
  CHECK(std::sqrt(sc.c2) ==
        doctest::Approx(a * std::sqrt(base.c2)).epsilon(1e-12));
}

TEST_CASE("conditional posterior location equivariance") {
  const std::vector<double> m{0.2, 1.4, -0.7, 0.9};
  const TPosterior base = conditional_posterior(m, 0.0);
  std::vector<double> shifted = m;
  for (double& v : shifted) v += 0.6;
  const TPosterior sh = conditional_posterior(shifted, 0.0);
  CHECK(sh.eta == doctest::Approx(base.eta + 0.6).epsilon(1e-12));
  CHECK(sh.c2 == doctest::Approx(base.c2).epsilon(1e-12));
}

TEST_CASE("sample_t returns the location for a point mass") {
  std::mt19937_64 rng(1);
  const TPosterior point{5.0, 2.0, 0.0};
  for (int i = 0; i < 10; ++i) CHECK(sample_t(point, rng) == 2.0);
}

TEST_CASE("sample_t approaches the Gaussian at large degrees of freedom") {
  std::mt19937_64 rng(77);
  const TPosterior post{1e6, 1.5, 4.0};
  const int m = 10000;
  std::vector<double> draws(m);
  for (double& d : draws) d = sample_t(post, rng);
  const double mean = stats::mean(draws);
  const double sd = std::sqrt(stats::sample_variance(draws));
  CHECK(std::abs(mean - 1.5) < 4.0 * 2.0 / std::sqrt(m));
  // SE of the sample SD of a Gaussian is roughly sd / sqrt(2m).
  CHECK(std::abs(sd - 2.0) < 4.0 * 2.0 / std::sqrt(2.0 * m));
}

TEST_CASE("sample_t is symmetric about the location") {
  std::mt19937_64 rng(55);
  const TPosterior post{3.0, 0.0, 1.0};
  const int m = 10000;
  std::vector<double> draws(m);
  for (double& d : draws) d = sample_t(post, rng);
  CHECK(std::abs(stats::quantile(draws, 0.5)) < 0.05);
}
