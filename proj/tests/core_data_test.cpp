#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <string>

#include "drdb/csv.hpp"
#include "drdb/data.hpp"
#include "drdb/errors.hpp"

using namespace drdb;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const std::string path = "/tmp/drdb_test_" + name;
  std::ofstream f(path);
  f << content;
  return path;
}

}  // namespace

TEST_CASE("observed data validates its invariants") {
  Eigen::VectorXd y(3), t(3);
  Eigen::MatrixXd x(3, 1);
  y << 1.0, 2.0, 3.0;
  t << 1.0, 0.0, 1.0;
  x << 0.1, 0.2, 0.3;
  CHECK_NOTHROW(ObservedData(y, t, x));

  Eigen::VectorXd bad_t = t;
  bad_t(1) = 2.0;
  CHECK_THROWS_AS(ObservedData(y, bad_t, x), NonBinaryTreatmentError);

  Eigen::VectorXd bad_y = y;
  bad_y(2) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(ObservedData(bad_y, t, x), NonFiniteValueError);

  Eigen::MatrixXd bad_x = x;
  bad_x(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(ObservedData(y, t, bad_x), NonFiniteValueError);
}

TEST_CASE("load_csv parses a small file") {
  const auto path = write_temp("small.csv", "y,t,x1\n1.5,1,0.2\n2.5,0,-0.1\n0.5,1,0.7\n");
  const ObservedData data = load_csv(path);
  CHECK(data.n() == 3);
  CHECK(data.p() == 1);
  CHECK(data.y(1) == doctest::Approx(2.5));
  CHECK(data.t(2) == 1);
  CHECK(data.x()(2, 0) == doctest::Approx(0.7));
  std::remove(path.c_str());
}

TEST_CASE("load_csv reports a non-binary treatment with its row") {
  std::string content = "y,t,x1\n";
  for (int i = 1; i <= 4; ++i) content += "1.0,1,0.0\n";
  content += "1.0,2,0.0\n";  // row 5
  const auto path = write_temp("badt.csv", content);
  try {
    load_csv(path);
    FAIL("expected NonBinaryTreatment");
  } catch (const NonBinaryTreatmentError& e) {
    CHECK(std::string(e.what()).find("row 5") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("load_csv requires the named columns") {
  const auto path = write_temp("missing.csv", "y,x1\n1.0,0.0\n");
  try {
    load_csv(path);
    FAIL("expected MissingColumn");
  } catch (const MissingColumnError& e) {
    CHECK(std::string(e.what()) == "MissingColumn: t");
  }
  std::remove(path.c_str());

  const auto gap = write_temp("gap.csv", "y,t,x1,x3\n1.0,1,0.0,0.0\n");
  CHECK_THROWS_AS(load_csv(gap), MissingColumnError);
  std::remove(gap.c_str());
}

TEST_CASE("load_csv handles a nine-covariate table of realistic size") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::string content = "y,t";
  for (int j = 1; j <= 9; ++j) content += ",x" + std::to_string(j);
  content += "\n";
  for (int i = 0; i < 1566; ++i) {
    content += std::to_string(normal(rng)) + "," + std::to_string(i % 2);
    for (int j = 0; j < 9; ++j) content += "," + std::to_string(normal(rng));
    content += "\n";
  }
  const auto path = write_temp("wide.csv", content);
  const ObservedData data = load_csv(path);
  CHECK(data.n() == 1566);
  CHECK(data.p() == 9);
  std::remove(path.c_str());
}

TEST_CASE("split_folds divides evenly when possible") {
  const FoldPlan plan = split_folds(10, 5, 1);
  std::set<int> seen;
  for (int fold = 1; fold <= 5; ++fold) {
    const auto idx = plan.test_indices(fold);
    CHECK(idx.size() == 2);
    seen.insert(idx.begin(), idx.end());
  }
  CHECK(seen.size() == 10);
}

TEST_CASE("split_folds at the simulation scale") {
  const FoldPlan plan = split_folds(1000, 5, 7);
  for (int fold = 1; fold <= 5; ++fold)
    CHECK(plan.test_indices(fold).size() == 200);
}

TEST_CASE("split_folds distributes the remainder one per fold") {
  const FoldPlan plan = split_folds(11, 5, 3);
  std::vector<std::size_t> sizes;
  for (int fold = 1; fold <= 5; ++fold)
    sizes.push_back(plan.test_indices(fold).size());
  CHECK(sizes == std::vector<std::size_t>{3, 2, 2, 2, 2});
}

TEST_CASE("split_folds rejects undersized inputs") {
  CHECK_THROWS_AS(split_folds(19, 5, 0), TooFewRowsError);
  CHECK_THROWS_AS(split_folds(100, 1, 0), ConfigError);
}

TEST_CASE("fold plans partition the rows and rebuild identically") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 2 + static_cast<int>(rng() % 7);
    const int n = 4 * k + static_cast<int>(rng() % 200);
    const std::uint64_t seed = rng();
    const FoldPlan plan = split_folds(n, k, seed);

    std::vector<int> counts(k + 1, 0);
    for (int i = 0; i < n; ++i) {
      const int a = plan.assignment(i);
      REQUIRE(a >= 1);
      REQUIRE(a <= k);
      ++counts[a];
    }
    int lo = n, hi = 0;
    for (int fold = 1; fold <= k; ++fold) {
      lo = std::min(lo, counts[fold]);
      hi = std::max(hi, counts[fold]);
    }
    CHECK(hi - lo <= 1);

    const FoldPlan again = split_folds(n, k, seed);
    CHECK(again.assignments() == plan.assignments());
  }
}

TEST_CASE("arm_subset filters by treatment") {
  Eigen::VectorXd y(3), t(3);
  Eigen::MatrixXd x(3, 1);
  y << 1, 2, 3;
  t << 1, 0, 1;
  x << 0, 0, 0;
  const ObservedData data(y, t, x);
  const auto treated = arm_subset(data, {0, 1, 2}, 1);
  CHECK(treated.indices == std::vector<int>{0, 2});

  CHECK_THROWS_AS(arm_subset(data, {1}, 1), EmptyArmError);
}

TEST_CASE("arm_subset respects the index restriction") {
  Eigen::VectorXd y(4), t(4);
  Eigen::MatrixXd x(4, 1);
  y << 1, 2, 3, 4;
  t << 1, 1, 0, 0;
  x << 0, 0, 0, 0;
  const ObservedData data(y, t, x);
  const auto controls = arm_subset(data, {1, 2}, 0);
  CHECK(controls.indices == std::vector<int>{2});
}

TEST_CASE("arm subsets partition any index set") {
  std::mt19937_64 rng(5);
  Eigen::VectorXd y(50), t(50);
  Eigen::MatrixXd x(50, 2);
  for (int i = 0; i < 50; ++i) {
    y(i) = static_cast<double>(i);
    t(i) = static_cast<double>(rng() % 2);
    x(i, 0) = 0.0;
    x(i, 1) = 1.0;
  }
  t(0) = 1.0;
  t(1) = 0.0;  // both arms nonempty
  const ObservedData data(y, t, x);
  std::vector<int> all(50);
  std::iota(all.begin(), all.end(), 0);
  const auto a1 = arm_subset(data, all, 1);
  const auto a0 = arm_subset(data, all, 0);
  std::set<int> u(a1.indices.begin(), a1.indices.end());
  for (int i : a0.indices) CHECK(u.insert(i).second);
  CHECK(u.size() == 50);
}
