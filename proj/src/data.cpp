#include "drdb/data.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "drdb/errors.hpp"
#include "drdb/rng.hpp"

namespace drdb {

ObservedData::ObservedData(Eigen::VectorXd y, Eigen::VectorXd t,
                           Eigen::MatrixXd x)
    : y_(std::move(y)), t_(std::move(t)), x_(std::move(x)) {
  const auto n = y_.size();
  if (t_.size() != n || x_.rows() != n)
    throw LengthMismatchError("y has " + std::to_string(n) + " rows, t has " +
                              std::to_string(t_.size()) + ", x has " +
                              std::to_string(x_.rows()));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(y_(i))) throw NonFiniteValueError(i + 1, "y");
    if (t_(i) != 0.0 && t_(i) != 1.0)
      throw NonBinaryTreatmentError(i + 1, std::to_string(t_(i)));
    for (Eigen::Index j = 0; j < x_.cols(); ++j) {
      if (!std::isfinite(x_(i, j)))
        throw NonFiniteValueError(i + 1, "x" + std::to_string(j + 1));
    }
  }
}

FoldPlan::FoldPlan(int n, int k, std::uint64_t seed,
                   std::vector<int> assignments)
    : k_(k), seed_(seed), assignments_(std::move(assignments)) {
  if (static_cast<int>(assignments_.size()) != n)
    throw LengthMismatchError("fold assignments do not cover all rows");
}

std::vector<int> FoldPlan::test_indices(int fold) const {
  std::vector<int> out;
  for (int i = 0; i < n(); ++i)
    if (assignments_[i] == fold) out.push_back(i);
  return out;
}

std::vector<int> FoldPlan::train_indices(int fold) const {
  std::vector<int> out;
  for (int i = 0; i < n(); ++i)
    if (assignments_[i] != fold) out.push_back(i);
  return out;
}

FoldPlan split_folds(int n, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("fold count k must be at least 2");
  if (n < 4 * k)
    throw TooFewRowsError("need n >= 4k, got n = " + std::to_string(n) +
                          " with k = " + std::to_string(k));

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  // Hand-rolled Fisher-Yates so the permutation depends only on the seed,
  // not on the standard library's shuffle implementation.
  std::mt19937_64 rng(seed);
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(
        uniform_index(rng, static_cast<std::uint64_t>(i) + 1));
    std::swap(perm[i], perm[j]);
  }

  const int base = n / k;
  const int remainder = n % k;
  std::vector<int> assignments(n);
  int pos = 0;
  for (int fold = 1; fold <= k; ++fold) {
    const int size = base + (fold <= remainder ? 1 : 0);
    for (int c = 0; c < size; ++c) assignments[perm[pos++]] = fold;
  }
  return FoldPlan(n, k, seed, std::move(assignments));
}

ArmSubset arm_subset(const ObservedData& data, const std::vector<int>& indices,
                     int arm) {
  ArmSubset out;
  out.parent = &data;
  out.arm = arm;
  for (int i : indices)
    if (data.t(i) == arm) out.indices.push_back(i);
  if (out.indices.empty()) throw EmptyArmError(arm);
  return out;
}

}  // namespace drdb
