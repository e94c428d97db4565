#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace drdb {

/// Immutable observational dataset: outcome y, binary treatment t, and an
/// n x p covariate matrix. Construction validates finiteness and that every
/// treatment value is exactly 0 or 1.
class ObservedData {
 public:
  ObservedData(Eigen::VectorXd y, Eigen::VectorXd t, Eigen::MatrixXd x);

  int n() const { return static_cast<int>(y_.size()); }
  int p() const { return static_cast<int>(x_.cols()); }
  const Eigen::VectorXd& y() const { return y_; }
  const Eigen::VectorXd& t() const { return t_; }
  const Eigen::MatrixXd& x() const { return x_; }
  double y(int i) const { return y_(i); }
  int t(int i) const { return static_cast<int>(t_(i)); }
  Eigen::MatrixXd::ConstRowXpr x_row(int i) const { return x_.row(i); }

 private:
  Eigen::VectorXd y_;
  Eigen::VectorXd t_;
  Eigen::MatrixXd x_;
};

/// Partition of {0..n-1} into k disjoint test folds whose sizes differ by at
/// most one. A plan is a pure function of (n, k, seed): rebuilding with the
/// same arguments reproduces the assignment bit for bit.
class FoldPlan {
 public:
  FoldPlan(int n, int k, std::uint64_t seed, std::vector<int> assignments);

  int n() const { return static_cast<int>(assignments_.size()); }
  int k() const { return k_; }
  std::uint64_t seed() const { return seed_; }
  /// Fold label of row i, in {1..k}.
  int assignment(int i) const { return assignments_[i]; }
  const std::vector<int>& assignments() const { return assignments_; }

  /// Row indices of test fold `fold` (1-based label), ascending.
  std::vector<int> test_indices(int fold) const;
  /// Complement: rows outside fold `fold`, ascending.
  std::vector<int> train_indices(int fold) const;

 private:
  int k_;
  std::uint64_t seed_;
  std::vector<int> assignments_;
};

/// View of the rows of a dataset restricted to one treatment arm within a
/// given index set. Holds no data; the parent must outlive it.
struct ArmSubset {
  const ObservedData* parent = nullptr;
  std::vector<int> indices;
  int arm = 0;

  int size() const { return static_cast<int>(indices.size()); }
  double y(int j) const { return parent->y(indices[j]); }
  Eigen::MatrixXd::ConstRowXpr x_row(int j) const {
    return parent->x_row(indices[j]);
  }
};

/// Randomly partitions {0..n-1} into k folds: a uniform permutation is cut
/// into k contiguous blocks, with the n mod k leftover rows going one each to
/// the first folds. Requires n >= 4k; throws TooFewRows otherwise.
FoldPlan split_folds(int n, int k, std::uint64_t seed);

/// Rows within `indices` whose treatment equals `arm`. Throws EmptyArm when
/// none match.
ArmSubset arm_subset(const ObservedData& data, const std::vector<int>& indices,
                     int arm);

}  // namespace drdb
