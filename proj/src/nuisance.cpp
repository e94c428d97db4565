#include "drdb/nuisance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "drdb/errors.hpp"
#include "drdb/rng.hpp"
#include "drdb/stats.hpp"

namespace drdb {

namespace {

constexpr double kNewtonGradTol = 1e-8;
constexpr int kNewtonMaxIter = 100;
// Inner cross-validation splits are a pure function of the row count, so a
// refit on the same rows always selects the same penalty.
constexpr std::uint64_t kCvSplitSeed = 0x637665'5f'6c616dULL;

std::array<double, 13> make_grid() {
  std::array<double, 13> g{};
  for (int i = 0; i < 13; ++i) g[i] = std::pow(10.0, -4.0 + 0.5 * i);
  return g;
}

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd d(x.rows(), x.cols() + 1);
  d.col(0).setOnes();
  d.rightCols(x.cols()) = x;
  return d;
}

// Penalty matrix contribution: lambda on every coefficient except the
// intercept.
void add_penalty(Eigen::MatrixXd& gram, double lambda) {
  for (Eigen::Index j = 1; j < gram.cols(); ++j) gram(j, j) += lambda;
}

double cv_lambda(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
  const auto n = static_cast<int>(design.rows());
  const int k = n >= 20 ? 5 : 2;
  if (n < 4 * k)
    throw TooFewRowsError("ridge cross-validation needs at least 8 rows, got " +
                          std::to_string(n));
  const FoldPlan plan = split_folds(n, k, kCvSplitSeed);

  std::array<double, 13> sse{};
  sse.fill(0.0);
  std::array<bool, 13> ok{};
  ok.fill(true);

  for (int fold = 1; fold <= k; ++fold) {
    const auto test = plan.test_indices(fold);
    const auto train = plan.train_indices(fold);
    Eigen::MatrixXd xt(train.size(), design.cols());
    Eigen::VectorXd yt(train.size());
    for (std::size_t r = 0; r < train.size(); ++r) {
      xt.row(r) = design.row(train[r]);
      yt(r) = y(train[r]);
    }
    const Eigen::MatrixXd gram = xt.transpose() * xt;
    const Eigen::VectorXd xty = xt.transpose() * yt;
    for (std::size_t g = 0; g < kRidgeLambdaGrid.size(); ++g) {
      Eigen::MatrixXd a = gram;
      add_penalty(a, kRidgeLambdaGrid[g]);
      Eigen::LLT<Eigen::MatrixXd> llt(a);
      if (llt.info() != Eigen::Success) {
        ok[g] = false;
        continue;
      }
      const Eigen::VectorXd beta = llt.solve(xty);
      for (int i : test) {
        const double r = y(i) - design.row(i).dot(beta);
        sse[g] += r * r;
      }
    }
  }

  int best = -1;
  for (std::size_t g = 0; g < kRidgeLambdaGrid.size(); ++g) {
    if (!ok[g]) continue;
    if (best < 0 || sse[g] < sse[best]) best = static_cast<int>(g);
  }
  if (best < 0)
    throw RankDeficientError("no penalty in the CV grid produced a stable fit");
  return kRidgeLambdaGrid[best];
}

double softplus(double z) {
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

double logistic_objective(const Eigen::MatrixXd& design,
                          const Eigen::VectorXd& labels,
                          const Eigen::VectorXd& beta, double lambda_e) {
  const Eigen::VectorXd z = design * beta;
  double nll = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i)
    nll += softplus(z(i)) - labels(i) * z(i);
  const double pen =
      0.5 * lambda_e * beta.tail(beta.size() - 1).squaredNorm();
  return nll + pen;
}

}  // namespace

const std::array<double, 13> kRidgeLambdaGrid = make_grid();

RidgeRegressionPosterior fit_ridge(const Eigen::MatrixXd& x,
                                   const Eigen::VectorXd& y,
                                   std::optional<double> lambda) {
  const auto n = x.rows();
  const auto p = x.cols();
  if (y.size() != n) throw LengthMismatchError("ridge design/response sizes");
  if (n < p + 3)
    throw TooFewRowsError("ridge fit needs at least p+3 = " +
                          std::to_string(p + 3) + " rows, got " +
                          std::to_string(n));
  if (lambda && *lambda < 0.0)
    throw ConfigError("ridge penalty must be nonnegative");

  const Eigen::MatrixXd design = with_intercept(x);
  const double lam = lambda ? *lambda : cv_lambda(design, y);

  Eigen::MatrixXd precision = design.transpose() * design;
  add_penalty(precision, lam);
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success)
    throw RankDeficientError("ridge precision matrix is not positive definite"
                             " (lambda = " + std::to_string(lam) + ")");

  RidgeRegressionPosterior post;
  post.coef_mean = llt.solve(design.transpose() * y);
  post.coef_precision_chol = std::move(llt);
  post.rss = (y - design * post.coef_mean).squaredNorm();
  post.dof = static_cast<double>(n - (p + 1));
  post.lambda = lam;
  return post;
}

RidgeRegressionPosterior fit_ridge(const ArmSubset& train,
                                   std::optional<double> lambda) {
  const int n = train.size();
  const int p = train.parent->p();
  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd y(n);
  for (int j = 0; j < n; ++j) {
    x.row(j) = train.x_row(j);
    y(j) = train.y(j);
  }
  return fit_ridge(x, y, lambda);
}

NuisanceDraw draw_regression(const RidgeRegressionPosterior& post,
                             std::mt19937_64& rng) {
  const auto dim = post.coef_mean.size();
  Eigen::VectorXd coef = post.coef_mean;
  if (post.rss > 0.0) {
    std::gamma_distribution<double> gamma(post.dof / 2.0, 1.0);
    const double s2 = (post.rss / 2.0) / gamma(rng);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(dim);
    for (Eigen::Index j = 0; j < dim; ++j) z(j) = normal(rng);
    // L^-T z has covariance precision^-1.
    coef += std::sqrt(s2) *
            post.coef_precision_chol.matrixU().solve(z);
  }
  const double intercept = coef(0);
  const Eigen::VectorXd slope = coef.tail(dim - 1);
  return {NuisanceDraw::Kind::regression,
          [intercept, slope](Eigen::Ref<const Eigen::VectorXd> x) {
            return intercept + slope.dot(x);
          }};
}

LogisticLaplacePosterior fit_logistic_laplace(const Eigen::MatrixXd& x,
                                              const Eigen::VectorXd& labels,
                                              double lambda_e, double clip) {
  const auto n = x.rows();
  const auto p = x.cols();
  if (labels.size() != n)
    throw LengthMismatchError("logistic design/label sizes");
  if (n < p + 3)
    throw TooFewRowsError("logistic fit needs at least p+3 = " +
                          std::to_string(p + 3) + " rows, got " +
                          std::to_string(n));
  if (!(lambda_e > 0.0)) throw ConfigError("lambda_e must be positive");
  if (!(clip > 0.0 && clip < 0.5)) throw ConfigError("clip must lie in (0, 0.5)");

  const Eigen::MatrixXd design = with_intercept(x);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p + 1);
  double objective = logistic_objective(design, labels, beta, lambda_e);
  double grad_norm = std::numeric_limits<double>::infinity();

  int iter = 0;
  for (; iter < kNewtonMaxIter; ++iter) {
    const Eigen::VectorXd z = design * beta;
    Eigen::VectorXd prob(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      prob(i) = stats::logistic(z(i));
      w(i) = prob(i) * (1.0 - prob(i));
    }
    Eigen::VectorXd grad = design.transpose() * (prob - labels);
    grad.tail(p) += lambda_e * beta.tail(p);
    grad_norm = grad.norm();
    if (grad_norm <= kNewtonGradTol) break;

    Eigen::MatrixXd hessian =
        design.transpose() * w.asDiagonal() * design;
    add_penalty(hessian, lambda_e);
    Eigen::LLT<Eigen::MatrixXd> llt(hessian);
    if (llt.info() != Eigen::Success)
      throw NoConvergenceError(iter, grad_norm);
    const Eigen::VectorXd direction = llt.solve(-grad);

    // Step halving keeps the damped Newton iteration monotone.
    double step = 1.0;
    Eigen::VectorXd candidate = beta + direction;
    double cand_obj = logistic_objective(design, labels, candidate, lambda_e);
    int halvings = 0;
    while (cand_obj > objective && halvings < 60) {
      step *= 0.5;
      candidate = beta + step * direction;
      cand_obj = logistic_objective(design, labels, candidate, lambda_e);
      ++halvings;
    }
    beta = candidate;
    objective = cand_obj;
  }
  if (grad_norm > kNewtonGradTol)
    throw NoConvergenceError(kNewtonMaxIter, grad_norm);

  // Rebuild the Hessian at the MAP for the Laplace covariance.
  const Eigen::VectorXd z = design * beta;
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double prob = stats::logistic(z(i));
    w(i) = prob * (1.0 - prob);
  }
  Eigen::MatrixXd hessian = design.transpose() * w.asDiagonal() * design;
  add_penalty(hessian, lambda_e);
  Eigen::LLT<Eigen::MatrixXd> llt(hessian);
  if (llt.info() != Eigen::Success)
    throw NoConvergenceError(iter, grad_norm);

  LogisticLaplacePosterior post;
  post.map_coef = std::move(beta);
  post.hessian_chol = std::move(llt);
  post.lambda_e = lambda_e;
  post.clip = clip;
  return post;
}

NuisanceDraw draw_propensity(const LogisticLaplacePosterior& post,
                             std::mt19937_64& rng) {
  const auto dim = post.map_coef.size();
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(dim);
  for (Eigen::Index j = 0; j < dim; ++j) z(j) = normal(rng);
  const Eigen::VectorXd coef =
      post.map_coef + post.hessian_chol.matrixU().solve(z);
  const double intercept = coef(0);
  const Eigen::VectorXd slope = coef.tail(dim - 1);
  const double lo = post.clip;
  const double hi = 1.0 - post.clip;
  return {NuisanceDraw::Kind::propensity,
          [intercept, slope, lo, hi](Eigen::Ref<const Eigen::VectorXd> x) {
            return std::clamp(stats::logistic(intercept + slope.dot(x)), lo, hi);
          }};
}

double estimate_p1(const ObservedData& data, const std::vector<int>& rows,
                   double clip) {
  if (rows.empty()) throw TooFewRowsError("p1 estimate needs at least one row");
  double s = 0.0;
  for (int i : rows) s += data.t()(i);
  const double p1 = s / static_cast<double>(rows.size());
  return std::clamp(p1, clip, 1.0 - clip);
}

}  // namespace drdb
