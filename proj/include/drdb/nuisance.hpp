#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <functional>
#include <optional>
#include <random>

#include "drdb/data.hpp"

namespace drdb {

/// A single function-valued sample from a fitted nuisance posterior: an
/// outcome regression m(x) or a propensity e(x). Evaluation is deterministic
/// once drawn; propensity draws are clamped into [clip, 1-clip].
struct NuisanceDraw {
  enum class Kind { regression, propensity };
  Kind kind = Kind::regression;
  std::function<double(Eigen::Ref<const Eigen::VectorXd>)> evaluate;

  double operator()(Eigen::Ref<const Eigen::VectorXd> x) const {
    return evaluate(x);
  }
};

/// Conjugate Normal-Inverse-Gamma posterior of a Gaussian linear working
/// model with unpenalized intercept: coef | s2 ~ N(mean, s2 * precision^-1)
/// with precision = X'X + lambda * diag(0,1,...,1), and s2 ~ IG(dof/2, rss/2).
struct RidgeRegressionPosterior {
  Eigen::VectorXd coef_mean;          // intercept first, length p+1
  Eigen::LLT<Eigen::MatrixXd> coef_precision_chol;
  double rss = 0.0;                   // residual sum of squares at coef_mean
  double dof = 0.0;                   // n - (p+1)
  double lambda = 0.0;                // penalty actually used
};

/// Laplace approximation of a ridge-penalized logistic posterior: MAP
/// coefficients plus the Cholesky factor of the negative log-posterior
/// Hessian at the MAP. Draws are Gaussian around the MAP.
struct LogisticLaplacePosterior {
  Eigen::VectorXd map_coef;           // intercept first, length p+1
  Eigen::LLT<Eigen::MatrixXd> hessian_chol;
  double lambda_e = 1.0;
  double clip = 0.01;                 // positivity clamp in (0, 0.5)
};

/// True nuisance functions for simulated data. A point-mass "posterior":
/// every draw returns the stored functions exactly (no clamping).
struct OracleNuisance {
  std::function<double(Eigen::Ref<const Eigen::VectorXd>)> m1, m0, e;
  double p1 = 0.5;  // true treatment probability

  NuisanceDraw draw_m1() const { return {NuisanceDraw::Kind::regression, m1}; }
  NuisanceDraw draw_m0() const { return {NuisanceDraw::Kind::regression, m0}; }
  NuisanceDraw draw_e() const { return {NuisanceDraw::Kind::propensity, e}; }
};

/// 13-point log grid 1e-4 .. 1e2 searched when lambda is left unset.
extern const std::array<double, 13> kRidgeLambdaGrid;

/// Fits the Bayesian ridge posterior on a design of raw covariates (the
/// intercept column is appended internally). `lambda` empty selects the
/// penalty from kRidgeLambdaGrid by 5-fold cross-validation on the squared
/// error of the posterior-mean predictor.
RidgeRegressionPosterior fit_ridge(const Eigen::MatrixXd& x,
                                   const Eigen::VectorXd& y,
                                   std::optional<double> lambda);

RidgeRegressionPosterior fit_ridge(const ArmSubset& train,
                                   std::optional<double> lambda);

/// One draw from the posterior: s2 ~ IG(dof/2, rss/2), then coefficients from
/// the conditional Gaussian. Returns the affine evaluator x -> gamma + x'theta.
NuisanceDraw draw_regression(const RidgeRegressionPosterior& post,
                             std::mt19937_64& rng);

/// Newton-Raphson on the ridge-penalized logistic log-posterior (intercept
/// unpenalized), tolerance 1e-8 on the gradient norm, at most 100 iterations.
LogisticLaplacePosterior fit_logistic_laplace(const Eigen::MatrixXd& x,
                                              const Eigen::VectorXd& labels,
                                              double lambda_e, double clip);

/// Gaussian draw around the MAP with covariance H^-1; the evaluator applies
/// the logistic link and clamps into [clip, 1-clip].
NuisanceDraw draw_propensity(const LogisticLaplacePosterior& post,
                             std::mt19937_64& rng);

/// Mean of the treatment indicator over the given rows, clamped to
/// [clip, 1-clip].
double estimate_p1(const ObservedData& data, const std::vector<int>& rows,
                   double clip);

}  // namespace drdb
