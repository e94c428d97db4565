#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "drdb/data.hpp"
#include "drdb/debias.hpp"
#include "drdb/estimands.hpp"
#include "drdb/nuisance.hpp"

namespace drdb {

struct NuisanceConfig {
  enum class Method { ridge, oracle };
  enum class P1Source { train, full, test };

  Method method = Method::ridge;
  std::optional<double> lambda;  // empty = 5-fold CV over kRidgeLambdaGrid
  double lambda_e = 1.0;
  double clip = 0.01;
  P1Source p1_source = P1Source::train;
  // Augments the outcome regressions with squared covariates; the propensity
  // model always uses the raw covariates.
  bool quadratic_outcome = false;
  // True nuisance functions, required when method == oracle. Not owned; the
  // caller keeps it alive for the duration of the run.
  const OracleNuisance* oracle = nullptr;
};

struct RunConfig {
  int k = 5;
  int m_draws = 1000;
  double alpha = 0.05;
  EstimandSpec estimand{};
  NuisanceConfig nuisance{};
  std::uint64_t seed = 12345;
};

/// Throws ConfigError when any field violates its contract.
void validate(const RunConfig& cfg);

struct FoldDiagnostics {
  int fold = 0;
  int n_test = 0;
  int n1 = 0;
  int n0 = 0;
  double p1_hat = 0.0;
  std::optional<double> lambda1, lambda0;  // ridge penalties actually used
};

/// One fold's hierarchical posterior: the conditional target law at bias 0
/// plus the arm-wise bias posteriors. The marginal fold draw is
///   eta_m + b1 - b0 + c_S * T_{nu_S}
/// for two-arm estimands (bias0_sign = -1) and eta_m + b_t + c_S * T for the
/// one-arm means.
struct FoldPosterior {
  TPosterior cond_base;
  std::optional<TPosterior> bias1, bias0;
  double bias0_sign = -1.0;
  FoldDiagnostics diag;

  /// eta_m plus the bias posterior locations with their signs.
  double closed_form_mean() const;
  /// Independent-sum variance; empty when any component has nu <= 2.
  std::optional<double> variance() const;
};

/// Runs the debiasing and hierarchical steps on one test/training split:
/// fits (or takes from the oracle) the arm regressions and the propensity on
/// the training fold, draws one sample of each, retargets the residuals with
/// the density-ratio weights, and assembles the closed-form posteriors.
FoldPosterior fold_posterior(const ObservedData& data, const FoldPlan& plan,
                             int fold, const RunConfig& cfg,
                             std::mt19937_64& rng);

/// Forward simulation from the fold posterior: per draw, sample b1, b0, then
/// the conditional t variate.
std::vector<double> sample_fold(const FoldPosterior& fp, int m,
                                std::mt19937_64& rng);

/// Consensus aggregation: index-wise average of the K fold draw vectors,
/// yielding samples of the cross-fitted convolution posterior.
std::vector<double> aggregate_cf(const std::vector<std::vector<double>>& fold_draws);

struct FoldSummary {
  int fold = 0;
  double eta_m = 0.0;
  std::optional<double> eta1, eta0;
  double c_s2 = 0.0;
  double nu_s = 0.0;
  int n1 = 0;
  int n0 = 0;
  double p1_hat = 0.0;
};

struct PosteriorSummary {
  std::string estimand;
  double mean = 0.0;                  // Monte Carlo mean of aggregated draws
  std::optional<double> variance;     // closed form; empty when undefined
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  double alpha = 0.05;
  int k = 0;
  int m_draws = 0;
  std::uint64_t seed = 0;
  double cf_mean = 0.0;               // average of fold closed-form means
  std::vector<FoldSummary> per_fold;
  std::vector<double> draws;          // retained aggregated sample
};

/// Full cross-fitted run: fold posteriors, per-fold sampling, consensus
/// aggregation, and summary. Fold errors are annotated with the fold id.
PosteriorSummary estimate(const ObservedData& data, const RunConfig& cfg);

/// One-arm specializations of the same pipeline.
PosteriorSummary estimate_mu1(const ObservedData& data, RunConfig cfg);
PosteriorSummary estimate_mu0(const ObservedData& data, RunConfig cfg);

/// Weighted-estimand entry point (ATT, ATC, covariate subgroups). With an ATE
/// spec this reproduces estimate() bit for bit.
PosteriorSummary estimate_weighted(const ObservedData& data,
                                   const EstimandSpec& spec, RunConfig cfg);

}  // namespace drdb
