#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "drdb/data.hpp"
#include "drdb/estimate.hpp"
#include "drdb/nuisance.hpp"

namespace drdb::bench {

/// Simulation design: X ~ N_p(0, I), T | X ~ Bernoulli(e(X)) with
/// e(x) = logistic(x'beta3 - 0.08), Y(t) ~ N(m_t(x), sigma_t^2). The linear
/// family uses m1 = 5 + 2 x'beta1, m0 = 3 + x'beta0 with beta1 = beta0; the
/// quadratic family adds (x^2)'beta12 to m1. All derived quantities
/// (variances, the true estimand, P(T=1)) are computed analytically.
struct DgpConfig {
  enum class Family { linear, quadratic };

  int n = 1000;
  int p = 10;
  int s = 3;
  Family family = Family::linear;

  Eigen::VectorXd beta1, beta0, beta3, beta12;
  double sigma1_sq = 0.0;
  double sigma0_sq = 0.0;
  double true_ate = 0.0;
  double p1 = 0.5;  // E[e(X)] by quadrature

  static DgpConfig make(int n, int p, int s, Family family);
};

/// Quadratic coefficients supported on the beta1 pattern, scaled so
/// Var(2 X'beta1) = 3 Var((X^2)'beta12), plus the implied true ATE.
struct QuadraticTruth {
  Eigen::VectorXd beta12;
  double true_ate = 2.0;
};
QuadraticTruth build_quadratic_truth(int p, int s);

struct GeneratedData {
  ObservedData data;
  OracleNuisance truth;
};

/// Draws one dataset from the DGP together with oracle nuisance handles.
GeneratedData generate_dgp(const DgpConfig& cfg, std::uint64_t rep_seed);

/// Per-row efficient-influence-function value, including the m(X) plug-in
/// term: (m1 - m0)(x) + t (y - m1(x)) / e(x) - (1 - t)(y - m0(x)) / (1 - e(x)).
double eif_gamma(double y, int t, double m1_at_x, double m0_at_x,
                 double e_at_x);
double eif_gamma(double y, int t, Eigen::Ref<const Eigen::VectorXd> x,
                 const OracleNuisance& truth);

struct IntervalEstimate {
  double point = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  bool degenerate = false;  // CI undefined (single observation)
};

/// Empirical mean of the EIF rows under the true nuisances, with a normal
/// approximation interval: point +- z_{1-alpha/2} sd / sqrt(n).
IntervalEstimate oracle_estimator(const ObservedData& data,
                                  const OracleNuisance& truth,
                                  double alpha = 0.05);

/// Difference in arm means with a Welch normal-approximation interval.
IntervalEstimate naive_estimator(const ObservedData& data, double alpha = 0.05);

struct MethodConfig {
  enum class Kind { oracle, naive, drdb };

  std::string label;
  Kind kind = Kind::drdb;
  // For drdb methods. nuisance.method == oracle wires in each replication's
  // true nuisance handles automatically.
  RunConfig run{};
};

struct MetricsRow {
  std::string method;
  int p = 0;
  int s = 0;
  int n = 0;
  int reps = 0;
  double bias = 0.0;
  double mse = 0.0;
  double cov = 0.0;
  double ci_len = 0.0;
  int failures = 0;
  bool flagged = false;  // more than 1% of replications failed
};

/// Monte Carlo campaign: for each replication, generates a dataset and runs
/// every method, then aggregates Bias / MSE / Cov / CI-Len against the true
/// estimand. Replications are independent and deterministic given (seed,
/// replication index); `threads` = 0 uses the hardware concurrency.
std::vector<MetricsRow> run_replications(const DgpConfig& dgp,
                                         const std::vector<MethodConfig>& methods,
                                         int reps, std::uint64_t seed,
                                         int threads = 0);

void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics_csv(const std::string& path);

}  // namespace drdb::bench
