#include "drdb/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "drdb/errors.hpp"
#include "drdb/rng.hpp"
#include "drdb/stats.hpp"

namespace drdb {

namespace {

constexpr int kMinTestArm = 4;  // keeps every bias posterior at nu >= 3

Eigen::VectorXd expand_quadratic(Eigen::Ref<const Eigen::VectorXd> x) {
  Eigen::VectorXd out(2 * x.size());
  out.head(x.size()) = x;
  out.tail(x.size()) = x.cwiseProduct(x);
  return out;
}

// Design matrix of raw (or quadratic-augmented) covariates for the given rows.
Eigen::MatrixXd build_design(const ObservedData& data,
                             const std::vector<int>& rows, bool quadratic) {
  const int p = data.p();
  Eigen::MatrixXd x(rows.size(), quadratic ? 2 * p : p);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (quadratic) {
      const Eigen::VectorXd xi = data.x_row(rows[r]);
      x.row(r) = expand_quadratic(xi);
    } else {
      x.row(r) = data.x_row(rows[r]);
    }
  }
  return x;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<int>& rows) {
  Eigen::VectorXd out(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) out(r) = v(rows[r]);
  return out;
}

struct FittedArm {
  NuisanceDraw draw;
  std::optional<double> lambda;
};

// Fits the arm regression on the training rows and draws one sample. With a
// quadratic outcome model the returned evaluator still accepts raw
// covariates and expands internally.
FittedArm fit_and_draw_regression(const ObservedData& data,
                                  const std::vector<int>& train_arm_rows,
                                  const NuisanceConfig& nc,
                                  std::mt19937_64& rng) {
  const Eigen::MatrixXd x =
      build_design(data, train_arm_rows, nc.quadratic_outcome);
  const Eigen::VectorXd y = gather(data.y(), train_arm_rows);
  const RidgeRegressionPosterior post = fit_ridge(x, y, nc.lambda);
  NuisanceDraw draw = draw_regression(post, rng);
  if (nc.quadratic_outcome) {
    auto affine = draw.evaluate;
    draw.evaluate = [affine](Eigen::Ref<const Eigen::VectorXd> xr) {
      return affine(expand_quadratic(xr));
    };
  }
  return {std::move(draw), post.lambda};
}

std::vector<int> filter_arm(const ObservedData& data,
                            const std::vector<int>& rows, int arm) {
  std::vector<int> out;
  for (int i : rows)
    if (data.t(i) == arm) out.push_back(i);
  return out;
}

}  // namespace

void validate(const RunConfig& cfg) {
  if (cfg.k < 2) throw ConfigError("k must be at least 2");
  if (cfg.m_draws < 100) throw ConfigError("m_draws must be at least 100");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 0.5))
    throw ConfigError("alpha must lie in (0, 0.5)");
  if (!(cfg.nuisance.clip > 0.0 && cfg.nuisance.clip < 0.5))
    throw ConfigError("clip must lie in (0, 0.5)");
  if (!(cfg.nuisance.lambda_e > 0.0))
    throw ConfigError("lambda_e must be positive");
  if (cfg.nuisance.lambda && *cfg.nuisance.lambda < 0.0)
    throw ConfigError("lambda must be nonnegative");
  if (cfg.nuisance.method == NuisanceConfig::Method::oracle &&
      cfg.nuisance.oracle == nullptr)
    throw ConfigError("oracle nuisance method needs oracle functions");
  if (cfg.estimand.kind == Estimand::subgroup && !cfg.estimand.rule)
    throw ConfigError("subgroup estimand needs a rule");
}

double FoldPosterior::closed_form_mean() const {
  double m = cond_base.eta;
  if (bias1) m += bias1->eta;
  if (bias0) m += bias0_sign * bias0->eta;
  return m;
}

std::optional<double> FoldPosterior::variance() const {
  double v = 0.0;
  const auto base = cond_base.variance();
  if (!base) return std::nullopt;
  v += *base;
  if (bias1) {
    const auto b = bias1->variance();
    if (!b) return std::nullopt;
    v += *b;
  }
  if (bias0) {
    const auto b = bias0->variance();
    if (!b) return std::nullopt;
    v += *b;
  }
  return v;
}

FoldPosterior fold_posterior(const ObservedData& data, const FoldPlan& plan,
                             int fold, const RunConfig& cfg,
                             std::mt19937_64& rng) {
  const NuisanceConfig& nc = cfg.nuisance;
  const EstimandSpec& spec = cfg.estimand;
  const bool need_arm1 = spec.kind != Estimand::mu0;
  const bool need_arm0 = spec.kind != Estimand::mu1;

  const std::vector<int> test = plan.test_indices(fold);
  const std::vector<int> train = plan.train_indices(fold);
  const std::vector<int> test1 = filter_arm(data, test, 1);
  const std::vector<int> test0 = filter_arm(data, test, 0);
  const std::vector<int> train1 = filter_arm(data, train, 1);
  const std::vector<int> train0 = filter_arm(data, train, 0);

  const int m_design_cols =
      nc.quadratic_outcome ? 2 * data.p() : data.p();
  const auto check_arm = [&](bool needed, const std::vector<int>& test_arm,
                             const std::vector<int>& train_arm, int arm) {
    if (!needed) return;
    if (static_cast<int>(test_arm.size()) < kMinTestArm)
      throw DegenerateFoldError(
          fold, "test arm " + std::to_string(arm) + " has " +
                    std::to_string(test_arm.size()) + " rows, need " +
                    std::to_string(kMinTestArm));
    if (static_cast<int>(train_arm.size()) < m_design_cols + 3)
      throw DegenerateFoldError(
          fold, "training arm " + std::to_string(arm) + " has " +
                    std::to_string(train_arm.size()) + " rows, need " +
                    std::to_string(m_design_cols + 3));
  };
  check_arm(need_arm1, test1, train1, 1);
  check_arm(need_arm0, test0, train0, 0);
  if (static_cast<int>(train.size()) < data.p() + 3)
    throw DegenerateFoldError(fold, "training fold too small for the propensity fit");

  // Nuisance posteriors and one draw of each, in a fixed order so runs are
  // reproducible: m1, m0, then the propensity.
  std::optional<NuisanceDraw> m1_draw, m0_draw;
  NuisanceDraw e_draw;
  FoldDiagnostics diag;
  if (nc.method == NuisanceConfig::Method::oracle) {
    if (need_arm1) m1_draw = nc.oracle->draw_m1();
    if (need_arm0) m0_draw = nc.oracle->draw_m0();
    e_draw = nc.oracle->draw_e();
  } else {
    if (need_arm1) {
      FittedArm fit = fit_and_draw_regression(data, train1, nc, rng);
      m1_draw = std::move(fit.draw);
      diag.lambda1 = fit.lambda;
    }
    if (need_arm0) {
      FittedArm fit = fit_and_draw_regression(data, train0, nc, rng);
      m0_draw = std::move(fit.draw);
      diag.lambda0 = fit.lambda;
    }
    const Eigen::MatrixXd xe = build_design(data, train, false);
    const Eigen::VectorXd te = gather(data.t(), train);
    const LogisticLaplacePosterior e_post =
        fit_logistic_laplace(xe, te, nc.lambda_e, nc.clip);
    e_draw = draw_propensity(e_post, rng);
  }

  std::vector<int> all_rows;
  const std::vector<int>* p1_rows = &train;
  if (nc.p1_source == NuisanceConfig::P1Source::full) {
    all_rows.resize(data.n());
    for (int i = 0; i < data.n(); ++i) all_rows[i] = i;
    p1_rows = &all_rows;
  } else if (nc.p1_source == NuisanceConfig::P1Source::test) {
    p1_rows = &test;
  }
  const double p1_hat = estimate_p1(data, *p1_rows, nc.clip);

  std::optional<double> pA_hat;
  if (spec.kind == Estimand::subgroup) {
    pA_hat = subgroup_share(*spec.rule, data, *p1_rows);
    bool any_in_test = false;
    for (int i : test) {
      const Eigen::VectorXd x = data.x_row(i);
      if (spec.rule->contains(x)) {
        any_in_test = true;
        break;
      }
    }
    if (!any_in_test)
      throw EmptySubgroupError("fold " + std::to_string(fold) +
                               " has no test rows in the subgroup");
  }
  const TargetWeights tw = build_weights(spec, e_draw, p1_hat, pA_hat);

  // Conditional-posterior observables over the whole test fold.
  std::vector<double> cond_values;
  cond_values.reserve(test.size());
  for (int i : test) {
    const Eigen::VectorXd x = data.x_row(i);
    double v = 0.0;
    if (spec.kind == Estimand::mu1) {
      v = (*m1_draw)(x);
    } else if (spec.kind == Estimand::mu0) {
      v = (*m0_draw)(x);
    } else {
      v = tw.w(x) * ((*m1_draw)(x) - (*m0_draw)(x));
    }
    cond_values.push_back(v);
  }

  FoldPosterior fp;
  fp.cond_base = conditional_posterior(cond_values, 0.0);
  fp.bias0_sign = spec.kind == Estimand::mu0 ? 1.0 : -1.0;
  if (need_arm1) {
    ArmSubset arm{&data, test1, 1};
    fp.bias1 = bias_posterior(weighted_observables(arm, *m1_draw, tw.r1));
  }
  if (need_arm0) {
    ArmSubset arm{&data, test0, 0};
    fp.bias0 = bias_posterior(weighted_observables(arm, *m0_draw, tw.r0));
  }

  diag.fold = fold;
  diag.n_test = static_cast<int>(test.size());
  diag.n1 = static_cast<int>(test1.size());
  diag.n0 = static_cast<int>(test0.size());
  diag.p1_hat = p1_hat;
  fp.diag = diag;
  return fp;
}

std::vector<double> sample_fold(const FoldPosterior& fp, int m,
                                std::mt19937_64& rng) {
  if (m < 1) throw ConfigError("sample_fold needs m >= 1");
  std::vector<double> out;
  out.reserve(m);
  for (int j = 0; j < m; ++j) {
    double b = 0.0;
    if (fp.bias1) b += sample_t(*fp.bias1, rng);
    if (fp.bias0) b += fp.bias0_sign * sample_t(*fp.bias0, rng);
    out.push_back(sample_t(fp.cond_base, rng) + b);
  }
  return out;
}

std::vector<double> aggregate_cf(
    const std::vector<std::vector<double>>& fold_draws) {
  if (fold_draws.empty()) throw LengthMismatchError("no fold draws");
  const std::size_t m = fold_draws.front().size();
  for (const auto& d : fold_draws)
    if (d.size() != m)
      throw LengthMismatchError("fold draw vectors differ in length");
  const double k = static_cast<double>(fold_draws.size());
  std::vector<double> out(m, 0.0);
  for (const auto& d : fold_draws)
    for (std::size_t j = 0; j < m; ++j) out[j] += d[j];
  for (double& v : out) v /= k;
  return out;
}

PosteriorSummary estimate(const ObservedData& data, const RunConfig& cfg) {
  validate(cfg);
  const FoldPlan plan =
      split_folds(data.n(), cfg.k, derive_seed(cfg.seed, {rng_domain::kFoldSplit}));

  std::vector<FoldPosterior> fps;
  std::vector<std::vector<double>> draws;
  fps.reserve(cfg.k);
  draws.reserve(cfg.k);
  for (int fold = 1; fold <= cfg.k; ++fold) {
    auto rng = make_stream(cfg.seed, {rng_domain::kFold,
                                      static_cast<std::uint64_t>(fold)});
    try {
      fps.push_back(fold_posterior(data, plan, fold, cfg, rng));
    } catch (const DegenerateFoldError&) {
      throw;
    } catch (const Error& e) {
      throw Error(e.category(),
                  "fold " + std::to_string(fold) + ": " + e.what());
    }
    draws.push_back(sample_fold(fps.back(), cfg.m_draws, rng));
  }

  std::vector<double> agg = aggregate_cf(draws);

  PosteriorSummary s;
  s.estimand = cfg.estimand.label();
  s.alpha = cfg.alpha;
  s.k = cfg.k;
  s.m_draws = cfg.m_draws;
  s.seed = cfg.seed;
  s.mean = stats::mean(agg);

  double var = 0.0;
  bool var_defined = true;
  double cf_sum = 0.0;
  for (const auto& fp : fps) {
    cf_sum += fp.closed_form_mean();
    const auto v = fp.variance();
    if (v)
      var += *v;
    else
      var_defined = false;
  }
  const double kd = static_cast<double>(cfg.k);
  if (var_defined) s.variance = var / (kd * kd);
  s.cf_mean = cf_sum / kd;

  std::vector<double> sorted = agg;
  std::sort(sorted.begin(), sorted.end());
  s.ci_lower = stats::quantile_sorted(sorted, cfg.alpha / 2.0);
  s.ci_upper = stats::quantile_sorted(sorted, 1.0 - cfg.alpha / 2.0);

  for (const auto& fp : fps) {
    FoldSummary fs;
    fs.fold = fp.diag.fold;
    fs.eta_m = fp.cond_base.eta;
    if (fp.bias1) fs.eta1 = fp.bias1->eta;
    if (fp.bias0) fs.eta0 = fp.bias0->eta;
    fs.c_s2 = fp.cond_base.c2;
    fs.nu_s = fp.cond_base.nu;
    fs.n1 = fp.diag.n1;
    fs.n0 = fp.diag.n0;
    fs.p1_hat = fp.diag.p1_hat;
    s.per_fold.push_back(fs);
  }
  s.draws = std::move(agg);
  return s;
}

PosteriorSummary estimate_mu1(const ObservedData& data, RunConfig cfg) {
  cfg.estimand = EstimandSpec::mu1();
  return estimate(data, cfg);
}

PosteriorSummary estimate_mu0(const ObservedData& data, RunConfig cfg) {
  cfg.estimand = EstimandSpec::mu0();
  return estimate(data, cfg);
}

PosteriorSummary estimate_weighted(const ObservedData& data,
                                   const EstimandSpec& spec, RunConfig cfg) {
  cfg.estimand = spec;
  return estimate(data, cfg);
}

}  // namespace drdb
