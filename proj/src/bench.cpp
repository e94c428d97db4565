#include "drdb/bench.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "drdb/errors.hpp"
#include "drdb/rng.hpp"
#include "drdb/stats.hpp"

namespace drdb::bench {

namespace {

constexpr double kPropensityShift = -0.08;

// beta1 pattern: ceil(s/2) ones, floor(s/2) halves, zeros elsewhere.
Eigen::VectorXd beta1_pattern(int p, int s) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  const int ones = (s + 1) / 2;
  for (int j = 0; j < s; ++j) beta(j) = j < ones ? 1.0 : 0.5;
  return beta;
}

// E[logistic(sigma Z + shift)] for Z ~ N(0,1), by Simpson quadrature.
double logistic_gaussian_mean(double sigma, double shift) {
  const int half = 2000;
  const double zmax = 10.0;
  const double h = zmax / half;
  double acc = 0.0;
  for (int i = -half; i <= half; ++i) {
    const double z = i * h;
    const double f = stats::logistic(sigma * z + shift) *
                     std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
    const double w = (i == -half || i == half) ? 1.0 : (((i + half) % 2) ? 4.0 : 2.0);
    acc += w * f;
  }
  return acc * h / 3.0;
}

OracleNuisance make_truth(const DgpConfig& cfg) {
  OracleNuisance truth;
  const Eigen::VectorXd b1 = cfg.beta1;
  const Eigen::VectorXd b0 = cfg.beta0;
  const Eigen::VectorXd b3 = cfg.beta3;
  const Eigen::VectorXd b12 = cfg.beta12;
  const bool quadratic = cfg.family == DgpConfig::Family::quadratic;
  truth.m1 = [b1, b12, quadratic](Eigen::Ref<const Eigen::VectorXd> x) {
    double v = 5.0 + 2.0 * b1.dot(x);
    if (quadratic) v += b12.dot(x.cwiseProduct(x));
    return v;
  };
  truth.m0 = [b0](Eigen::Ref<const Eigen::VectorXd> x) {
    return 3.0 + b0.dot(x);
  };
  truth.e = [b3](Eigen::Ref<const Eigen::VectorXd> x) {
    return stats::logistic(b3.dot(x) + kPropensityShift);
  };
  truth.p1 = cfg.p1;
  return truth;
}

}  // namespace

QuadraticTruth build_quadratic_truth(int p, int s) {
  QuadraticTruth out;
  out.beta12 = Eigen::VectorXd::Zero(p);
  out.true_ate = 2.0;
  if (s == 0) return out;
  const Eigen::VectorXd pattern = beta1_pattern(p, s);
  // Var(2 X'beta1) = 4 |beta1|^2 and Var((X^2)'beta12) = 2 |beta12|^2 for
  // standard normal covariates, so beta12 proportional to beta1 needs
  // |beta12|^2 = (2/3) |beta1|^2 to hit the 3:1 variance ratio.
  out.beta12 = pattern * std::sqrt(2.0 / 3.0);
  out.true_ate = 2.0 + out.beta12.sum();  // E[X_j^2] = 1
  return out;
}

DgpConfig DgpConfig::make(int n, int p, int s, Family family) {
  if (s > p) throw ConfigError("sparsity s cannot exceed dimension p");
  if (n < 1) throw ConfigError("n must be positive");
  DgpConfig cfg;
  cfg.n = n;
  cfg.p = p;
  cfg.s = s;
  cfg.family = family;
  cfg.beta1 = beta1_pattern(p, s);
  cfg.beta0 = cfg.beta1;
  cfg.beta3 = Eigen::VectorXd::Zero(p);
  for (int j = 0; j < std::min(p, 2); ++j) cfg.beta3(j) = 0.35;
  cfg.beta12 = Eigen::VectorXd::Zero(p);
  cfg.true_ate = 2.0;
  double var_m1 = 4.0 * cfg.beta1.squaredNorm();
  if (family == Family::quadratic) {
    const QuadraticTruth q = build_quadratic_truth(p, s);
    cfg.beta12 = q.beta12;
    cfg.true_ate = q.true_ate;
    var_m1 += 2.0 * cfg.beta12.squaredNorm();  // Var(X_j^2) = 2
  }
  cfg.sigma1_sq = var_m1 / 5.0;
  cfg.sigma0_sq = cfg.beta0.squaredNorm() / 5.0;
  cfg.p1 = logistic_gaussian_mean(cfg.beta3.norm(), kPropensityShift);
  return cfg;
}

GeneratedData generate_dgp(const DgpConfig& cfg, std::uint64_t rep_seed) {
  auto rng = make_stream(rep_seed, {rng_domain::kDgp});
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  const OracleNuisance truth = make_truth(cfg);
  const double sd1 = std::sqrt(cfg.sigma1_sq);
  const double sd0 = std::sqrt(cfg.sigma0_sq);

  Eigen::MatrixXd x(cfg.n, cfg.p);
  Eigen::VectorXd y(cfg.n), t(cfg.n);
  Eigen::VectorXd xi(cfg.p);
  for (int i = 0; i < cfg.n; ++i) {
    for (int j = 0; j < cfg.p; ++j) xi(j) = normal(rng);
    x.row(i) = xi;
    const double treated = unif(rng) < truth.e(xi) ? 1.0 : 0.0;
    t(i) = treated;
    const double y1 = truth.m1(xi) + sd1 * normal(rng);
    const double y0 = truth.m0(xi) + sd0 * normal(rng);
    y(i) = treated == 1.0 ? y1 : y0;
  }
  return {ObservedData(std::move(y), std::move(t), std::move(x)), truth};
}

double eif_gamma(double y, int t, double m1_at_x, double m0_at_x,
                 double e_at_x) {
  const double plug_in = m1_at_x - m0_at_x;
  if (t == 1) return plug_in + (y - m1_at_x) / e_at_x;
  return plug_in - (y - m0_at_x) / (1.0 - e_at_x);
}

double eif_gamma(double y, int t, Eigen::Ref<const Eigen::VectorXd> x,
                 const OracleNuisance& truth) {
  return eif_gamma(y, t, truth.m1(x), truth.m0(x), truth.e(x));
}

IntervalEstimate oracle_estimator(const ObservedData& data,
                                  const OracleNuisance& truth, double alpha) {
  std::vector<double> rows(data.n());
  for (int i = 0; i < data.n(); ++i) {
    const Eigen::VectorXd x = data.x_row(i);
    rows[i] = eif_gamma(data.y(i), data.t(i), x, truth);
  }
  IntervalEstimate out;
  out.point = stats::mean(rows);
  if (rows.size() < 2) {
    out.ci_lower = out.ci_upper = out.point;
    out.degenerate = true;
    return out;
  }
  const double se = std::sqrt(stats::sample_variance(rows) /
                              static_cast<double>(rows.size()));
  const double z = stats::normal_quantile(1.0 - alpha / 2.0);
  out.ci_lower = out.point - z * se;
  out.ci_upper = out.point + z * se;
  return out;
}

IntervalEstimate naive_estimator(const ObservedData& data, double alpha) {
  std::vector<double> y1, y0;
  for (int i = 0; i < data.n(); ++i)
    (data.t(i) == 1 ? y1 : y0).push_back(data.y(i));
  if (y1.empty()) throw EmptyArmError(1);
  if (y0.empty()) throw EmptyArmError(0);

  IntervalEstimate out;
  out.point = stats::mean(y1) - stats::mean(y0);
  if (y1.size() < 2 || y0.size() < 2) {
    out.ci_lower = out.ci_upper = out.point;
    out.degenerate = true;
    return out;
  }
  const double se =
      std::sqrt(stats::sample_variance(y1) / static_cast<double>(y1.size()) +
                stats::sample_variance(y0) / static_cast<double>(y0.size()));
  const double z = stats::normal_quantile(1.0 - alpha / 2.0);
  out.ci_lower = out.point - z * se;
  out.ci_upper = out.point + z * se;
  return out;
}

namespace {

struct RepRecord {
  bool ok = false;
  double point = 0.0;
  double ci_len = 0.0;
  bool hit = false;
};

RepRecord run_method(const MethodConfig& method, const GeneratedData& gen,
                     const DgpConfig& dgp, std::uint64_t method_seed) {
  RepRecord rec;
  IntervalEstimate est;
  switch (method.kind) {
    case MethodConfig::Kind::oracle:
      est = oracle_estimator(gen.data, gen.truth, method.run.alpha);
      break;
    case MethodConfig::Kind::naive:
      est = naive_estimator(gen.data, method.run.alpha);
      break;
    case MethodConfig::Kind::drdb: {
      RunConfig run = method.run;
      run.seed = method_seed;
      if (run.nuisance.method == NuisanceConfig::Method::oracle)
        run.nuisance.oracle = &gen.truth;
      const PosteriorSummary s = drdb::estimate(gen.data, run);
      est.point = s.mean;
      est.ci_lower = s.ci_lower;
      est.ci_upper = s.ci_upper;
      break;
    }
  }
  rec.ok = true;
  rec.point = est.point;
  rec.ci_len = est.ci_upper - est.ci_lower;
  rec.hit = est.ci_lower <= dgp.true_ate && dgp.true_ate <= est.ci_upper;
  return rec;
}

}  // namespace

std::vector<MetricsRow> run_replications(const DgpConfig& dgp,
                                         const std::vector<MethodConfig>& methods,
                                         int reps, std::uint64_t seed,
                                         int threads) {
  if (reps < 2) throw ConfigError("reps must be at least 2");
  if (methods.empty()) throw ConfigError("no methods configured");

  const int n_methods = static_cast<int>(methods.size());
  // records[rep * n_methods + m]; filled independently per replication so the
  // result does not depend on thread scheduling.
  std::vector<RepRecord> records(static_cast<std::size_t>(reps) * n_methods);

  auto worker_body = [&](int rep) {
    const std::uint64_t rep_seed =
        derive_seed(seed, {rng_domain::kDgp, static_cast<std::uint64_t>(rep)});
    const GeneratedData gen = generate_dgp(dgp, rep_seed);
    for (int m = 0; m < n_methods; ++m) {
      const std::uint64_t method_seed =
          derive_seed(seed, {rng_domain::kMethod,
                             static_cast<std::uint64_t>(rep),
                             static_cast<std::uint64_t>(m)});
      RepRecord rec;
      try {
        rec = run_method(methods[m], gen, dgp, method_seed);
      } catch (const Error&) {
        rec.ok = false;
      }
      records[static_cast<std::size_t>(rep) * n_methods + m] = rec;
    }
  };

  int n_threads = threads > 0 ? threads
                              : static_cast<int>(std::thread::hardware_concurrency());
  if (n_threads < 1) n_threads = 1;
  n_threads = std::min(n_threads, reps);
  if (n_threads == 1) {
    for (int rep = 0; rep < reps; ++rep) worker_body(rep);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int w = 0; w < n_threads; ++w) {
      pool.emplace_back([&] {
        for (int rep = next.fetch_add(1); rep < reps; rep = next.fetch_add(1))
          worker_body(rep);
      });
    }
    for (auto& th : pool) th.join();
  }

  std::vector<MetricsRow> rows;
  rows.reserve(n_methods);
  for (int m = 0; m < n_methods; ++m) {
    MetricsRow row;
    row.method = methods[m].label;
    row.p = dgp.p;
    row.s = dgp.s;
    row.n = dgp.n;
    row.reps = reps;
    double sum_err = 0.0, sum_sq = 0.0, sum_len = 0.0;
    int hits = 0, ok = 0;
    for (int rep = 0; rep < reps; ++rep) {
      const RepRecord& rec = records[static_cast<std::size_t>(rep) * n_methods + m];
      if (!rec.ok) {
        ++row.failures;
        continue;
      }
      ++ok;
      const double err = rec.point - dgp.true_ate;
      sum_err += err;
      sum_sq += err * err;
      sum_len += rec.ci_len;
      if (rec.hit) ++hits;
    }
    if (ok > 0) {
      row.bias = sum_err / ok;
      row.mse = sum_sq / ok;
      row.cov = static_cast<double>(hits) / ok;
      row.ci_len = sum_len / ok;
    }
    row.flagged = row.failures * 100 > reps;
    rows.push_back(row);
  }
  return rows;
}

void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRow>& rows) {
  std::ofstream out(path);
  if (!out)
    throw Error(ErrorCategory::validation, "cannot write file: " + path);
  out << "method,p,s,n,reps,bias,mse,cov,ci_len,failures\n";
  out.precision(10);
  for (const auto& r : rows) {
    out << r.method << ',' << r.p << ',' << r.s << ',' << r.n << ',' << r.reps
        << ',' << r.bias << ',' << r.mse << ',' << r.cov << ',' << r.ci_len
        << ',' << r.failures << '\n';
  }
}

std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::validation, "cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line))
    throw Error(ErrorCategory::validation, "empty metrics file: " + path);

  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    MetricsRow r;
    std::getline(ss, r.method, ',');
    auto next_num = [&]() {
      std::getline(ss, field, ',');
      return std::stod(field);
    };
    r.p = static_cast<int>(next_num());
    r.s = static_cast<int>(next_num());
    r.n = static_cast<int>(next_num());
    r.reps = static_cast<int>(next_num());
    r.bias = next_num();
    r.mse = next_num();
    r.cov = next_num();
    r.ci_len = next_num();
    r.failures = static_cast<int>(next_num());
    r.flagged = r.failures * 100 > r.reps;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace drdb::bench
