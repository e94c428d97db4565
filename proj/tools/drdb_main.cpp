#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "drdb/bench.hpp"
#include "drdb/csv.hpp"
#include "drdb/errors.hpp"
#include "drdb/estimate.hpp"
#include "drdb/serialize.hpp"

namespace {

using drdb::Error;
using drdb::ErrorCategory;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitEstimation = 3;

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw drdb::ConfigError("cannot open config file: " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw drdb::ConfigError("cannot parse " + path + ": " + e.what());
  }
}

int default_threads() {
  if (const char* env = std::getenv("DRDB_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 0;  // run_replications falls back to hardware concurrency
}

struct EstimateArgs {
  std::string data_path;
  std::string estimand;
  std::string nuisance;  // "ridge" or a path to a nuisance JSON block
  std::string config_path;
  std::string out_path;
  int folds = 0;
  int draws = 0;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  bool folds_set = false, draws_set = false, alpha_set = false,
       seed_set = false, estimand_set = false, nuisance_set = false;
};

int cmd_estimate(const EstimateArgs& args) {
  drdb::ParsedRunConfig parsed;
  if (!args.config_path.empty())
    parsed = drdb::run_config_from_json(load_json_file(args.config_path));

  // Flags override config-file values.
  drdb::RunConfig& cfg = parsed.run;
  if (args.folds_set) cfg.k = args.folds;
  if (args.draws_set) cfg.m_draws = args.draws;
  if (args.alpha_set) cfg.alpha = args.alpha;
  if (args.seed_set) cfg.seed = args.seed;
  if (args.estimand_set) cfg.estimand = drdb::parse_estimand(args.estimand);
  if (args.nuisance_set) {
    if (args.nuisance == "ridge") {
      cfg.nuisance = drdb::NuisanceConfig{};
      parsed.oracle_storage.reset();
    } else {
      json block = load_json_file(args.nuisance);
      drdb::ParsedRunConfig nu;
      nu.run = cfg;
      nu.run.nuisance = drdb::NuisanceConfig{};
      json wrapper;
      wrapper["nuisance"] = block;
      auto reparsed = drdb::run_config_from_json(wrapper);
      cfg.nuisance = reparsed.run.nuisance;
      parsed.oracle_storage = reparsed.oracle_storage;
    }
  }

  const drdb::ObservedData data = drdb::load_csv(args.data_path);
  const drdb::PosteriorSummary summary = drdb::estimate(data, cfg);
  const json out = drdb::summary_to_json(summary);
  if (args.out_path.empty()) {
    std::cout << out.dump(2) << "\n";
  } else {
    std::ofstream f(args.out_path);
    if (!f) throw drdb::ConfigError("cannot write output file: " + args.out_path);
    f << out.dump(2) << "\n";
  }
  return kExitOk;
}

int cmd_simulate(const std::string& config_path, const std::string& out_path) {
  const drdb::SimulateConfig cfg =
      drdb::simulate_config_from_json(load_json_file(config_path));
  const int threads = cfg.threads > 0 ? cfg.threads : default_threads();

  std::vector<drdb::bench::MetricsRow> rows;
  for (const auto& dgp : cfg.dgps) {
    auto dgp_rows = drdb::bench::run_replications(dgp, cfg.methods, cfg.reps,
                                                  cfg.seed, threads);
    rows.insert(rows.end(), dgp_rows.begin(), dgp_rows.end());
  }
  for (const auto& row : rows) {
    if (row.flagged)
      std::cerr << "warning: method " << row.method << " failed on "
                << row.failures << "/" << row.reps << " replications\n";
  }
  drdb::bench::write_metrics_csv(out_path, rows);
  return kExitOk;
}

int cmd_report(const std::string& metrics_path, bool markdown) {
  const auto rows = drdb::bench::read_metrics_csv(metrics_path);
  if (markdown) {
    std::printf("| Method | Bias | MSE | Cov | CI-Len | p | s | n | reps | failures |\n");
    std::printf("|---|---|---|---|---|---|---|---|---|---|\n");
    for (const auto& r : rows)
      std::printf("| %s | %.3f | %.3f | %.3f | %.3f | %d | %d | %d | %d | %d |\n",
                  r.method.c_str(), r.bias, r.mse, r.cov, r.ci_len, r.p, r.s,
                  r.n, r.reps, r.failures);
    return kExitOk;
  }
  std::size_t width = 6;
  for (const auto& r : rows) width = std::max(width, r.method.size());
  std::printf("%-*s %8s %8s %8s %8s %6s %4s %6s %6s %9s\n",
              static_cast<int>(width), "Method", "Bias", "MSE", "Cov", "CI-Len",
              "p", "s", "n", "reps", "failures");
  for (const auto& r : rows)
    std::printf("%-*s %8.3f %8.3f %8.3f %8.3f %6d %4d %6d %6d %9d\n",
                static_cast<int>(width), r.method.c_str(), r.bias, r.mse, r.cov,
                r.ci_len, r.p, r.s, r.n, r.reps, r.failures);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Doubly robust debiased Bayesian inference for treatment effects"};
  app.require_subcommand(1);

  EstimateArgs eargs;
  auto* est = app.add_subcommand("estimate",
                                 "Posterior inference on a CSV dataset");
  est->add_option("--data", eargs.data_path, "CSV file with columns y,t,x1..xp")
      ->required();
  auto* f_estimand = est->add_option(
      "--estimand", eargs.estimand,
      "ate|att|atc|mu1|mu0|subgroup:xJ>DELTA (default ate)");
  auto* f_folds = est->add_option("--folds", eargs.folds, "cross-fitting folds");
  auto* f_draws = est->add_option("--draws", eargs.draws, "posterior draws");
  auto* f_alpha = est->add_option("--alpha", eargs.alpha, "credible level complement");
  auto* f_seed = est->add_option("--seed", eargs.seed, "master RNG seed");
  auto* f_nuis = est->add_option(
      "--nuisance", eargs.nuisance,
      "'ridge' or a path to a nuisance JSON block (may define an oracle)");
  est->add_option("--config", eargs.config_path, "run config JSON file");
  est->add_option("--out", eargs.out_path, "output JSON path (default stdout)");

  std::string sim_config, sim_out = "metrics.csv";
  auto* sim = app.add_subcommand("simulate", "Monte Carlo replication campaign");
  sim->add_option("--config", sim_config, "campaign config JSON file")->required();
  sim->add_option("--out", sim_out, "metrics CSV output path");

  std::string report_path;
  bool markdown = false;
  auto* rep = app.add_subcommand("report", "Format a metrics CSV as a table");
  rep->add_option("metrics", report_path, "metrics CSV file")->required();
  rep->add_flag("--markdown", markdown, "emit a Markdown table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitValidation;
  }

  eargs.folds_set = f_folds->count() > 0;
  eargs.draws_set = f_draws->count() > 0;
  eargs.alpha_set = f_alpha->count() > 0;
  eargs.seed_set = f_seed->count() > 0;
  eargs.estimand_set = f_estimand->count() > 0;
  eargs.nuisance_set = f_nuis->count() > 0;

  try {
    if (est->parsed()) return cmd_estimate(eargs);
    if (sim->parsed()) return cmd_simulate(sim_config, sim_out);
    if (rep->parsed()) return cmd_report(report_path, markdown);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return e.category() == ErrorCategory::validation ? kExitValidation
                                                     : kExitEstimation;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitEstimation;
  }
  return kExitOk;
}
