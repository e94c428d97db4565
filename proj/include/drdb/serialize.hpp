#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "drdb/bench.hpp"
#include "drdb/estimate.hpp"

namespace drdb {

nlohmann::json summary_to_json(const PosteriorSummary& summary);

/// RunConfig parsed from JSON, together with owned storage for any
/// file-specified oracle nuisance functions.
struct ParsedRunConfig {
  RunConfig run;
  std::shared_ptr<OracleNuisance> oracle_storage;
};

/// Accepted keys: k, m_draws, alpha, seed, estimand, nuisance. The nuisance
/// block holds {method, lambda ("cv" or a number), lambda_e, clip, p1_source,
/// outcome_features}; when method is "oracle" it also carries the linear
/// coefficient specs m1/m0/e (each {intercept, coef: [...]}) and p1.
ParsedRunConfig run_config_from_json(const nlohmann::json& j);

struct SimulateConfig {
  std::vector<bench::DgpConfig> dgps;
  std::vector<bench::MethodConfig> methods;
  int reps = 0;
  std::uint64_t seed = 0;
  int threads = 0;
};

SimulateConfig simulate_config_from_json(const nlohmann::json& j);

}  // namespace drdb
