#include "drdb/serialize.hpp"

#include "drdb/errors.hpp"
#include "drdb/stats.hpp"

namespace drdb {

using nlohmann::json;

json summary_to_json(const PosteriorSummary& s) {
  json j;
  j["estimand"] = s.estimand;
  j["mean"] = s.mean;
  if (s.variance)
    j["variance"] = *s.variance;
  else
    j["variance"] = nullptr;
  j["ci"] = {s.ci_lower, s.ci_upper};
  j["alpha"] = s.alpha;
  j["k"] = s.k;
  j["m_draws"] = s.m_draws;
  j["seed"] = s.seed;
  j["cf_mean"] = s.cf_mean;
  j["per_fold"] = json::array();
  for (const auto& f : s.per_fold) {
    json jf;
    jf["fold"] = f.fold;
    jf["eta_m"] = f.eta_m;
    if (f.eta1) jf["eta1"] = *f.eta1;
    if (f.eta0) jf["eta0"] = *f.eta0;
    jf["c_s2"] = f.c_s2;
    jf["nu_s"] = f.nu_s;
    jf["n1"] = f.n1;
    jf["n0"] = f.n0;
    jf["p1_hat"] = f.p1_hat;
    j["per_fold"].push_back(jf);
  }
  return j;
}

namespace {

std::function<double(Eigen::Ref<const Eigen::VectorXd>)> affine_from_json(
    const json& j, const std::string& name) {
  if (!j.contains("intercept") || !j.contains("coef"))
    throw ConfigError("oracle spec '" + name + "' needs intercept and coef");
  const double intercept = j.at("intercept").get<double>();
  const auto coefs = j.at("coef").get<std::vector<double>>();
  Eigen::VectorXd beta(coefs.size());
  for (std::size_t i = 0; i < coefs.size(); ++i) beta(i) = coefs[i];
  return [intercept, beta](Eigen::Ref<const Eigen::VectorXd> x) {
    if (x.size() != beta.size())
      throw ConfigError("oracle coefficient length does not match p");
    return intercept + beta.dot(x);
  };
}

NuisanceConfig::P1Source p1_source_from_string(const std::string& s) {
  if (s == "train") return NuisanceConfig::P1Source::train;
  if (s == "full") return NuisanceConfig::P1Source::full;
  if (s == "test") return NuisanceConfig::P1Source::test;
  throw ConfigError("p1_source must be train|full|test, got '" + s + "'");
}

// `storage` empty means an oracle method carries no function specs in the
// file (campaigns inject each replication's truth instead).
void parse_nuisance(const json& j, NuisanceConfig& nc,
                    std::shared_ptr<OracleNuisance>* storage) {
  if (j.contains("method")) {
    const auto m = j.at("method").get<std::string>();
    if (m == "ridge") {
      nc.method = NuisanceConfig::Method::ridge;
    } else if (m == "oracle") {
      nc.method = NuisanceConfig::Method::oracle;
    } else {
      throw ConfigError("nuisance method must be ridge|oracle, got '" + m + "'");
    }
  }
  if (j.contains("lambda")) {
    const auto& l = j.at("lambda");
    if (l.is_string()) {
      if (l.get<std::string>() != "cv")
        throw ConfigError("lambda must be a number or \"cv\"");
      nc.lambda.reset();
    } else {
      nc.lambda = l.get<double>();
    }
  }
  if (j.contains("lambda_e")) nc.lambda_e = j.at("lambda_e").get<double>();
  if (j.contains("clip")) nc.clip = j.at("clip").get<double>();
  if (j.contains("p1_source"))
    nc.p1_source = p1_source_from_string(j.at("p1_source").get<std::string>());
  if (j.contains("outcome_features")) {
    const auto f = j.at("outcome_features").get<std::string>();
    if (f == "linear") {
      nc.quadratic_outcome = false;
    } else if (f == "quadratic") {
      nc.quadratic_outcome = true;
    } else {
      throw ConfigError("outcome_features must be linear|quadratic");
    }
  }
  if (nc.method == NuisanceConfig::Method::oracle && storage != nullptr) {
    if (!j.contains("m1") || !j.contains("m0") || !j.contains("e"))
      throw ConfigError("oracle nuisance config needs m1, m0 and e specs");
    auto oracle = std::make_shared<OracleNuisance>();
    oracle->m1 = affine_from_json(j.at("m1"), "m1");
    oracle->m0 = affine_from_json(j.at("m0"), "m0");
    auto linear = affine_from_json(j.at("e"), "e");
    oracle->e = [linear](Eigen::Ref<const Eigen::VectorXd> x) {
      return stats::logistic(linear(x));
    };
    oracle->p1 = j.value("p1", 0.5);
    nc.oracle = oracle.get();
    *storage = std::move(oracle);
  }
}

}  // namespace

ParsedRunConfig run_config_from_json(const json& j) {
  ParsedRunConfig out;
  RunConfig& cfg = out.run;
  if (j.contains("k")) cfg.k = j.at("k").get<int>();
  if (j.contains("m_draws")) cfg.m_draws = j.at("m_draws").get<int>();
  if (j.contains("alpha")) cfg.alpha = j.at("alpha").get<double>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("estimand"))
    cfg.estimand = parse_estimand(j.at("estimand").get<std::string>());
  if (j.contains("nuisance"))
    parse_nuisance(j.at("nuisance"), cfg.nuisance, &out.oracle_storage);
  return out;
}

SimulateConfig simulate_config_from_json(const json& j) {
  SimulateConfig out;

  auto parse_dgp = [](const json& jd) {
    const int p = jd.value("p", 10);
    const int s = jd.value("s", 3);
    const int n = jd.value("n", 1000);
    const std::string family = jd.value("family", "linear");
    bench::DgpConfig::Family f;
    if (family == "linear") {
      f = bench::DgpConfig::Family::linear;
    } else if (family == "quadratic") {
      f = bench::DgpConfig::Family::quadratic;
    } else {
      throw ConfigError("dgp family must be linear|quadratic");
    }
    return bench::DgpConfig::make(n, p, s, f);
  };
  if (j.contains("dgps")) {
    for (const auto& jd : j.at("dgps")) out.dgps.push_back(parse_dgp(jd));
  } else if (j.contains("dgp")) {
    out.dgps.push_back(parse_dgp(j.at("dgp")));
  } else {
    throw ConfigError("simulate config needs a dgp or dgps entry");
  }

  if (!j.contains("methods") || !j.at("methods").is_array() ||
      j.at("methods").empty())
    throw ConfigError("simulate config needs a nonempty methods array");
  for (const auto& jm : j.at("methods")) {
    bench::MethodConfig mc;
    const auto name = jm.at("name").get<std::string>();
    if (name == "oracle") {
      mc.kind = bench::MethodConfig::Kind::oracle;
    } else if (name == "naive") {
      mc.kind = bench::MethodConfig::Kind::naive;
    } else if (name == "drdb") {
      mc.kind = bench::MethodConfig::Kind::drdb;
    } else {
      throw ConfigError("method name must be oracle|naive|drdb, got '" + name + "'");
    }
    if (mc.kind == bench::MethodConfig::Kind::drdb) {
      if (jm.contains("k")) mc.run.k = jm.at("k").get<int>();
      if (jm.contains("m_draws")) mc.run.m_draws = jm.at("m_draws").get<int>();
      if (jm.contains("alpha")) mc.run.alpha = jm.at("alpha").get<double>();
      if (jm.contains("estimand"))
        mc.run.estimand = parse_estimand(jm.at("estimand").get<std::string>());
      // An oracle nuisance method in a campaign uses each replication's true
      // functions, so no function specs are read here.
      if (jm.contains("nuisance"))
        parse_nuisance(jm.at("nuisance"), mc.run.nuisance, nullptr);
    }
    if (jm.contains("alpha") && mc.kind != bench::MethodConfig::Kind::drdb)
      mc.run.alpha = jm.at("alpha").get<double>();
    mc.label = jm.value("label", std::string());
    if (mc.label.empty()) {
      if (mc.kind == bench::MethodConfig::Kind::drdb) {
        mc.label = mc.run.nuisance.method == NuisanceConfig::Method::oracle
                       ? "drdb-oracle"
                       : (mc.run.nuisance.quadratic_outcome ? "drdb-ridge-q"
                                                            : "drdb-ridge");
      } else {
        mc.label = name;
      }
    }
    out.methods.push_back(mc);
  }

  out.reps = j.value("reps", 0);
  if (out.reps < 2) throw ConfigError("reps >= 2 required");
  out.seed = j.value("seed", std::uint64_t{12345});
  out.threads = j.value("threads", 0);
  return out;
}

}  // namespace drdb
