#include "drdb/estimands.hpp"

#include <charconv>
#include <sstream>

#include "drdb/errors.hpp"

namespace drdb {

std::string EstimandSpec::label() const {
  switch (kind) {
    case Estimand::ate: return "ate";
    case Estimand::mu1: return "mu1";
    case Estimand::mu0: return "mu0";
    case Estimand::att: return "att";
    case Estimand::atc: return "atc";
    case Estimand::subgroup: {
      std::ostringstream os;
      os << "subgroup:x" << rule->covariate << (rule->greater ? ">" : "<=")
         << rule->threshold;
      return os.str();
    }
  }
  return "ate";
}

EstimandSpec parse_estimand(const std::string& text) {
  if (text == "ate") return EstimandSpec::ate();
  if (text == "att") return EstimandSpec::att();
  if (text == "atc") return EstimandSpec::atc();
  if (text == "mu1") return EstimandSpec::mu1();
  if (text == "mu0") return EstimandSpec::mu0();
  const std::string prefix = "subgroup:x";
  if (text.rfind(prefix, 0) == 0) {
    const std::string rest = text.substr(prefix.size());
    std::size_t op_pos = rest.find("<=");
    bool greater = false;
    std::size_t op_len = 2;
    if (op_pos == std::string::npos) {
      op_pos = rest.find('>');
      greater = true;
      op_len = 1;
    }
    if (op_pos != std::string::npos && op_pos > 0) {
      SubgroupRule rule;
      rule.greater = greater;
      const auto* jb = rest.data();
      const auto* je = rest.data() + op_pos;
      const auto jr = std::from_chars(jb, je, rule.covariate);
      const std::string delta = rest.substr(op_pos + op_len);
      char* dend = nullptr;
      rule.threshold = std::strtod(delta.c_str(), &dend);
      if (jr.ec == std::errc() && jr.ptr == je && rule.covariate >= 1 &&
          dend == delta.c_str() + delta.size() && !delta.empty())
        return EstimandSpec::subgroup(rule);
    }
  }
  throw ConfigError("unknown estimand '" + text +
                    "' (expected ate|att|atc|mu1|mu0|subgroup:xJ>DELTA)");
}

double subgroup_share(const SubgroupRule& rule, const ObservedData& data,
                      const std::vector<int>& rows) {
  if (rows.empty()) throw TooFewRowsError("subgroup share needs rows");
  double count = 0.0;
  for (int i : rows) {
    const Eigen::VectorXd x = data.x_row(i);
    if (rule.contains(x)) count += 1.0;
  }
  return count / static_cast<double>(rows.size());
}

TargetWeights build_weights(const EstimandSpec& spec,
                            const NuisanceDraw& e_draw, double p1_hat,
                            std::optional<double> pA_hat) {
  if (!(p1_hat > 0.0 && p1_hat < 1.0))
    throw ConfigError("p1_hat must lie in (0, 1)");
  const auto e = e_draw.evaluate;
  TargetWeights tw;

  switch (spec.kind) {
    case Estimand::ate:
    case Estimand::mu1:
    case Estimand::mu0:
      // Trivial subpopulation: P(A|X) = P(A) = 1.
      tw.pA_hat = 1.0;
      tw.w = [](Eigen::Ref<const Eigen::VectorXd>) { return 1.0; };
      tw.r1 = [e, p1_hat](Eigen::Ref<const Eigen::VectorXd> x) {
        return p1_hat / e(x);
      };
      tw.r0 = [e, p1_hat](Eigen::Ref<const Eigen::VectorXd> x) {
        return (1.0 - p1_hat) / (1.0 - e(x));
      };
      return tw;

    case Estimand::att:
      // A = {T = 1}: P(A|X) = e(X), P(A) = p1.
      tw.pA_hat = p1_hat;
      tw.w = [e, p1_hat](Eigen::Ref<const Eigen::VectorXd> x) {
        return e(x) / p1_hat;
      };
      tw.r1 = [](Eigen::Ref<const Eigen::VectorXd>) { return 1.0; };
      tw.r0 = [e, p1_hat](Eigen::Ref<const Eigen::VectorXd> x) {
        const double ex = e(x);
        return (ex * (1.0 - p1_hat)) / (p1_hat * (1.0 - ex));
      };
      return tw;

    case Estimand::atc:
      // A = {T = 0}: mirror of the ATT.
      tw.pA_hat = 1.0 - p1_hat;
      tw.w = [e, p1_hat](Eigen::Ref<const Eigen::VectorXd> x) {
        return (1.0 - e(x)) / (1.0 - p1_hat);
      };
      tw.r1 = [e, p1_hat](Eigen::Ref<const Eigen::VectorXd> x) {
        const double ex = e(x);
        return ((1.0 - ex) * p1_hat) / ((1.0 - p1_hat) * ex);
      };
      tw.r0 = [](Eigen::Ref<const Eigen::VectorXd>) { return 1.0; };
      return tw;

    case Estimand::subgroup: {
      // A depends on X only through a known rule, so P(A|X) is the exact
      // indicator and no subgroup regression is needed.
      if (!spec.rule) throw ConfigError("subgroup estimand needs a rule");
      if (!pA_hat) throw ConfigError("subgroup estimand needs the subgroup share");
      if (!(*pA_hat > 0.0))
        throw EmptySubgroupError("estimated subgroup probability is zero");
      const SubgroupRule rule = *spec.rule;
      const double pa = *pA_hat;
      tw.pA_hat = pa;
      tw.w = [rule, pa](Eigen::Ref<const Eigen::VectorXd> x) {
        return rule.contains(x) ? 1.0 / pa : 0.0;
      };
      tw.r1 = [rule, pa, e, p1_hat](Eigen::Ref<const Eigen::VectorXd> x) {
        return rule.contains(x) ? p1_hat / (pa * e(x)) : 0.0;
      };
      tw.r0 = [rule, pa, e, p1_hat](Eigen::Ref<const Eigen::VectorXd> x) {
        return rule.contains(x) ? (1.0 - p1_hat) / (pa * (1.0 - e(x))) : 0.0;
      };
      return tw;
    }
  }
  throw ConfigError("unhandled estimand kind");
}

}  // namespace drdb
