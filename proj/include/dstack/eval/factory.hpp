#pragma once

#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "dstack/eval/agents.hpp"
#include "dstack/lookahead/oracle.hpp"
#include "dstack/resolving/continual.hpp"
#include "dstack/solver/cfr.hpp"
#include "dstack/valuenet/model_valuefn.hpp"

namespace dstack {

// Settings for agents built by name.
struct AgentOptions {
  int resolve_iterations = 1000;
  int resolve_omitted = -1;  // -1: half of the iterations
  int oracle_iterations = 400;
  int oracle_omitted = -1;  // -1: half of the iterations
  std::string model;        // value-network file; empty uses the oracle
  int equilibrium_iterations = 10000;
  std::shared_ptr<ResolveCache> cache;  // shared first-round cache
};

inline std::string agent_names() {
  return "always-fold, always-call, always-raise, uniform, equilibrium, resolve, profile:<strategy dump>";
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Builds an agent from its name (see agent_names()).
inline AgentPtr make_agent(GamePtr game, const std::string& spec, const AgentOptions& opt = {}) {
  auto policy = [&](std::shared_ptr<const Policy> p) { return std::make_shared<PolicyAgent>(game, spec, std::move(p)); };
  if (spec == "always-fold" || spec == "fold") return policy(std::make_shared<FoldPolicy>(game));
  if (spec == "always-call" || spec == "call") return policy(std::make_shared<CallPolicy>(game));
  if (spec == "always-raise" || spec == "raise") return policy(std::make_shared<RaisePolicy>(game));
  if (spec == "uniform") return policy(std::make_shared<UniformPolicy>(game));
  if (spec == "equilibrium") {
    SolveConfig sc;
    sc.iterations = opt.equilibrium_iterations;
    sc.depth_limit = DepthLimit::kFullGame;
    const Range u = uniform_range(*game);
    return policy(std::make_shared<StrategyProfile>(cfr_solve(game, initial_state(*game), u, u, sc, nullptr).profile));
  }
  if (spec.rfind("profile:", 0) == 0)
    return policy(std::make_shared<StrategyProfile>(StrategyProfile::parse_dump(game, read_text_file(spec.substr(8)))));
  if (spec == "resolve" || spec == "resolve-agent") {
    ResolveConfig rc;
    rc.iterations = opt.resolve_iterations;
    rc.omitted = opt.resolve_omitted < 0 ? opt.resolve_iterations / 2 : opt.resolve_omitted;
    ValueFnPtr vf;
    if (!opt.model.empty()) {
      vf = std::make_shared<ModelValueFn>(game, std::make_shared<CfvModel>(CfvModel::load(opt.model)));
    } else {
      OracleConfig oc;
      oc.iterations = opt.oracle_iterations;
      oc.omitted = opt.oracle_omitted < 0 ? opt.oracle_iterations / 2 : opt.oracle_omitted;
      vf = oracle_valuefn(game, oc);
    }
    return std::make_shared<ResolveAgent>(game, std::make_shared<ContinualResolver>(game, rc, vf, opt.cache), "resolve");
  }
  throw Error("unknown agent '" + spec + "' (known: " + agent_names() + ")");
}

}  // namespace dstack
