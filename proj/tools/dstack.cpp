// Command-line entry point: solve, resolve-eval, gen-data, train, lbr, match,
// exploit and serve. Exit codes: 0 success, 1 user error, 2 internal error.

#include <csignal>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>

#include "CLI11.hpp"
#include "json.hpp"

#include "dstack/core/game_spec.hpp"
#include "dstack/core/log.hpp"
#include "dstack/eval/factory.hpp"
#include "dstack/eval/lbr.hpp"
#include "dstack/eval/match.hpp"
#include "dstack/service/server.hpp"
#include "dstack/solver/best_response.hpp"
#include "dstack/solver/cfr.hpp"
#include "dstack/valuenet/dataset.hpp"
#include "dstack/valuenet/train.hpp"
#include "dstack/version.hpp"

namespace fs = std::filesystem;
using namespace dstack;

namespace {

// Bad invocation detected after parsing.
class UsageError : public Error {
 public:
  using Error::Error;
};

std::string fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct Globals {
  std::string game = "leduc";
  std::uint64_t seed = 1;
  std::string out = "out";
  AgentOptions agent;
};

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  if (!f) throw Error("cannot write '" + p.string() + "'");
  f << text;
}

// Manifest next to the outputs: enough to rerun the command.
void write_manifest(const CLI::App& app, const std::string& command, const Globals& g, int argc, char** argv) {
  const std::string config = app.config_to_str(true, false);
  std::vector<std::string> args(argv, argv + argc);
  const nlohmann::json m{{"command", command},       {"version", kVersion}, {"seed", g.seed},
                         {"game", g.game},           {"config_hash", fnv1a(config)},
                         {"config", config},         {"argv", args}};
  write_file(fs::path(g.out) / ("manifest-" + command + ".json"), m.dump(2) + "\n");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dstack: continual re-solving, evaluation and play for two-player poker"};
  app.set_config("--config", "", "INI/TOML config file; command-line flags override it");
  app.require_subcommand(1);
  Globals g;
  app.add_option("--game", g.game, "kuhn, leduc, leduc-nl, hunl or a game config file")->capture_default_str();
  app.add_option("--seed", g.seed, "global seed")->capture_default_str();
  app.add_option("--out", g.out, "output directory")->capture_default_str();

  // solve
  int solve_iters = 10000, solve_omit = 0;
  auto* solve = app.add_subcommand("solve", "full-game CFR+ solve, strategy dump and exploitability");
  solve->add_option("--iters", solve_iters, "iterations")->capture_default_str();
  solve->add_option("--omit", solve_omit, "early iterations left out of the average")->capture_default_str();

  // resolve-eval
  std::vector<int> sweep;
  auto* reval = app.add_subcommand("resolve-eval", "exploitability of the re-solving agent versus re-solve iterations");
  reval->add_option("--sweep", sweep, "re-solve iteration counts, e.g. 100,500,2000")->delimiter(',');

  // gen-data
  int data_round = 1, data_n = 1000, target_iters = 1000, target_omit = 0, threads = 0;
  std::string target_menu = "F,C,P,A";
  auto* gen = app.add_subcommand("gen-data", "generate value-network training data");
  gen->add_option("--round", data_round, "round the situations start")->capture_default_str();
  gen->add_option("--examples", data_n, "number of situations")->capture_default_str();
  gen->add_option("--iters", target_iters, "solver iterations per situation")->capture_default_str();
  gen->add_option("--omit", target_omit, "omitted early iterations")->capture_default_str();
  gen->add_option("--menu", target_menu, "action menu of the target solves")->capture_default_str();
  gen->add_option("--threads", threads, "worker threads (0: hardware)")->capture_default_str();

  // train
  std::string data_path;
  TrainConfig tc;
  auto* train_cmd = app.add_subcommand("train", "train a counterfactual value network");
  train_cmd->add_option("--data", data_path, "dataset file")->required();
  train_cmd->add_option("--epochs", tc.epochs)->capture_default_str();
  train_cmd->add_option("--buckets", tc.buckets, "0: one per hand")->capture_default_str();
  train_cmd->add_option("--layers", tc.layers)->capture_default_str();
  train_cmd->add_option("--width", tc.width)->capture_default_str();
  train_cmd->add_option("--batch", tc.batch)->capture_default_str();
  train_cmd->add_option("--lr", tc.lr)->capture_default_str();
  train_cmd->add_option("--decay-epoch", tc.decay_epoch)->capture_default_str();

  // agent options shared by lbr, match, exploit, serve and resolve-eval
  auto agent_flags = [&](CLI::App* c) {
    c->add_option("--resolve-iters", g.agent.resolve_iterations, "re-solve iterations")->capture_default_str();
    c->add_option("--oracle-iters", g.agent.oracle_iterations, "oracle value-function iterations")->capture_default_str();
    c->add_option("--model", g.agent.model, "value-network file replacing the oracle");
    c->add_option("--eq-iters", g.agent.equilibrium_iterations, "iterations for the equilibrium agent")->capture_default_str();
  };
  agent_flags(reval);

  std::string agent_spec = "resolve", lbr_spec = "FCPA", a_spec = "resolve", b_spec = "always-fold";
  long hands = 1000;
  bool no_duplicate = false;
  auto* lbr = app.add_subcommand("lbr", "local best response against an agent");
  lbr->add_option("--agent", agent_spec, agent_names())->capture_default_str();
  lbr->add_option("--lbr", lbr_spec, "FC, FCPA, 56bets or per-round sets 'F,C,P,A;F,C'")->capture_default_str();
  lbr->add_option("--hands", hands)->capture_default_str();
  agent_flags(lbr);

  auto* match = app.add_subcommand("match", "play two agents against each other");
  match->add_option("--a", a_spec, agent_names())->capture_default_str();
  match->add_option("--b", b_spec, agent_names())->capture_default_str();
  match->add_option("--hands", hands)->capture_default_str();
  match->add_flag("--no-duplicate", no_duplicate, "deal every hand fresh instead of in duplicate blocks");
  agent_flags(match);

  auto* exploit = app.add_subcommand("exploit", "exact exploitability of an agent (small games)");
  exploit->add_option("--agent", agent_spec, agent_names())->capture_default_str();
  agent_flags(exploit);

  int port = 7600, health_port = 7601;
  double budget_ms = 0;
  auto* serve = app.add_subcommand("serve", "host an agent for remote players");
  serve->add_option("--agent", agent_spec, agent_names())->capture_default_str();
  serve->add_option("--port", port, "protocol port")->capture_default_str();
  serve->add_option("--health-port", health_port, "HTTP health port (-1 disables)")->capture_default_str();
  serve->add_option("--budget-ms", budget_ms, "agent time budget per decision (0: none)")->capture_default_str();
  agent_flags(serve);

  for (auto* c : app.get_subcommands({})) c->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    const GamePtr game = make_game(g.game);
    fs::create_directories(g.out);
    const fs::path out(g.out);
    const auto t0 = std::chrono::steady_clock::now();

    if (*solve) {
      SolveConfig sc;
      sc.iterations = solve_iters;
      sc.omitted = solve_omit;
      sc.depth_limit = DepthLimit::kFullGame;
      const Range u = uniform_range(*game);
      const auto res = cfr_solve(game, initial_state(*game), u, u, sc, nullptr);
      const auto rep = best_response(game, res.profile);
      write_file(out / "strategy.txt", res.profile.dump());
      write_manifest(app, "solve", g, argc, argv);
      std::cout << "game=" << game->name() << " iterations=" << solve_iters << " exploitability_mbb=" << rep.mbb
                << " br0=" << rep.br[0] << " br1=" << rep.br[1] << " seconds=" << seconds_since(t0) << std::endl;
      return 0;
    }

    if (*reval) {
      if (sweep.empty()) throw UsageError("resolve-eval needs a non-empty --sweep");
      for (int t : sweep)
        if (t <= 0) throw UsageError("--sweep values must be positive");
      ValueFnPtr vf;
      if (!g.agent.model.empty()) {
        vf = std::make_shared<ModelValueFn>(game, std::make_shared<CfvModel>(CfvModel::load(g.agent.model)));
      } else {
        OracleConfig oc;
        oc.iterations = g.agent.oracle_iterations;
        oc.omitted = g.agent.oracle_iterations / 2;
        vf = oracle_valuefn(game, oc);
      }
      std::ostringstream csv;
      csv << "iterations,exploitability_mbb,br0,br1,seconds\n";
      std::cout << "iterations,exploitability_mbb,br0,br1,seconds" << std::endl;
      for (int t : sweep) {
        const auto t1 = std::chrono::steady_clock::now();
        ResolveConfig rc;
        rc.iterations = t;
        rc.omitted = t / 2;
        ContinualResolver r(game, rc, vf);
        StrategyProfile prof(game);
        for (int seat = 0; seat < 2; ++seat) extract_strategy(r, seat, prof);
        const auto rep = best_response(game, prof);
        std::ostringstream row;
        row << t << ',' << rep.mbb << ',' << rep.br[0] << ',' << rep.br[1] << ',' << seconds_since(t1);
        csv << row.str() << '\n';
        std::cout << row.str() << std::endl;
      }
      write_file(out / "resolve_eval.csv", csv.str());
      write_manifest(app, "resolve-eval", g, argc, argv);
      return 0;
    }

    if (*gen) {
      TargetConfig cfg;
      cfg.iterations = target_iters;
      cfg.omitted = target_omit;
      cfg.menu = ActionMenu::parse(target_menu);
      cfg.threads = threads;
      log_line(1, "generating ", data_n, " situations for round ", data_round);
      const Dataset d = generate_dataset(game, data_round, data_n, g.seed, cfg);
      save_dataset(d, (out / "dataset.bin").string());
      write_manifest(app, "gen-data", g, argc, argv);
      std::cout << "examples=" << d.examples.size() << " path=" << (out / "dataset.bin").string()
                << " seconds=" << seconds_since(t0) << std::endl;
      return 0;
    }

    if (*train_cmd) {
      tc.seed = g.seed;
      const Dataset d = load_dataset(data_path);
      const auto res = train(game, d, tc, [](int epoch, double tl, double vl) {
        log_line(epoch % 10 == 9 ? 1 : 2, "epoch ", epoch + 1, " train ", tl, " validation ", vl);
      });
      const std::string text = res.model.save_text();
      write_file(out / "model.txt", text);
      write_manifest(app, "train", g, argc, argv);
      std::cout << "best_epoch=" << res.best_epoch + 1 << " validation_loss=" << res.best_validation
                << " model_hash=" << fnv1a(text) << " path=" << (out / "model.txt").string() << std::endl;
      return 0;
    }

    if (*lbr) {
      auto agent = make_agent(game, agent_spec, g.agent);
      std::ofstream log(out / "lbr_hands.log");
      const auto rep = lbr_play(game, *agent, LbrConfig::parse(lbr_spec), hands, g.seed, &log);
      write_manifest(app, "lbr", g, argc, argv);
      std::cout << rep.str() << '\n' << rep.kv() << std::flush;
      return 0;
    }

    if (*match) {
      auto a = make_agent(game, a_spec, g.agent);
      auto b = make_agent(game, b_spec, g.agent);
      std::ofstream log(out / "match_hands.log");
      MatchConfig mc;
      mc.hands = hands;
      mc.seed = g.seed;
      mc.duplicate = !no_duplicate;
      mc.log = &log;
      const auto rep = run_match(game, *a, *b, mc);
      write_manifest(app, "match", g, argc, argv);
      std::cout << rep.str() << '\n' << rep.kv() << std::flush;
      return 0;
    }

    if (*exploit) {
      auto agent = make_agent(game, agent_spec, g.agent);
      const auto rep = exploitability_report(game, *agent);
      write_manifest(app, "exploit", g, argc, argv);
      std::cout << "agent=" << agent_spec << " exploitability_mbb=" << rep.mbb << " br0=" << rep.br[0]
                << " br1=" << rep.br[1] << std::endl;
      return 0;
    }

    if (*serve) {
      sigset_t sigs;
      sigemptyset(&sigs);
      sigaddset(&sigs, SIGINT);
      sigaddset(&sigs, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &sigs, nullptr);
      AgentOptions opt = g.agent;
      opt.cache = std::make_shared<ResolveCache>();
      make_agent(game, agent_spec, opt);  // fail early on a bad agent
      std::map<std::string, std::unique_ptr<std::ofstream>> logs;
      std::uint64_t sessions = 0;
      Server server({"0.0.0.0", port, health_port}, [&](const std::string& id) {
        auto& log = logs[id];
        log = std::make_unique<std::ofstream>(out / ("hands-" + id + ".log"), std::ios::app);
        SessionConfig sc;
        sc.seed = derive_seed(g.seed, sessions++);
        sc.agent_budget_ms = budget_ms;
        sc.history = log.get();
        return std::make_unique<TableSession>(
            id, game, std::array<TableSession::Player, 2>{TableSession::Player{}, TableSession::Player{make_agent(game, agent_spec, opt)}},
            sc);
      });
      server.start();
      write_manifest(app, "serve", g, argc, argv);
      std::cout << "listening port=" << server.port() << " health_port=" << server.health_port() << std::endl;
      int sig = 0;
      sigwait(&sigs, &sig);
      server.stop();
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n" << app.help();
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << std::endl;
    return 2;
  }
  return 1;
}
