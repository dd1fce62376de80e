// Acceptance suite: one PASS/FAIL line per criterion, with measured values.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dstack/eval/agents.hpp"
#include "dstack/eval/lbr.hpp"
#include "dstack/eval/match.hpp"
#include "dstack/lookahead/oracle.hpp"
#include "dstack/lookahead/value_fn.hpp"
#include "dstack/resolving/continual.hpp"
#include "dstack/resolving/resolve.hpp"
#include "dstack/solver/best_response.hpp"
#include "dstack/solver/cfr.hpp"
#include "dstack/valuenet/dataset.hpp"
#include "dstack/valuenet/model.hpp"
#include "dstack/valuenet/model_valuefn.hpp"
#include "dstack/valuenet/sampling.hpp"
#include "dstack/valuenet/train.hpp"

namespace {

using namespace dstack;
using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

SolveConfig full_config(int iters, int omitted = 0) {
  SolveConfig c;
  c.iterations = iters;
  c.omitted = omitted;
  c.depth_limit = DepthLimit::kFullGame;
  return c;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& check) {
  Outcome o;
  const auto t0 = Clock::now();
  try {
    o = check();
  } catch (const std::exception& ex) {
    o = {false, std::string("error: ") + ex.what()};
  }
  failures += !o.pass;
  std::printf("%s [%d] %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), since(t0));
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Exploitability of the strategy extracted from a continual re-solver.
double resolve_exploitability(const GamePtr& g, const ValueFnPtr& vf, int iters) {
  ResolveConfig rc;
  rc.iterations = iters;
  rc.omitted = iters / 2;
  ContinualResolver r(g, rc, vf);
  StrategyProfile prof(g);
  for (int seat = 0; seat < 2; ++seat) extract_strategy(r, seat, prof);
  return best_response(g, prof).mbb;
}

// Leduc subgame below the opening check, seat 1 to act; constraint values
// are exact best-response values against the average of a full solve.
struct Graft {
  GamePtr g = make_leduc();
  SolveResult full;
  ResolveContext ctx;
  double mass = 0;

  explicit Graft(int full_iters) {
    full = cfr_solve(g, initial_state(*g), uniform_range(*g), uniform_range(*g), full_config(full_iters), nullptr);
    const PublicState root = replay(*g, "c", {});
    const int node = full.solver->tree().find(root.key(g->deck()));
    const int n = g->num_hands();
    const auto bv = full.solver->best_response_values(0);
    const auto reach = full.solver->reach(1, node);
    ctx.seat = 1;
    ctx.current = root;
    ctx.r1.assign(reach.begin(), reach.end());
    mass = std::accumulate(ctx.r1.begin(), ctx.r1.end(), 0.0);
    for (double& x : ctx.r1) x /= mass;
    ctx.v2.assign(bv.begin() + static_cast<std::ptrdiff_t>(node) * n,
                  bv.begin() + static_cast<std::ptrdiff_t>(node + 1) * n);
    for (double& x : ctx.v2) x /= mass;
  }

  std::shared_ptr<ResolveOutput> resolve(int iters) const {
    ResolveConfig rc;
    rc.iterations = iters;
    rc.omitted = iters / 2;
    rc.depth_limited = false;
    rc.warm_start = false;
    return resolve_lookahead(g, ctx, rc, nullptr);
  }
};

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dstack acceptance checks"};
  std::set<int> only;
  int examples = 20000, epochs = 100;
  std::string workdir = (std::filesystem::temp_directory_path() / "dstack-acceptance").string();
  app.add_option("--only", only, "run only these criteria (1-11)")->delimiter(',');
  app.add_option("--examples", examples, "training examples for the value network");
  app.add_option("--epochs", epochs, "training epochs for the value network");
  app.add_option("--workdir", workdir, "scratch directory");
  CLI11_PARSE(app, argc, argv);
  std::error_code ec;
  std::filesystem::create_directories(workdir, ec);
  if (ec) {
    std::cerr << "cannot create work directory '" << workdir << "': " << ec.message() << "\n";
    return 1;
  }
  auto want = [&](int id) { return only.empty() || only.count(id) > 0; };

  if (want(1))
    report(1, "Kuhn game value, T=1e5", [] {
      const auto t0 = Clock::now();
      auto g = make_kuhn();
      const Range u = uniform_range(*g);
      const auto res = cfr_solve(g, initial_state(*g), u, u, full_config(100000), nullptr);
      const double v = game_value(*g, u, res.v1), secs = since(t0);
      return Outcome{std::abs(v + 1.0 / 18) < 1e-3 && secs < 10,
                     fmt("value %.6f vs %.6f (tol 1e-3), %.1fs (limit 10s)", v, -1.0 / 18, secs)};
    });

  if (want(2))
    report(2, "Leduc convergence trend", [] {
      const auto t0 = Clock::now();
      auto g = make_leduc();
      const Range u = uniform_range(*g);
      std::vector<double> e;
      std::string s;
      for (int t : {100, 1000, 10000, 100000}) {
        e.push_back(best_response(g, cfr_solve(g, initial_state(*g), u, u, full_config(t), nullptr).profile).mbb);
        s += fmt("T=%d %.3f mbb; ", t, e.back());
      }
      bool ok = e.back() < 1;
      for (std::size_t i = 1; i < e.size(); ++i) ok = ok && e[i] < e[i - 1];
      const double secs = since(t0);
      return Outcome{ok && secs < 300, s + fmt("strictly decreasing, < 1 at 1e5, %.0fs (limit 300s)", secs)};
    });

  if (want(3))
    report(3, "HUNL always-fold anchors", [] {
      const auto t0 = Clock::now();
      auto g = make_hunl();
      auto fold = std::make_shared<FoldPolicy>(g);
      const auto br = best_response(g, *fold);
      PolicyAgent agent(g, "always-fold", fold);
      const auto bet = lbr_play(g, agent, LbrConfig::parse("FCPA"), 1000, 1);
      const auto fc = lbr_play(g, agent, LbrConfig::parse("FC"), 1000, 1);
      const double secs = since(t0);
      const bool ok = br.mbb == 750 && bet.mean == 750 && bet.stderr_ == 0 && fc.mean == 250 && fc.stderr_ == 0 && secs < 60;
      return Outcome{ok, fmt("BR %.3f, LBR FCPA %.3f +- %.3f, LBR FC %.3f +- %.3f (want 750, 750+-0, 250+-0), %.1fs",
                             br.mbb, bet.mean, bet.stderr_, fc.mean, fc.stderr_, secs)};
    });

  if (want(4) || want(5)) {
    const auto t0 = Clock::now();
    const Graft gr(10000);
    const auto out = gr.resolve(10000);
    const double setup = since(t0);
    if (want(4))
      report(4, "Re-solve soundness (grafted Leduc subgame)", [&] {
        StrategyProfile grafted = gr.full.profile;
        const PublicTree& t = out->tree();
        for (int i = 0; i < t.size(); ++i) {
          const auto& nd = t.node(i);
          if (nd.kind == NodeKind::kDecision && nd.state.actor == 1)
            grafted.set(nd.state, nd.actions, out->solver->average_strategy(i));
        }
        const double before = best_response(gr.g, gr.full.profile).mbb;
        const double after = best_response(gr.g, grafted).mbb;
        const double secs = since(t0);
        return Outcome{after - before < 1 && secs < 300,
                       fmt("exploitability %.4f -> %.4f mbb, increase %.4f (limit 1), %.0fs incl. solve", before, after,
                           after - before, secs)};
      });
    if (want(5))
      report(5, "Gadget value equals constraint sum", [&] {
        const GameSpec& g = *gr.g;
        const int n = g.num_hands();
        double gadget = 0, w = 0;
        for (int h = 0; h < n; ++h) {
          gadget += out->gadget_values[h] / n;
          w += gr.ctx.v2[h] / n;
        }
        const double k = gr.mass * g.deal_normalizer(0) * 1000 / g.unit();
        const double diff = std::abs(gadget - w) * k;
        return Outcome{diff < 0.5, fmt("gadget %.4f vs sum w %.4f mbb, diff %.4f (tol 0.5); shared solve %.0fs",
                                       gadget * k, w * k, diff, setup)};
      });
  }

  double oracle_at_500 = -1;
  if (want(6) || want(7)) {
    const auto t0 = Clock::now();
    auto g = make_leduc();
    OracleConfig oc;
    oc.iterations = 400;
    oc.omitted = 200;
    const ValueFnPtr oracle = oracle_valuefn(g, oc);
    if (want(6))
      report(6, "Continual re-solving with oracle values", [&] {
        std::vector<double> e;
        std::string s;
        for (int t : {100, 500, 2000}) {
          e.push_back(resolve_exploitability(g, oracle, t));
          s += fmt("T=%d %.2f mbb; ", t, e.back());
        }
        oracle_at_500 = e[1];
        const double secs = since(t0);
        const bool ok = e[1] < e[0] && e[2] < e[1] && e[2] < 10 && secs < 1800;
        return Outcome{ok, s + fmt("decreasing, < 10 at 2000, %.0fs (limit 1800s)", secs)};
      });
    if (want(7))
      report(7, "Learned value function", [&] {
        TargetConfig tc;
        tc.iterations = 1000;
        tc.omitted = 500;
        tc.threads = 1;
        const Dataset d = generate_dataset(g, 1, examples, 7, tc);
        TrainConfig cfg;
        cfg.epochs = epochs;
        cfg.decay_epoch = epochs * 3 / 4;
        const auto tr = train(g, d, cfg);
        tr.model.save(workdir + "/leduc.model");
        auto vf = std::make_shared<ModelValueFn>(g, std::make_shared<CfvModel>(tr.model));
        const double model = resolve_exploitability(g, vf, 500);
        if (oracle_at_500 < 0) oracle_at_500 = resolve_exploitability(g, oracle, 500);
        const double delta = model - oracle_at_500;
        return Outcome{tr.best_validation < 0.05 && delta < 25,
                       fmt("%d examples, %d epochs: validation loss %.5f (limit 0.05); exploitability at T=500 "
                           "model %.2f vs oracle %.2f mbb, increase %.2f (limit 25)",
                           examples, epochs, tr.best_validation, model, oracle_at_500, delta)};
      });
  }

  if (want(8))
    report(8, "Zero-sum layer", [] {
      Rng rng(101);
      double worst = 0;
      for (int it = 0; it < 10000; ++it) {
        const int n = 1 + static_cast<int>(uniform_int(rng, 0, 60));
        std::vector<double> r1(n), r2(n), v1(n), v2(n);
        for (int i = 0; i < n; ++i) {
          r1[i] = uniform01(rng) < 0.2 ? 0 : uniform01(rng);
          r2[i] = uniform01(rng) < 0.2 ? 0 : uniform01(rng);
          v1[i] = standard_normal(rng) * 100;
          v2[i] = standard_normal(rng) * 100;
        }
        const CfvPair z = zero_sum_layer(v1, v2, r1, r2);
        double s = 0;
        for (int i = 0; i < n; ++i) s += r1[i] * z.v1[i] + r2[i] * z.v2[i];
        worst = std::max(worst, std::abs(s));
      }
      return Outcome{worst <= 1e-9, fmt("10000 inputs, worst |r1.v1 + r2.v2| = %.2e (tol 1e-9)", worst)};
    });

  if (want(9))
    report(9, "Model gradient check", [] {
      Rng rng(202);
      double worst = 0;
      int flat = 0;
      bool flat_ok = true;
      for (int it = 0; it < 100; ++it) {
        ModelArch a;
        a.game = "check";
        a.buckets = 1 + static_cast<int>(uniform_int(rng, 0, 2));
        a.layers = static_cast<int>(uniform_int(rng, 0, 2));
        a.width = 1 + static_cast<int>(uniform_int(rng, 0, 4));
        CfvModel m(a, static_cast<std::uint64_t>(1000 + it));
        for (double& p : m.params()) p += 0.3 * standard_normal(rng);  // move PReLU slopes off their initial value
        const int b = 1 + static_cast<int>(uniform_int(rng, 0, 3)), n = 2 + static_cast<int>(uniform_int(rng, 0, 3));
        Batch batch;
        batch.x.resize(a.inputs(), b);
        batch.t1.resize(n, b);
        batch.t2.resize(n, b);
        batch.bucket.resize(n, b);
        for (int j = 0; j < b; ++j) {
          for (int i = 0; i < a.inputs(); ++i) batch.x(i, j) = uniform01(rng);
          for (int h = 0; h < n; ++h) {
            batch.t1(h, j) = 2 * standard_normal(rng);
            batch.t2(h, j) = 2 * standard_normal(rng);
            batch.bucket(h, j) = static_cast<int>(uniform_int(rng, -1, a.buckets - 1));
          }
          if (batch.bucket(0, j) < 0) batch.bucket(0, j) = 0;  // keep the loss non-constant
        }
        std::vector<double> grad;
        m.loss_and_grad(batch, grad);
        double diff = 0, norm = 0;
        const double eps = 1e-6;
        for (std::size_t i = 0; i < grad.size(); ++i) {
          const double keep = m.params()[i];
          m.params()[i] = keep + eps;
          const double up = m.loss(batch);
          m.params()[i] = keep - eps;
          const double down = m.loss(batch);
          m.params()[i] = keep;
          const double fd = (up - down) / (2 * eps);
          diff += (grad[i] - fd) * (grad[i] - fd);
          norm += grad[i] * grad[i] + fd * fd;
        }
        double gnorm = 0;
        for (double x : grad) gnorm += x * x;
        if (gnorm == 0) {
          // Locally constant loss: differences must be pure roundoff.
          ++flat;
          flat_ok = flat_ok && std::sqrt(diff) < 1e-8;
          continue;
        }
        worst = std::max(worst, std::sqrt(diff) / std::sqrt(norm));
      }
      return Outcome{worst < 1e-4 && flat_ok,
                     fmt("100 instances, worst relative error %.2e (tol 1e-4); %d with zero gradient, finite differences %s",
                         worst, flat, flat_ok ? "< 1e-8" : "too large")};
    });

  if (want(10))
    report(10, "Range generator and pot sampler", [] {
      Rng rng(303);
      double worst = 0;
      for (int it = 0; it < 10000; ++it) {
        const int n = 1 + static_cast<int>(uniform_int(rng, 0, 60));
        std::vector<int> s(n);
        std::iota(s.begin(), s.end(), 0);
        const double p = uniform01(rng);
        Range out(n, 0.0);
        random_range(s, p, rng, out);
        worst = std::max(worst, std::abs(std::accumulate(out.begin(), out.end(), 0.0) - p));
      }
      const auto g = make_hunl();
      const auto& iv = g->pot_intervals();
      std::vector<int> count(iv.size(), 0);
      const int draws = 100000;
      for (int i = 0; i < draws; ++i) {
        const Chips pot = sample_pot(*g, rng);
        for (std::size_t k = 0; k < iv.size(); ++k)
          if (pot >= iv[k].lo && pot <= iv[k].hi) {
            ++count[k];
            break;
          }
      }
      const double expect = static_cast<double>(draws) / static_cast<double>(iv.size());
      double chi2 = 0;
      for (int c : count) chi2 += (c - expect) * (c - expect) / expect;
      const double critical = 13.277;  // chi-square, 4 degrees of freedom, alpha = 0.01
      return Outcome{worst <= 1e-12 && iv.size() == 5 && chi2 < critical,
                     fmt("worst |sum - p| %.2e (tol 1e-12); pot chi-square %.3f over %zu intervals (critical %.3f)", worst,
                         chi2, iv.size(), critical)};
    });

  if (want(11))
    report(11, "Determinism", [&] {
      std::string s;
      bool ok = true;
      auto g = make_leduc();
      const Range u = uniform_range(*g);
      const std::string s1 = cfr_solve(g, initial_state(*g), u, u, full_config(2000, 500), nullptr).profile.dump();
      const std::string s2 = cfr_solve(g, initial_state(*g), u, u, full_config(2000, 500), nullptr).profile.dump();
      ok = ok && s1 == s2;
      s += s1 == s2 ? "solve identical; " : "solve differs; ";

      TargetConfig tc;
      tc.iterations = 200;
      tc.omitted = 100;
      std::string bytes[3];
      for (int k = 0; k < 3; ++k) {
        tc.threads = k == 2 ? 2 : 1;
        const std::string path = workdir + "/det" + std::to_string(k) + ".bin";
        save_dataset(generate_dataset(g, 1, 300, 9, tc), path);
        bytes[k] = file_bytes(path);
      }
      const bool data_ok = bytes[0] == bytes[1] && bytes[0] == bytes[2];
      ok = ok && data_ok;
      s += data_ok ? "dataset identical (1 and 2 threads); " : "dataset differs; ";

      auto run = [&](std::uint64_t seed) {
        OracleConfig oc;
        oc.iterations = 100;
        ResolveConfig rc;
        rc.iterations = 50;
        rc.omitted = 25;
        ResolveAgent a(g, std::make_shared<ContinualResolver>(g, rc, oracle_valuefn(g, oc)), "resolve");
        PolicyAgent b(g, "uniform", std::make_shared<UniformPolicy>(g));
        std::ostringstream log;
        MatchConfig mc;
        mc.hands = 40;
        mc.seed = seed;
        mc.log = &log;
        const auto rep = run_match(g, a, b, mc);
        return std::make_pair(log.str(), rep.mean);
      };
      const auto [l1, m1] = run(5);
      const auto [l2, m2] = run(5);
      std::istringstream in(l1);
      std::string line;
      std::getline(in, line);
      int hands = 0;
      bool replays = true;
      while (std::getline(in, line)) {
        const HandRecord r = parse_hand(*g, line);
        try {
          replay_hand(*g, r);
        } catch (const std::exception&) {
          replays = false;
        }
        ++hands;
      }
      const bool match_ok = l1 == l2 && m1 == m2 && replays && hands == 40;
      ok = ok && match_ok;
      s += match_ok ? fmt("match log identical, %d hands replay", hands) : "match log differs or fails to replay";
      return Outcome{ok, s};
    });

  return failures == 0 ? 0 : 1;
}
