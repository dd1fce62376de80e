#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include "dstack/core/game_spec.hpp"
#include "dstack/core/rng.hpp"
#include "dstack/lookahead/action_menu.hpp"
#include "dstack/solver/cfr.hpp"
#include "dstack/valuenet/bucketing.hpp"
#include "dstack/valuenet/model.hpp"
#include "dstack/valuenet/sampling.hpp"

namespace dstack {

struct TargetConfig {
  int iterations = 1000;
  int omitted = 0;
  ActionMenu menu = ActionMenu::uniform("F,C,P,A");
  std::size_t max_nodes = 2'000'000;
  int threads = 0;  // 0: hardware concurrency
};

// One training example: a situation and the solved values of both players,
// in fractions of the pot.
struct Example {
  Situation sit;
  CfvVector v1, v2;
  friend bool operator==(const Example&, const Example&) = default;
};

struct Dataset {
  std::string game;
  int round = 0;
  std::uint64_t seed = 0;
  int hands = 0;
  int board_cards = 0;
  std::vector<Example> examples;
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Solves one situation to the end of the game with the target menu.
inline Example solve_situation(GamePtr game, const Situation& sit, const TargetConfig& cfg) {
  SolveConfig sc;
  sc.iterations = cfg.iterations;
  sc.omitted = cfg.omitted;
  sc.depth_limit = DepthLimit::kFullGame;
  sc.menus = {cfg.menu};
  sc.max_nodes = cfg.max_nodes;
  const PublicState s = situation_state(*game, sit);
  const auto res = cfr_solve(game, s, sit.r1, sit.r2, sc, nullptr);
  Example ex;
  ex.sit = sit;
  ex.v1 = res.v1;
  ex.v2 = res.v2;
  for (double& x : ex.v1) x /= sit.pot;
  for (double& x : ex.v2) x /= sit.pot;
  return ex;
}

// n random situations of `round`, each drawn and solved with its own seed so
// the result does not depend on the thread count.
inline Dataset generate_dataset(GamePtr game, int round, int n, std::uint64_t seed, const TargetConfig& cfg) {
  if (n < 1) throw Error("dataset needs at least one example");
  Dataset d;
  d.game = game->name();
  d.round = round;
  d.seed = seed;
  d.hands = game->num_hands();
  d.board_cards = game->board_cards_before_round(round);
  d.examples.resize(static_cast<std::size_t>(n));
  int threads = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, n);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (int i = t; i < n; i += threads) {
          Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
          d.examples[static_cast<std::size_t>(i)] = solve_situation(game, sample_situation(*game, round, rng), cfg);
        }
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return d;
}

namespace detail {
inline constexpr char kDatasetMagic[8] = {'D', 'S', 'T', 'K', 'D', 'A', 'T', '1'};

template <typename T>
void put(std::ostream& o, T v) {
  o.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <typename T>
T get(std::istream& in) {
  T v;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw Error("dataset file truncated");
  return v;
}
}  // namespace detail

// Binary layout (little-endian): magic "DSTKDAT1"; u32 game-name length and
// bytes; i32 round, i32 hands, i32 board cards; u64 seed; u64 count; then per
// example: i32 board cards, f64 pot, f64 r1[hands], r2[hands], v1[hands],
// v2[hands].
inline void save_dataset(const Dataset& d, const std::string& path) {
  std::ofstream o(path, std::ios::binary);
  if (!o) throw Error("cannot write dataset '" + path + "'");
  o.write(detail::kDatasetMagic, 8);
  detail::put<std::uint32_t>(o, static_cast<std::uint32_t>(d.game.size()));
  o.write(d.game.data(), static_cast<std::streamsize>(d.game.size()));
  detail::put<std::int32_t>(o, d.round);
  detail::put<std::int32_t>(o, d.hands);
  detail::put<std::int32_t>(o, d.board_cards);
  detail::put<std::uint64_t>(o, d.seed);
  detail::put<std::uint64_t>(o, d.examples.size());
  for (const Example& e : d.examples) {
    for (Card c : e.sit.board) detail::put<std::int32_t>(o, c);
    detail::put<double>(o, e.sit.pot);
    for (const auto* v : {&e.sit.r1, &e.sit.r2, &e.v1, &e.v2})
      o.write(reinterpret_cast<const char*>(v->data()), static_cast<std::streamsize>(v->size() * sizeof(double)));
  }
  if (!o) throw Error("failed writing dataset '" + path + "'");
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open dataset '" + path + "'");
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, detail::kDatasetMagic, 8) != 0) throw Error("not a dstack dataset");
  Dataset d;
  d.game.resize(detail::get<std::uint32_t>(in));
  in.read(d.game.data(), static_cast<std::streamsize>(d.game.size()));
  d.round = detail::get<std::int32_t>(in);
  d.hands = detail::get<std::int32_t>(in);
  d.board_cards = detail::get<std::int32_t>(in);
  d.seed = detail::get<std::uint64_t>(in);
  const auto count = detail::get<std::uint64_t>(in);
  if (d.hands <= 0 || d.board_cards < 0 || count > (1ull << 32)) throw Error("dataset header is corrupt");
  d.examples.resize(count);
  for (Example& e : d.examples) {
    e.sit.round = d.round;
    e.sit.board.resize(static_cast<std::size_t>(d.board_cards));
    for (Card& c : e.sit.board) c = detail::get<std::int32_t>(in);
    e.sit.pot = detail::get<double>(in);
    for (auto* v : {&e.sit.r1, &e.sit.r2, &e.v1, &e.v2}) {
      v->resize(static_cast<std::size_t>(d.hands));
      if (!in.read(reinterpret_cast<char*>(v->data()), static_cast<std::streamsize>(v->size() * sizeof(double))))
        throw Error("dataset file truncated");
    }
  }
  return d;
}

// Pot feature given to the network.
inline double pot_feature(const GameSpec& g, Chips pot) { return pot / g.max_pot(); }

// Network input column for ranges normalized to 1.
inline void model_input(const GameSpec& g, const BucketMap& bm, std::span<const double> r1, std::span<const double> r2,
                        Chips pot, double* col) {
  const auto b1 = bm.pool(r1), b2 = bm.pool(r2);
  std::copy(b1.begin(), b1.end(), col);
  std::copy(b2.begin(), b2.end(), col + bm.k);
  col[2 * bm.k] = pot_feature(g, pot);
}

// Batch of the examples with indices [first, first + count) of `order`.
inline Batch make_batch(const GameSpec& g, const Dataset& d, const BucketCache& buckets, int k,
                        const std::vector<std::size_t>& order, std::size_t first, std::size_t count) {
  Batch b;
  const int n = d.hands;
  b.x.resize(2 * k + 1, static_cast<Eigen::Index>(count));
  b.t1.resize(n, static_cast<Eigen::Index>(count));
  b.t2.resize(n, static_cast<Eigen::Index>(count));
  b.bucket.resize(n, static_cast<Eigen::Index>(count));
  for (std::size_t j = 0; j < count; ++j) {
    const Example& e = d.examples[order[first + j]];
    const BucketMap& bm = buckets.get(e.sit.board);
    const auto jj = static_cast<Eigen::Index>(j);
    model_input(g, bm, e.sit.r1, e.sit.r2, e.sit.pot, b.x.data() + jj * b.x.rows());
    for (int h = 0; h < n; ++h) {
      b.t1(h, jj) = e.v1[h];
      b.t2(h, jj) = e.v2[h];
      b.bucket(h, jj) = bm.bucket[h];
    }
  }
  return b;
}

}  // namespace dstack
