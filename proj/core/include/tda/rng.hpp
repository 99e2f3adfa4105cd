#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace tda {

// Engine with a fully specified output sequence on every platform.
using Engine = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

// Order-independent seed for replication `index` of a run seeded with `base`.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

double uniform01(Engine& eng);

// Fisher-Yates permutation of 0..n-1 built on portable integer draws.
std::vector<std::size_t> random_permutation(std::size_t n, Engine& eng);

// Source of a mechanism's internal randomness. Mechanisms only ever ask for
// categorical choices, which lets the same code run sampled or enumerated.
class Coins {
 public:
  virtual ~Coins() = default;
  // Returns an index i with probability probs[i]; probs sums to 1.
  virtual std::size_t choose(std::span<const double> probs) = 0;
  bool flip(double p_true);
};

class RandomCoins final : public Coins {
 public:
  explicit RandomCoins(std::uint64_t seed) : eng_(seed) {}
  std::size_t choose(std::span<const double> probs) override;

 private:
  Engine eng_;
};

// Replays a fixed prefix of choices and records every coin it is asked for.
// Driven by enumerate_coins to walk the full decision tree of a mechanism.
class ScriptedCoins final : public Coins {
 public:
  explicit ScriptedCoins(std::vector<std::size_t> prefix) : prefix_(std::move(prefix)) {}
  std::size_t choose(std::span<const double> probs) override;

  double path_probability() const { return prob_; }
  const std::vector<std::size_t>& choices() const { return taken_; }
  const std::vector<std::vector<double>>& options() const { return options_; }

 private:
  std::vector<std::size_t> prefix_;
  std::vector<std::size_t> taken_;
  std::vector<std::vector<double>> options_;
  double prob_ = 1.0;
};

// Calls run(coins) once per leaf of the coin tree and passes the leaf
// probability to visit(prob, result). Zero-probability branches are skipped.
template <class Run, class Visit>
void enumerate_coins(Run&& run, Visit&& visit) {
  std::vector<std::size_t> prefix;
  for (;;) {
    ScriptedCoins coins(prefix);
    auto result = run(static_cast<Coins&>(coins));
    visit(coins.path_probability(), result);
    // Advance to the next unexplored branch, depth first.
    auto taken = coins.choices();
    const auto& opts = coins.options();
    bool advanced = false;
    while (!taken.empty()) {
      std::size_t level = taken.size() - 1;
      std::size_t next = taken[level] + 1;
      while (next < opts[level].size() && opts[level][next] <= 0.0) ++next;
      if (next < opts[level].size()) {
        taken[level] = next;
        advanced = true;
        break;
      }
      taken.pop_back();
    }
    if (!advanced) return;
    prefix = std::move(taken);
  }
}

}  // namespace tda
