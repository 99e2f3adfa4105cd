#include "tda/rng.hpp"

#include <boost/random/uniform_int_distribution.hpp>
#include <stdexcept>

namespace tda {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return splitmix64(base ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

double uniform01(Engine& eng) {
  // 53 random bits mapped onto [0, 1).
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

std::vector<std::size_t> random_permutation(std::size_t n, Engine& eng) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    boost::random::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(p[i - 1], p[pick(eng)]);
  }
  return p;
}

bool Coins::flip(double p_true) {
  const double probs[2] = {1.0 - p_true, p_true};
  return choose(probs) == 1;
}

std::size_t RandomCoins::choose(std::span<const double> probs) {
  if (probs.empty()) throw std::invalid_argument("choose: no options");
  double u = uniform01(eng_);
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last = i;
    if (u < acc) return i;
  }
  return last;
}

std::size_t ScriptedCoins::choose(std::span<const double> probs) {
  if (probs.empty()) throw std::invalid_argument("choose: no options");
  std::size_t level = taken_.size();
  std::size_t pick;
  if (level < prefix_.size()) {
    pick = prefix_[level];
  } else {
    pick = 0;
    while (pick < probs.size() && probs[pick] <= 0.0) ++pick;
    if (pick == probs.size()) throw std::invalid_argument("choose: all options have zero mass");
  }
  taken_.push_back(pick);
  options_.emplace_back(probs.begin(), probs.end());
  prob_ *= probs[pick];
  return pick;
}

}  // namespace tda
