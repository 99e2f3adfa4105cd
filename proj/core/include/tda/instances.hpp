#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tda/distribution.hpp"
#include "tda/market.hpp"

namespace tda {

enum class ValuationPreset { Uni, Nor, Exp, Ext };

std::string to_string(ValuationPreset p);
ValuationPreset valuation_preset_from_string(const std::string& s);

// Uni(0,200), Nor(100,20) truncated at 0, Exp with mean 50; Ext is the
// two-positive-value set {n^4, n, 0 x (n-2)}.
std::vector<double> sample_valuations(ValuationPreset p, std::size_t n, Engine& eng);
std::vector<double> sample_valuations(ValuationPreset p, std::size_t n, std::uint64_t seed);
std::vector<double> ext_valuations(std::size_t n);

// Prior handed to distribution-aware mechanisms. Ext maps to the empirical
// law of its own multiset.
ValuationDistribution preset_distribution(ValuationPreset p, std::size_t n);

enum class ArrivalMode { Grid, Poisson };

std::vector<double> sample_arrivals(double lambda, double t_end, ArrivalMode mode, Engine& eng);
std::vector<double> sample_arrivals(double lambda, double t_end, ArrivalMode mode, std::uint64_t seed);

struct PresetParams {
  std::size_t n = 16;
  double k = 5.0;                // discount exponent of the deep level n^-k
  std::optional<double> K;       // large value; preset-specific default
  std::optional<double> delta;   // small value; defaults to n^-k
  double eps = 1e-9;             // tail level of the eq26 step curve
  double B = 2.0;
  int c = 2;                     // thm10 size parameter, L = c
  int t = 1;                     // thm10 instance index in 1..2c
  std::size_t x = 2;             // thm8 breakpoint in [2, n]
  double lambda = 1.0;
};

std::vector<std::string> preset_ids();

// Emits the construction with its step curve on the grid t_j = j / lambda.
// Throws std::invalid_argument with an explanation on inconsistent params.
MarketInstance make_preset_instance(const std::string& id, const PresetParams& p);

// Step curve over expected slots: levels[i] = (last slot, value).
DiscountCurve slot_step_curve(const std::vector<std::pair<std::size_t, double>>& levels, double lambda,
                              std::size_t n);

// --- Adaptive adversary game ---------------------------------------------

// A mechanism that announces its acceptance probability for the current
// bid before committing.
class ProbeMechanism {
 public:
  virtual ~ProbeMechanism() = default;
  virtual std::string name() const = 0;
  virtual double accept_probability(std::size_t round, double bid) = 0;
};

class ConstantProbe final : public ProbeMechanism {
 public:
  explicit ConstantProbe(double p) : p_(p) {}
  std::string name() const override;
  double accept_probability(std::size_t, double) override { return p_; }

 private:
  double p_;
};

class ThresholdProbe final : public ProbeMechanism {
 public:
  ThresholdProbe(double threshold, double p_high, double p_low) : thr_(threshold), hi_(p_high), lo_(p_low) {}
  std::string name() const override;
  double accept_probability(std::size_t, double bid) override { return bid >= thr_ ? hi_ : lo_; }

 private:
  double thr_, hi_, lo_;
};

struct GameRound {
  double bid = 0.0;
  double p = 0.0;
  std::string action;  // escalate | repeat | stop
};

struct GameTranscript {
  std::vector<GameRound> rounds;
  std::vector<double> bids;  // all n bids including trailing zeros
  double vickrey = 0.0;
  double mechanism_revenue = 0.0;
  double ratio = 0.0;
  double accepted_mass = 0.0;
};

GameTranscript run_adaptive_game(ProbeMechanism& m, std::size_t n, double K, double first_bid = 1.0);

}  // namespace tda
