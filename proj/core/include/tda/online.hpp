#pragma once

#include <memory>
#include <vector>

#include "tda/classes.hpp"
#include "tda/mechanism.hpp"

namespace tda {

enum class Lottery {
  Sequential,   // each observed buyer wins with an independent 1/(x+1) coin
  UniformSlot,  // one uniform draw over x+1 outcomes: a fixed observation slot or none
};

struct OnlineOptions {
  bool compare_valuation = false;  // compare r/d and charge v_max * d instead of raw prices
  bool realized_counts = false;    // size the observation phase from realized arrivals
  Lottery lottery = Lottery::Sequential;
};

// Running state of observe-then-select inside one class.
class ObserveSelectState {
 public:
  ObserveSelectState() = default;
  ObserveSelectState(double class_size, const OnlineOptions& opt);

  std::size_t x() const { return x_; }
  bool finished() const { return won_; }
  // Processes one arrival that belongs to the class.
  Decision step(const Event& e, Coins& coins);

 private:
  std::size_t x_ = 0;
  std::size_t seen_ = 0;
  double obs_max_ = 0.0;  // price or valuation, per options
  std::size_t lottery_slot_ = 0;
  bool lottery_drawn_ = false;
  bool won_ = false;
  OnlineOptions opt_;
};

// Observe-then-select on a class-restricted stream of expected size n_c.
class ObserveThenSelect final : public Mechanism {
 public:
  ObserveThenSelect(double class_size, OnlineOptions opt = {});
  std::string name() const override { return "m_o"; }
  void prime(const BidStream& s) override;
  void start(Coins& coins) override;
  Decision on_event(const Event& e, Coins& coins) override;
  bool closed() const override { return state_.finished(); }
  std::optional<double> expected_revenue(const BidStream& s) const override;

 private:
  double class_size_;
  double active_size_;
  OnlineOptions opt_;
  ObserveSelectState state_;
};

enum class StarRule { Uniform, FirstClass, Weighted, MostWeighted };

// Star-class family: M_R (uniform, tail), M_1 (class 1), M_W (weighted, tail)
// and M'_W (most weighted).
class ClassSelect final : public Mechanism {
 public:
  ClassSelect(std::shared_ptr<const ClassPartition> part, StarRule rule, bool tail, OnlineOptions opt = {});
  std::string name() const override;
  void prime(const BidStream& s) override;
  void start(Coins& coins) override;
  Decision on_event(const Event& e, Coins& coins) override;
  bool closed() const override { return closed_; }
  void finish(AuctionOutcome& out) override;
  std::optional<double> expected_revenue(const BidStream& s) const override;

  // Probability of each class id (index c-1) being the star class.
  std::vector<double> star_distribution() const;
  int star() const { return star_; }

 private:
  double class_size(int c) const;

  std::shared_ptr<const ClassPartition> part_;
  StarRule rule_;
  bool tail_;
  OnlineOptions opt_;
  std::vector<double> realized_;  // realized class counts when primed
  bool weights_fallback_ = false;

  int star_ = 0;
  bool star_done_ = false;
  bool closed_ = false;
  double run_max_ = 0.0;
  double tail_threshold_ = 0.0;
  ObserveSelectState obs_;
};

// Observe-then-decide inside class 1 that falls back to selling to the last
// class-1 arrival.
class ModifiedObserveDecide final : public Mechanism {
 public:
  ModifiedObserveDecide(std::shared_ptr<const ClassPartition> part, OnlineOptions opt = {});
  std::string name() const override { return "mod1"; }
  void start(Coins& coins) override;
  Decision on_event(const Event& e, Coins& coins) override;
  bool closed() const override { return closed_; }

 private:
  std::shared_ptr<const ClassPartition> part_;
  OnlineOptions opt_;
  std::size_t x_ = 0;
  std::size_t last_ = 0;
  std::size_t seen_ = 0;
  double obs_max_ = 0.0;
  std::size_t lottery_slot_ = 0;
  bool closed_ = false;
};

// Posts Z/2 and sells to the first price reaching it.
class KnownOptPosted final : public Mechanism {
 public:
  explicit KnownOptPosted(double Z);
  std::string name() const override { return "m_z"; }
  void start(Coins&) override { closed_ = false; }
  Decision on_event(const Event& e, Coins& coins) override;
  bool closed() const override { return closed_; }

 private:
  double half_;
  bool closed_ = false;
};

// Offline second-price auction exposed through the streaming contract; it
// reads the whole stream in prime(). Used for self-comparison checks.
class OfflineVickrey final : public Mechanism {
 public:
  std::string name() const override { return "vickrey"; }
  void prime(const BidStream& s) override;
  void start(Coins&) override {}
  Decision on_event(const Event& e, Coins& coins) override;
  bool closed() const override { return false; }

 private:
  std::optional<std::size_t> winner_;
  double payment_ = 0.0;
};

// Negative control for the IR audit: sells to the first positive bid at bid + 1.
class OverpayControl final : public Mechanism {
 public:
  std::string name() const override { return "overpay"; }
  void start(Coins&) override { closed_ = false; }
  Decision on_event(const Event& e, Coins& coins) override;
  bool closed() const override { return closed_; }

 private:
  bool closed_ = false;
};

}  // namespace tda
