#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "tda/market.hpp"
#include "tda/rng.hpp"

namespace tda {

// Streaming mechanism: consumes arrivals in order and commits an
// irrevocable decision for each one. Instances are single-run; start()
// resets all state.
class Mechanism {
 public:
  virtual ~Mechanism() = default;
  virtual std::string name() const = 0;

  // Hook for offline baselines and sensitivity variants that are allowed to
  // look at the whole stream. Online mechanisms ignore it.
  virtual void prime(const BidStream&) {}
  virtual void start(Coins& coins) = 0;
  virtual Decision on_event(const Event& e, Coins& coins) = 0;
  virtual bool closed() const = 0;
  // Post-stream settlement such as compensation credits.
  virtual void finish(AuctionOutcome&) {}

  // Exact expectation of revenue over the mechanism's own coins for this
  // stream, when a closed form is available.
  virtual std::optional<double> expected_revenue(const BidStream&) const { return std::nullopt; }
};

using MechanismFactory = std::function<std::unique_ptr<Mechanism>()>;

// Feeds the stream through the mechanism. With transcript = false only the
// accept record is kept and processing stops once the mechanism closes.
AuctionOutcome run_mechanism(Mechanism& m, const BidStream& stream, Coins& coins, bool transcript = true);

// Expected revenue over internal coins: closed form when offered, otherwise
// exhaustive enumeration of the coin tree.
double expected_revenue(Mechanism& m, const BidStream& stream);

// One JSON object per decision: slot, time, price, phase, decision, payment.
std::string transcript_jsonl(const AuctionOutcome& out);

}  // namespace tda
