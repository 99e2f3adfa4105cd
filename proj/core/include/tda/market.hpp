#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "tda/curve.hpp"

namespace tda {

struct MarketInstance {
  std::vector<double> valuations;
  std::vector<double> arrivals;  // strictly increasing, within [0, horizon]
  DiscountCurve curve;
  double lambda = 1.0;
  double horizon = 1.0;

  std::size_t size() const { return valuations.size(); }
  // Throws std::invalid_argument describing the first broken invariant.
  void validate() const;
  // d(t_j) for every slot.
  std::vector<double> slot_discounts() const;
};

// Grid arrivals t_j = j / lambda for j = 1..n.
std::vector<double> grid_arrivals(std::size_t n, double lambda);

struct Event {
  std::size_t slot = 0;  // 0-based arrival order
  double time = 0.0;
  double discount = 1.0;  // d(time), public knowledge
  double price = 0.0;     // reported price r_j
};

struct BidStream {
  std::vector<Event> events;
  std::vector<std::size_t> perm;  // perm[slot] = index into the valuation multiset

  std::size_t size() const { return events.size(); }
  std::vector<double> prices() const;
};

// Truthful stream r_j = v_{perm[j]} * d(t_j). An empty perm means identity.
BidStream make_stream(const MarketInstance& inst, const std::vector<std::size_t>& perm = {});
BidStream make_stream(const std::vector<double>& values_by_slot, const std::vector<double>& times,
                      const std::vector<double>& discounts);

enum class Phase { PreClass, Observation, Decision, Tail, Posted, Learning, Offline, Closed };
std::string to_string(Phase p);

struct Decision {
  std::size_t slot = 0;
  double time = 0.0;
  double price = 0.0;
  Phase phase = Phase::Closed;
  bool accepted = false;
  double payment = 0.0;
};

struct AuctionOutcome {
  std::optional<std::size_t> winner;
  double payment = 0.0;
  double revenue = 0.0;            // payment minus any compensation paid out
  std::vector<double> utilities;   // filled by settle()
  std::vector<double> credits;     // per-slot transfers to buyers (compensation)
  std::vector<Decision> transcript;
  std::vector<std::string> flags;
};

// Fills per-slot utilities from the buyers' true discounted values.
void settle(AuctionOutcome& out, const std::vector<double>& true_prices);

double reported_price(double v, double t, const DiscountCurve& curve);
double utility(double v, double discount, double payment, bool won);

AuctionOutcome vickrey_offline(const BidStream& stream);
double second_price(const std::vector<double>& prices);
double opt1(const BidStream& stream);

// Averages the second-highest price over all n! slot assignments (n <= 8).
double exact_expected_vickrey(const MarketInstance& inst);

// Exact expected revenue of observe-then-select restricted to `class_slots`
// (0-based, contiguous), averaged over all orderings of the valuations in
// those slots; other slots keep the identity assignment. n <= 8.
double exact_expected_observe_select(const MarketInstance& inst, std::size_t first_slot, std::size_t count,
                                     double expected_class_size);

}  // namespace tda
