#include "tda/market.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tda {

void MarketInstance::validate() const {
  if (valuations.size() != arrivals.size()) throw std::invalid_argument("instance: |valuations| != |arrivals|");
  for (double v : valuations) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("instance: valuations must be finite and >= 0");
  }
  for (std::size_t j = 0; j < arrivals.size(); ++j) {
    if (!(arrivals[j] >= 0.0) || arrivals[j] > horizon * (1.0 + 1e-12))
      throw std::invalid_argument("instance: arrival outside [0, horizon]");
    if (j > 0 && !(arrivals[j] > arrivals[j - 1]))
      throw std::invalid_argument("instance: arrivals must be strictly increasing");
  }
  if (!(lambda > 0.0)) throw std::invalid_argument("instance: lambda must be positive");
}

std::vector<double> MarketInstance::slot_discounts() const {
  std::vector<double> d(arrivals.size());
  for (std::size_t j = 0; j < arrivals.size(); ++j) d[j] = curve(arrivals[j]);
  return d;
}

std::vector<double> grid_arrivals(std::size_t n, double lambda) {
  std::vector<double> t(n);
  for (std::size_t j = 0; j < n; ++j) t[j] = static_cast<double>(j + 1) / lambda;
  return t;
}

std::vector<double> BidStream::prices() const {
  std::vector<double> r(events.size());
  for (std::size_t j = 0; j < events.size(); ++j) r[j] = events[j].price;
  return r;
}

BidStream make_stream(const MarketInstance& inst, const std::vector<std::size_t>& perm) {
  const std::size_t n = inst.size();
  BidStream s;
  s.perm = perm;
  if (s.perm.empty()) {
    s.perm.resize(n);
    std::iota(s.perm.begin(), s.perm.end(), std::size_t{0});
  }
  if (s.perm.size() != n) throw std::invalid_argument("make_stream: permutation size mismatch");
  s.events.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    Event& e = s.events[j];
    e.slot = j;
    e.time = inst.arrivals[j];
    e.discount = inst.curve(e.time);
    e.price = inst.valuations[s.perm[j]] * e.discount;
  }
  return s;
}

BidStream make_stream(const std::vector<double>& values_by_slot, const std::vector<double>& times,
                      const std::vector<double>& discounts) {
  const std::size_t n = values_by_slot.size();
  if (times.size() != n || discounts.size() != n) throw std::invalid_argument("make_stream: size mismatch");
  BidStream s;
  s.perm.resize(n);
  std::iota(s.perm.begin(), s.perm.end(), std::size_t{0});
  s.events.resize(n);
  for (std::size_t j = 0; j < n; ++j) s.events[j] = Event{j, times[j], discounts[j], values_by_slot[j] * discounts[j]};
  return s;
}

std::string to_string(Phase p) {
  switch (p) {
    case Phase::PreClass: return "pre-class";
    case Phase::Observation: return "observation";
    case Phase::Decision: return "decision";
    case Phase::Tail: return "tail";
    case Phase::Posted: return "posted";
    case Phase::Learning: return "learning";
    case Phase::Offline: return "offline";
    case Phase::Closed: return "closed";
  }
  return "unknown";
}

void settle(AuctionOutcome& out, const std::vector<double>& true_prices) {
  out.utilities.assign(true_prices.size(), 0.0);
  if (out.winner && *out.winner < true_prices.size()) out.utilities[*out.winner] = true_prices[*out.winner] - out.payment;
  for (std::size_t j = 0; j < out.credits.size() && j < out.utilities.size(); ++j) out.utilities[j] += out.credits[j];
}

double reported_price(double v, double t, const DiscountCurve& curve) {
  if (!(v >= 0.0)) throw std::domain_error("reported_price: negative valuation");
  return v * curve(t);
}

double utility(double v, double discount, double payment, bool won) { return won ? v * discount - payment : 0.0; }

double second_price(const std::vector<double>& prices) {
  double first = -1.0;
  double second = 0.0;
  bool have_first = false;
  for (double r : prices) {
    if (!have_first || r > first) {
      if (have_first) second = first;
      first = r;
      have_first = true;
    } else if (r > second) {
      second = r;
    }
  }
  return second;
}

AuctionOutcome vickrey_offline(const BidStream& stream) {
  AuctionOutcome out;
  if (stream.events.empty()) return out;
  std::size_t best = 0;
  for (std::size_t j = 1; j < stream.size(); ++j) {
    if (stream.events[j].price > stream.events[best].price) best = j;
  }
  out.winner = best;
  out.payment = second_price(stream.prices());
  out.revenue = out.payment;
  return out;
}

double opt1(const BidStream& stream) {
  double m = 0.0;
  for (const auto& e : stream.events) m = std::max(m, e.price);
  return m;
}

namespace {

void check_enumerable(std::size_t n) {
  if (n > 8) throw std::invalid_argument("exact enumeration refuses n > 8; use the Monte Carlo harness");
}

}  // namespace

double exact_expected_vickrey(const MarketInstance& inst) {
  const std::size_t n = inst.size();
  check_enumerable(n);
  if (n < 2) return 0.0;
  const auto d = inst.slot_discounts();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::vector<double> prices(n);
  double sum = 0.0;
  std::size_t count = 0;
  do {
    for (std::size_t j = 0; j < n; ++j) prices[j] = inst.valuations[perm[j]] * d[j];
    sum += second_price(prices);
    ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return sum / static_cast<double>(count);
}

double exact_expected_observe_select(const MarketInstance& inst, std::size_t first_slot, std::size_t count,
                                     double expected_class_size) {
  const std::size_t n = inst.size();
  check_enumerable(n);
  if (count == 0) return 0.0;
  if (first_slot + count > n) throw std::invalid_argument("class slots outside instance");
  const std::size_t x = static_cast<std::size_t>(std::floor(expected_class_size / 2.0));
  if (x == 0 || count <= x) return 0.0;
  const double q = std::pow(static_cast<double>(x) / static_cast<double>(x + 1), static_cast<double>(x));
  const auto d = inst.slot_discounts();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double sum = 0.0;
  std::size_t total = 0;
  do {
    double obs_max = 0.0;
    for (std::size_t i = 0; i < x; ++i) {
      std::size_t j = first_slot + i;
      obs_max = std::max(obs_max, inst.valuations[perm[j]] * d[j]);
    }
    bool hit = false;
    for (std::size_t i = x; i < count && !hit; ++i) {
      std::size_t j = first_slot + i;
      hit = inst.valuations[perm[j]] * d[j] >= obs_max;
    }
    if (hit) sum += q * obs_max;
    ++total;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return sum / static_cast<double>(total);
}

}  // namespace tda
