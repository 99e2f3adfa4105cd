#include "tda/online.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tda {

namespace {

std::size_t observation_size(double class_size) {
  return class_size > 0.0 ? static_cast<std::size_t>(std::floor(class_size / 2.0 + 1e-9)) : 0;
}

Decision base_decision(const Event& e, Phase phase) {
  Decision d;
  d.slot = e.slot;
  d.time = e.time;
  d.price = e.price;
  d.phase = phase;
  return d;
}

double key_of(const Event& e, const OnlineOptions& opt) { return opt.compare_valuation ? e.price / e.discount : e.price; }

double threshold_payment(double obs_max, const Event& e, const OnlineOptions& opt) {
  return opt.compare_valuation ? obs_max * e.discount : obs_max;
}

// Probability that none of the first m observed buyers is selected.
double no_selection_probability(std::size_t x, std::size_t m, Lottery lottery) {
  if (x == 0 || m == 0) return 1.0;
  m = std::min(m, x);
  if (lottery == Lottery::UniformSlot) return static_cast<double>(x + 1 - m) / static_cast<double>(x + 1);
  return std::pow(static_cast<double>(x) / static_cast<double>(x + 1), static_cast<double>(m));
}

// Expected revenue of observe-then-select over the class events `idx` once the
// lottery is integrated out. `no_sale_value` is the revenue collected by
// whatever follows when the class ends without a winner.
double class_expected_revenue(const BidStream& s, const std::vector<std::size_t>& idx, double class_size,
                              const OnlineOptions& opt, double no_sale_value) {
  const std::size_t x = observation_size(class_size);
  const std::size_t m = std::min(x, idx.size());
  const double p_none = no_selection_probability(x, m, opt.lottery);
  if (x == 0 || idx.size() <= x) return p_none * no_sale_value;
  double obs_max = 0.0;
  for (std::size_t i = 0; i < x; ++i) obs_max = std::max(obs_max, key_of(s.events[idx[i]], opt));
  for (std::size_t i = x; i < idx.size(); ++i) {
    const Event& e = s.events[idx[i]];
    if (key_of(e, opt) >= obs_max) return p_none * threshold_payment(obs_max, e, opt);
  }
  return p_none * no_sale_value;
}

}  // namespace

ObserveSelectState::ObserveSelectState(double class_size, const OnlineOptions& opt)
    : x_(observation_size(class_size)), opt_(opt) {}

Decision ObserveSelectState::step(const Event& e, Coins& coins) {
  if (won_) return base_decision(e, Phase::Closed);
  const double key = key_of(e, opt_);
  if (seen_ < x_) {
    Decision d = base_decision(e, Phase::Observation);
    bool pick;
    if (opt_.lottery == Lottery::Sequential) {
      pick = coins.flip(1.0 / static_cast<double>(x_ + 1));
    } else {
      if (!lottery_drawn_) {
        std::vector<double> uniform(x_ + 1, 1.0 / static_cast<double>(x_ + 1));
        lottery_slot_ = coins.choose(uniform);
        lottery_drawn_ = true;
      }
      pick = lottery_slot_ == seen_;
    }
    ++seen_;
    if (pick) {
      won_ = true;
      d.accepted = true;
      d.payment = 0.0;
    } else {
      obs_max_ = std::max(obs_max_, key);
    }
    return d;
  }
  ++seen_;
  Decision d = base_decision(e, Phase::Decision);
  // A class of size one has no observation maximum: reject.
  if (x_ == 0) return d;
  if (key >= obs_max_) {
    won_ = true;
    d.accepted = true;
    d.payment = threshold_payment(obs_max_, e, opt_);
  }
  return d;
}

ObserveThenSelect::ObserveThenSelect(double class_size, OnlineOptions opt)
    : class_size_(class_size), active_size_(class_size), opt_(opt) {
  if (!(class_size >= 1.0)) throw std::invalid_argument("observe_then_select: n_c must be >= 1");
}

void ObserveThenSelect::prime(const BidStream& s) {
  active_size_ = opt_.realized_counts ? static_cast<double>(s.size()) : class_size_;
}

void ObserveThenSelect::start(Coins&) { state_ = ObserveSelectState(active_size_, opt_); }

Decision ObserveThenSelect::on_event(const Event& e, Coins& coins) { return state_.step(e, coins); }

std::optional<double> ObserveThenSelect::expected_revenue(const BidStream& s) const {
  std::vector<std::size_t> idx(s.size());
  for (std::size_t j = 0; j < s.size(); ++j) idx[j] = j;
  const double size = opt_.realized_counts ? static_cast<double>(s.size()) : class_size_;
  return class_expected_revenue(s, idx, size, opt_, 0.0);
}

ClassSelect::ClassSelect(std::shared_ptr<const ClassPartition> part, StarRule rule, bool tail, OnlineOptions opt)
    : part_(std::move(part)), rule_(rule), tail_(tail), opt_(opt) {
  if (!part_) throw std::invalid_argument("class_select: missing partition");
}

std::string ClassSelect::name() const {
  switch (rule_) {
    case StarRule::Uniform: return "m_r";
    case StarRule::FirstClass: return "m_1";
    case StarRule::Weighted: return "m_w";
    case StarRule::MostWeighted: return "m_w_most";
  }
  return "class_select";
}

std::vector<double> ClassSelect::star_distribution() const {
  const auto total = part_->classes.size();
  std::vector<double> p(total, 0.0);
  const auto reserved = std::min<std::size_t>(static_cast<std::size_t>(part_->reserved), total);
  switch (rule_) {
    case StarRule::Uniform:
      for (std::size_t c = 0; c < reserved; ++c) p[c] = 1.0 / static_cast<double>(reserved);
      break;
    case StarRule::FirstClass:
      if (total > 0) p[0] = 1.0;
      break;
    case StarRule::Weighted: {
      double sum = 0.0;
      for (std::size_t c = 0; c < reserved; ++c) sum += part_->classes[c].weight;
      for (std::size_t c = 0; c < reserved; ++c) {
        p[c] = sum > 0.0 ? part_->classes[c].weight / sum : 1.0 / static_cast<double>(reserved);
      }
      break;
    }
    case StarRule::MostWeighted: {
      double best = 0.0;
      std::size_t arg = total;
      for (std::size_t c = 0; c < total; ++c) {
        double w = part_->approx_weight(static_cast<int>(c + 1));
        if (w > best) {
          best = w;
          arg = c;
        }
      }
      if (arg < total) p[arg] = 1.0;
      break;
    }
  }
  return p;
}

double ClassSelect::class_size(int c) const {
  if (opt_.realized_counts && !realized_.empty()) {
    return c >= 1 && static_cast<std::size_t>(c) <= realized_.size() ? realized_[static_cast<std::size_t>(c - 1)] : 0.0;
  }
  return part_->expected_size(c);
}

void ClassSelect::prime(const BidStream& s) {
  realized_.clear();
  if (!opt_.realized_counts) return;
  realized_.assign(part_->classes.size(), 0.0);
  for (const auto& e : s.events) {
    int c = part_->class_of(e.discount);
    if (static_cast<std::size_t>(c) <= realized_.size()) realized_[static_cast<std::size_t>(c - 1)] += 1.0;
  }
}

void ClassSelect::start(Coins& coins) {
  star_done_ = false;
  closed_ = false;
  run_max_ = 0.0;
  tail_threshold_ = 0.0;
  weights_fallback_ = false;
  auto probs = star_distribution();
  if (rule_ == StarRule::Weighted) {
    double sum = 0.0;
    for (int c = 1; c <= part_->reserved; ++c) sum += part_->weight(c);
    weights_fallback_ = !(sum > 0.0);
  }
  double mass = 0.0;
  for (double p : probs) mass += p;
  if (!(mass > 0.0)) {
    star_ = 0;
    closed_ = true;
    return;
  }
  // One draw before any event, so the choice cannot depend on bids.
  star_ = static_cast<int>(coins.choose(probs)) + 1;
  obs_ = ObserveSelectState(class_size(star_), opt_);
}

Decision ClassSelect::on_event(const Event& e, Coins& coins) {
  if (closed_) return base_decision(e, Phase::Closed);
  const int c = part_->class_of(e.discount);
  if (!star_done_ && c < star_) {
    run_max_ = std::max(run_max_, e.price);
    return base_decision(e, Phase::PreClass);
  }
  if (!star_done_ && c == star_) {
    run_max_ = std::max(run_max_, e.price);
    Decision d = obs_.step(e, coins);
    if (d.accepted) closed_ = true;
    return d;
  }
  if (!star_done_) {
    star_done_ = true;
    tail_threshold_ = run_max_;
  }
  Decision d = base_decision(e, Phase::Tail);
  if (tail_ && c > part_->reserved && e.price >= tail_threshold_) {
    d.accepted = true;
    d.payment = tail_threshold_;
    closed_ = true;
  }
  return d;
}

void ClassSelect::finish(AuctionOutcome& out) {
  if (weights_fallback_) out.flags.push_back("weights_fallback");
}

std::optional<double> ClassSelect::expected_revenue(const BidStream& s) const {
  const auto probs = star_distribution();
  const std::size_t C = part_->classes.size();
  const std::size_t n = s.size();
  std::vector<int> cls(n);
  std::vector<std::vector<std::size_t>> members(C + 1);
  std::vector<double> realized(C, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    cls[j] = part_->class_of(s.events[j].discount);
    if (static_cast<std::size_t>(cls[j]) <= C) realized[static_cast<std::size_t>(cls[j] - 1)] += 1.0;
  }
  // first_above[c] = first index whose class exceeds c (n if none).
  std::vector<std::size_t> first_above(C + 2, n);
  int max_cls = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (cls[j] > max_cls) {
      for (int c = std::max(max_cls, 1); c < cls[j] && static_cast<std::size_t>(c) <= C + 1; ++c) {
        if (first_above[static_cast<std::size_t>(c)] == n) first_above[static_cast<std::size_t>(c)] = j;
      }
      max_cls = cls[j];
    }
  }
  std::vector<double> prefix_max(n + 1, 0.0);
  for (std::size_t j = 0; j < n; ++j) prefix_max[j + 1] = std::max(prefix_max[j], s.events[j].price);
  std::vector<std::size_t> tail_events;
  for (std::size_t j = 0; j < n; ++j) {
    if (cls[j] > part_->reserved) tail_events.push_back(j);
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (static_cast<std::size_t>(cls[j]) <= C) members[static_cast<std::size_t>(cls[j])].push_back(j);
  }

  double total = 0.0;
  for (std::size_t ci = 0; ci < C; ++ci) {
    if (!(probs[ci] > 0.0)) continue;
    const int c = static_cast<int>(ci + 1);
    const std::size_t stop = first_above[static_cast<std::size_t>(c)];
    std::vector<std::size_t> idx;
    for (std::size_t j : members[static_cast<std::size_t>(c)]) {
      if (j < stop) idx.push_back(j);
    }
    double tail_value = 0.0;
    if (tail_ && stop < n) {
      const double thr = prefix_max[stop];
      auto it = std::lower_bound(tail_events.begin(), tail_events.end(), stop);
      for (; it != tail_events.end(); ++it) {
        if (s.events[*it].price >= thr) {
          tail_value = thr;
          break;
        }
      }
    }
    const double size = opt_.realized_counts ? realized[ci] : part_->expected_size(c);
    total += probs[ci] * class_expected_revenue(s, idx, size, opt_, tail_value);
  }
  return total;
}

ModifiedObserveDecide::ModifiedObserveDecide(std::shared_ptr<const ClassPartition> part, OnlineOptions opt)
    : part_(std::move(part)), opt_(opt) {
  if (!part_) throw std::invalid_argument("mod1: missing partition");
}

void ModifiedObserveDecide::start(Coins&) {
  const double n1 = part_->expected_size(1);
  x_ = observation_size(n1);
  last_ = n1 > 0.0 ? static_cast<std::size_t>(std::floor(n1 + 1e-9)) : 0;
  seen_ = 0;
  obs_max_ = 0.0;
  lottery_slot_ = x_ + 1;
  closed_ = false;
}

Decision ModifiedObserveDecide::on_event(const Event& e, Coins& coins) {
  if (closed_) return base_decision(e, Phase::Closed);
  if (part_->class_of(e.discount) != 1 || x_ == 0) return base_decision(e, Phase::Tail);
  const double key = key_of(e, opt_);
  if (seen_ < x_) {
    Decision d = base_decision(e, Phase::Observation);
    bool pick;
    if (opt_.lottery == Lottery::Sequential) {
      pick = coins.flip(1.0 / static_cast<double>(x_ + 1));
    } else {
      if (seen_ == 0) {
        std::vector<double> uniform(x_ + 1, 1.0 / static_cast<double>(x_ + 1));
        lottery_slot_ = coins.choose(uniform);
      }
      pick = lottery_slot_ == seen_;
    }
    ++seen_;
    if (pick) {
      closed_ = true;
      d.accepted = true;
    } else {
      obs_max_ = std::max(obs_max_, key);
    }
    return d;
  }
  ++seen_;
  Decision d = base_decision(e, Phase::Decision);
  const double threshold = threshold_payment(obs_max_, e, opt_);
  if (key >= obs_max_) {
    d.accepted = true;
    d.payment = threshold;
    closed_ = true;
  } else if (seen_ == last_) {
    // Fallback sale to the last class-1 arrival, capped at its own price.
    d.accepted = true;
    d.payment = std::min(threshold, e.price);
    closed_ = true;
  }
  return d;
}

KnownOptPosted::KnownOptPosted(double Z) : half_(Z / 2.0) {
  if (!(Z > 0.0)) throw std::invalid_argument("m_z: Z must be positive");
}

Decision KnownOptPosted::on_event(const Event& e, Coins&) {
  if (closed_) return base_decision(e, Phase::Closed);
  Decision d = base_decision(e, Phase::Posted);
  if (e.price >= half_) {
    d.accepted = true;
    d.payment = half_;
    closed_ = true;
  }
  return d;
}

void OfflineVickrey::prime(const BidStream& s) {
  auto out = vickrey_offline(s);
  winner_ = out.winner;
  payment_ = out.payment;
}

Decision OfflineVickrey::on_event(const Event& e, Coins&) {
  Decision d = base_decision(e, Phase::Offline);
  if (winner_ && *winner_ == e.slot) {
    d.accepted = true;
    d.payment = payment_;
  }
  return d;
}

Decision OverpayControl::on_event(const Event& e, Coins&) {
  if (closed_) return base_decision(e, Phase::Closed);
  Decision d = base_decision(e, Phase::Posted);
  if (e.price > 0.0) {
    d.accepted = true;
    d.payment = e.price + 1.0;
    closed_ = true;
  }
  return d;
}

}  // namespace tda
