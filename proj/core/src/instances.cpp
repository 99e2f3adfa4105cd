#include "tda/instances.hpp"

#include <boost/random/exponential_distribution.hpp>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "tda/format.hpp"

namespace tda {

std::string to_string(ValuationPreset p) {
  switch (p) {
    case ValuationPreset::Uni: return "Uni";
    case ValuationPreset::Nor: return "Nor";
    case ValuationPreset::Exp: return "Exp";
    case ValuationPreset::Ext: return "Ext";
  }
  return "unknown";
}

ValuationPreset valuation_preset_from_string(const std::string& s) {
  if (s == "Uni" || s == "uni") return ValuationPreset::Uni;
  if (s == "Nor" || s == "nor") return ValuationPreset::Nor;
  if (s == "Exp" || s == "exp") return ValuationPreset::Exp;
  if (s == "Ext" || s == "ext") return ValuationPreset::Ext;
  throw std::invalid_argument("unknown valuation preset '" + s + "'");
}

std::vector<double> ext_valuations(std::size_t n) {
  std::vector<double> v(n, 0.0);
  const double nn = static_cast<double>(n);
  if (n >= 1) v[0] = nn * nn * nn * nn;
  if (n >= 2) v[1] = nn;
  return v;
}

ValuationDistribution preset_distribution(ValuationPreset p, std::size_t n) {
  switch (p) {
    case ValuationPreset::Uni: return ValuationDistribution::uniform(0.0, 200.0);
    case ValuationPreset::Nor: return ValuationDistribution::normal(100.0, 20.0);
    case ValuationPreset::Exp: return ValuationDistribution::exponential(50.0);
    case ValuationPreset::Ext: return ValuationDistribution::empirical(ext_valuations(std::max<std::size_t>(n, 1)));
  }
  throw std::invalid_argument("unknown valuation preset");
}

std::vector<double> sample_valuations(ValuationPreset p, std::size_t n, Engine& eng) {
  if (p == ValuationPreset::Ext) return ext_valuations(n);
  const auto dist = preset_distribution(p, n);
  std::vector<double> v(n);
  for (auto& x : v) x = dist.sample(eng);
  return v;
}

std::vector<double> sample_valuations(ValuationPreset p, std::size_t n, std::uint64_t seed) {
  Engine eng(seed);
  return sample_valuations(p, n, eng);
}

std::vector<double> sample_arrivals(double lambda, double t_end, ArrivalMode mode, Engine& eng) {
  if (!(lambda > 0.0)) throw std::invalid_argument("sample_arrivals: lambda must be positive");
  std::vector<double> t;
  if (mode == ArrivalMode::Grid) {
    for (std::size_t j = 1;; ++j) {
      double tj = static_cast<double>(j) / lambda;
      if (tj > t_end * (1.0 + 1e-12)) break;
      t.push_back(std::min(tj, t_end));
    }
    return t;
  }
  boost::random::exponential_distribution<double> gap(lambda);
  double now = 0.0;
  for (;;) {
    now += gap(eng);
    if (now > t_end) break;
    t.push_back(now);
  }
  return t;
}

std::vector<double> sample_arrivals(double lambda, double t_end, ArrivalMode mode, std::uint64_t seed) {
  Engine eng(seed);
  return sample_arrivals(lambda, t_end, mode, eng);
}

DiscountCurve slot_step_curve(const std::vector<std::pair<std::size_t, double>>& levels, double lambda,
                              std::size_t n) {
  std::vector<StepPiece> pieces;
  const double horizon = static_cast<double>(n) / lambda;
  for (const auto& [last_slot, value] : levels) {
    double t_hi = std::min(static_cast<double>(last_slot) / lambda, horizon);
    pieces.push_back({t_hi, value});
    if (t_hi >= horizon) break;
  }
  if (pieces.back().t_hi < horizon) pieces.back().t_hi = horizon;
  return DiscountCurve::table(std::move(pieces), horizon);
}

std::vector<std::string> preset_ids() { return {"eq10", "thm8", "thm10", "eq26", "eq27", "eq29", "eq33"}; }

namespace {

MarketInstance assemble(std::vector<double> values, DiscountCurve curve, double lambda) {
  MarketInstance inst;
  const std::size_t n = values.size();
  inst.valuations = std::move(values);
  inst.arrivals = grid_arrivals(n, lambda);
  inst.lambda = lambda;
  inst.horizon = static_cast<double>(n) / lambda;
  inst.curve = std::move(curve);
  inst.validate();
  return inst;
}

void require(bool ok, const std::string& why) {
  if (!ok) throw std::invalid_argument(why);
}

}  // namespace

MarketInstance make_preset_instance(const std::string& id, const PresetParams& p) {
  const std::size_t n = p.n;
  const double nn = static_cast<double>(n);
  const double deep = std::pow(nn, -p.k);
  const double delta = p.delta.value_or(deep);
  require(p.lambda > 0.0, "lambda must be positive");

  if (id == "eq10" || id == "eq29") {
    require(n >= 3, id + ": need n >= 3");
    require(p.k >= 5.0, id + ": the construction needs k >= 5");
    const double K = p.K.value_or(nn * nn);
    std::vector<double> v(n, delta);
    v[0] = K * std::pow(nn, p.k) - delta;
    v[1] = K;
    const std::size_t top = id == "eq10" ? 1 : 2;
    return assemble(std::move(v), slot_step_curve({{top, 1.0}, {n, deep}}, p.lambda, n), p.lambda);
  }
  if (id == "thm8") {
    require(n >= 3, "thm8: need n >= 3");
    require(p.x >= 2 && p.x <= n, "thm8: x must lie in [2, n]");
    require(p.k >= 5.0, "thm8: the construction needs k >= 5");
    const double K = p.K.value_or(nn * nn);
    std::vector<double> v(n, delta);
    v[0] = std::pow(nn, p.k) * (K - delta);
    v[1] = K;
    std::vector<std::pair<std::size_t, double>> levels{{p.x, 1.0}};
    if (p.x < n) levels.push_back({n, deep});
    return assemble(std::move(v), slot_step_curve(levels, p.lambda, n), p.lambda);
  }
  if (id == "thm10") {
    require(p.c >= 1 && p.c <= 3, "thm10: only c in [1, 3] is generated (n = c^(4c) grows too fast)");
    const int L = p.c;
    require(L >= 2, "thm10: L = c must be at least 2 for distinct levels");
    const double n_total = std::pow(static_cast<double>(L), 4.0 * p.c);
    const auto N = static_cast<std::size_t>(std::llround(n_total));
    require(p.n == 0 || p.n == N, "thm10: n must equal c^(4c) = " + std::to_string(N));
    require(p.t >= 1 && p.t <= 2 * p.c, "thm10: instance index t must lie in [1, 2c]");
    const double K = p.K.value_or(n_total * n_total * n_total);
    auto n_at = [&](int t) { return std::llround(std::pow(static_cast<double>(L), 2.0 * t)); };
    std::vector<std::pair<std::size_t, double>> levels;
    for (int t = 1; t <= 2 * p.c; ++t) {
      levels.push_back({static_cast<std::size_t>(n_at(t)), std::pow(static_cast<double>(L), -t)});
    }
    std::vector<double> v;
    v.reserve(N);
    for (int j = 1; j < p.t; ++j) {
      const auto copies = static_cast<std::size_t>(N / n_at(j) - N / n_at(j + 1));
      v.insert(v.end(), copies, std::pow(K, j));
    }
    v.insert(v.end(), static_cast<std::size_t>(N / n_at(p.t)), std::pow(K, p.t));
    v.resize(N, 0.0);
    return assemble(std::move(v), slot_step_curve(levels, p.lambda, N), p.lambda);
  }
  if (id == "eq26") {
    require(n >= 2, "eq26: need n >= 2");
    require(p.eps > 0.0 && p.eps <= 1.0, "eq26: eps must lie in (0, 1]");
    auto values = ext_valuations(n);
    if (p.K) {
      values[0] = std::pow(*p.K, 4.0);
      values[1] = *p.K;
    }
    auto curve = DiscountCurve::preset(CurveKind::D6, nn / p.lambda, p.lambda, p.eps);
    return assemble(std::move(values), std::move(curve), p.lambda);
  }
  if (id == "eq27") {
    require(n >= 3, "eq27: need n >= 3");
    require(p.B > 1.0, "eq27: B must exceed 1");
    const double K = p.K.value_or(nn * nn);
    std::vector<double> v(n, delta);
    v[1] = K;
    v[0] = std::pow(nn, p.k) * K + delta;
    return assemble(std::move(v), slot_step_curve({{2, 1.0 / p.B}, {n, deep}}, p.lambda, n), p.lambda);
  }
  if (id == "eq33") {
    require(n >= 3, "eq33: need n >= 3");
    require(p.B > 1.0, "eq33: B must exceed 1");
    const double K = p.K.value_or(nn * nn);
    std::vector<double> v(n, 0.0);
    v[0] = p.B * K + 1.0;
    v[1] = K;
    return assemble(std::move(v), slot_step_curve({{2, 1.0}, {n, 1.0 / p.B}}, p.lambda, n), p.lambda);
  }
  throw std::invalid_argument("unknown preset '" + id + "'");
}

std::string ConstantProbe::name() const { return "constant(" + fmt_num(p_) + ")"; }

std::string ThresholdProbe::name() const {
  return "threshold(" + fmt_num(thr_) + "," + fmt_num(hi_) + "," + fmt_num(lo_) + ")";
}

GameTranscript run_adaptive_game(ProbeMechanism& m, std::size_t n, double K, double first_bid) {
  if (!(K > 1.0)) throw std::invalid_argument("game: K must exceed 1");
  GameTranscript g;
  g.bids.assign(n, 0.0);
  if (n == 0) return g;
  const double small = 2.0 / static_cast<double>(n);
  double bid = first_bid;
  double mass = 0.0;
  bool prev_small = false;
  for (std::size_t i = 0; i < n; ++i) {
    // The mechanism cannot commit more than the remaining acceptance mass.
    double p = std::clamp(m.accept_probability(i, bid), 0.0, 1.0);
    p = std::min(p, std::max(0.0, 1.0 - mass));
    mass += p;
    g.bids[i] = bid;
    g.mechanism_revenue += p * bid;
    GameRound r{bid, p, ""};
    if (p > small) {
      r.action = "escalate";
      prev_small = false;
      g.rounds.push_back(r);
      bid *= K;
    } else if (prev_small) {
      r.action = "stop";
      g.rounds.push_back(r);
      break;
    } else {
      r.action = "repeat";
      prev_small = true;
      g.rounds.push_back(r);
    }
  }
  g.accepted_mass = mass;
  g.vickrey = second_price(g.bids);
  g.ratio = g.mechanism_revenue > 0.0 ? g.vickrey / g.mechanism_revenue : std::numeric_limits<double>::infinity();
  return g;
}

}  // namespace tda
