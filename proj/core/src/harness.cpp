#include "tda/harness.hpp"

#include <algorithm>
#include <atomic>
#include <boost/random/uniform_int_distribution.hpp>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <json.hpp>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "tda/format.hpp"

namespace tda {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

std::string join(const std::vector<std::string>& v, const char* sep = ",") {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
  return out;
}

double parse_double(const std::string& s, const std::string& key) {
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument(key + ": expected a number, got '" + s + "'");
  }
  if (pos != s.size()) throw std::invalid_argument(key + ": expected a number, got '" + s + "'");
  return v;
}

std::uint64_t parse_uint(const std::string& s, const std::string& key) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw std::invalid_argument(key + ": expected a non-negative integer, got '" + s + "'");
  }
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw std::invalid_argument(key + ": integer out of range '" + s + "'");
  }
}

bool parse_bool(const std::string& s, const std::string& key) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw std::invalid_argument(key + ": expected true or false, got '" + s + "'");
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;  // sample variance
};

Moments moments(const std::vector<double>& x) {
  Moments m;
  const std::size_t n = x.size();
  if (n == 0) return m;
  double s = 0.0;
  for (double v : x) s += v;
  m.mean = s / static_cast<double>(n);
  if (n > 1) {
    double ss = 0.0;
    for (double v : x) ss += (v - m.mean) * (v - m.mean);
    m.var = ss / static_cast<double>(n - 1);
  }
  return m;
}

// Runs body(i) for i in [0, count) on `threads` workers. Results must be
// written to pre-sized slots so that aggregation order stays fixed.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (threads == 1) {
    body(0u, std::size_t{0}, count);
    return;
  }
  std::atomic<std::size_t> next{0};
  const std::size_t chunk = std::max<std::size_t>(1, count / (threads * 16));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (;;) {
        std::size_t lo = next.fetch_add(chunk);
        if (lo >= count) break;
        body(w, lo, std::min(count, lo + chunk));
      }
    });
  }
  for (auto& t : pool) t.join();
}

ValuationPreset preset_of(const std::string& dist) { return valuation_preset_from_string(dist); }

}  // namespace

// --- Mechanism registry ------------------------------------------------------

MarketContext MarketContext::build(const DiscountCurve& curve, double B, double lambda, double horizon, double k,
                                   std::optional<ValuationDistribution> prior,
                                   std::optional<std::vector<double>> valuation_set) {
  if (!(lambda > 0.0)) throw std::invalid_argument("market: lambda must be positive");
  MarketContext c;
  c.curve = curve;
  c.B = B;
  c.lambda = lambda;
  c.horizon = horizon;
  c.k = k;
  c.n = static_cast<std::size_t>(std::floor(lambda * horizon + 1e-9));
  c.grid_t = grid_arrivals(c.n, lambda);
  c.grid_d.resize(c.n);
  for (std::size_t j = 0; j < c.n; ++j) c.grid_d[j] = curve(c.grid_t[j]);
  c.partition = std::make_shared<const ClassPartition>(partition_curve(curve, B, lambda, k));
  c.prior = std::move(prior);
  c.valuation_set = std::move(valuation_set);
  return c;
}

std::vector<std::string> mechanism_names() {
  return {"m_r", "m_1", "m_w", "m_w_most", "mod1", "m_o", "m_z", "m_f", "m_d", "m_t", "m_l", "vickrey", "overpay"};
}

bool documented_truthful(const std::string& name, DeviationKind kind) {
  if (name == "m_f" || name == "m_z" || name == "m_o" || name == "m_r" || name == "m_1" || name == "m_t") return true;
  if (name == "m_d") return kind == DeviationKind::Scale;
  return false;
}

double opt1_estimate(const MarketContext& ctx) {
  const auto& d = ctx.grid_d;
  if (d.empty()) return 0.0;
  if (ctx.valuation_set && ctx.valuation_set->size() == d.size()) {
    std::vector<double> pos;
    for (double v : *ctx.valuation_set) {
      if (v > 0.0) pos.push_back(v);
    }
    std::sort(pos.rbegin(), pos.rend());
    const double n = static_cast<double>(d.size());
    if (pos.empty()) return 0.0;
    if (pos.size() == 1) return pos[0] * std::accumulate(d.begin(), d.end(), 0.0) / n;
    if (pos.size() == 2) {
      // Average of max(a d_i, b d_j) over ordered pairs of distinct slots.
      double total = 0.0;
      for (std::size_t i = 0; i < d.size(); ++i) {
        for (std::size_t j = 0; j < d.size(); ++j) {
          if (i != j) total += std::max(pos[0] * d[i], pos[1] * d[j]);
        }
      }
      return total / (n * (n - 1.0));
    }
  }
  if (!ctx.prior) throw std::invalid_argument("opt1_estimate: needs a prior or a two-value multiset");
  return expected_max_price(*ctx.prior, d);
}

MechanismFactory make_mechanism_factory(const std::string& name, const MarketContext& ctx,
                                        const MechanismOptions& opt) {
  const auto part = ctx.partition;
  const OnlineOptions on = opt.online;
  if (name == "m_r") return [=] { return std::make_unique<ClassSelect>(part, StarRule::Uniform, true, on); };
  if (name == "m_1") return [=] { return std::make_unique<ClassSelect>(part, StarRule::FirstClass, false, on); };
  if (name == "m_w") return [=] { return std::make_unique<ClassSelect>(part, StarRule::Weighted, true, on); };
  if (name == "m_w_most") {
    return [=] { return std::make_unique<ClassSelect>(part, StarRule::MostWeighted, false, on); };
  }
  if (name == "mod1") return [=] { return std::make_unique<ModifiedObserveDecide>(part, on); };
  if (name == "m_o") {
    const double size = static_cast<double>(std::max<std::size_t>(ctx.n, 1));
    return [=] { return std::make_unique<ObserveThenSelect>(size, on); };
  }
  if (name == "m_z") {
    const double Z = opt.Z ? *opt.Z : opt1_estimate(ctx);
    return [=] { return std::make_unique<KnownOptPosted>(Z); };
  }
  if (name == "vickrey") return [] { return std::make_unique<OfflineVickrey>(); };
  if (name == "overpay") return [] { return std::make_unique<OverpayControl>(); };
  if (name == "m_f" || name == "m_d" || name == "m_t") {
    if (!ctx.prior) throw std::invalid_argument(name + ": needs a valuation prior");
    if (name == "m_f") {
      const double x = fixed_reservation_price(*ctx.prior, ctx.grid_d);
      return [=] { return PostedPrice::fixed(x); };
    }
    auto s = std::make_shared<ReservationSchedule>(dynamic_reservation_schedule(*ctx.prior, ctx.grid_t, ctx.grid_d));
    if (name == "m_d") {
      std::shared_ptr<const ReservationSchedule> cs = s;
      return [=] { return PostedPrice::dynamic(cs); };
    }
    semi_truthful_schedule(*ctx.prior, *s);
    std::shared_ptr<const ReservationSchedule> cs = s;
    const RhoPayment pay = opt.rho_payment;
    return [=] { return PostedPrice::semi_truthful(cs, pay); };
  }
  if (name == "m_l") {
    DistFamily fam = DistFamily::Uniform;
    if (opt.learn_family) {
      fam = *opt.learn_family;
    } else if (ctx.prior && ctx.prior->family() != DistFamily::Empirical) {
      fam = ctx.prior->family();
    }
    const std::size_t ns = opt.samples ? *opt.samples : default_sample_count(ctx.n);
    if (ns >= ctx.n) throw std::invalid_argument("m_l: need fewer learning samples than expected buyers");
    auto t = ctx.grid_t;
    auto d = ctx.grid_d;
    const RhoPayment pay = opt.rho_payment;
    return [=] { return std::make_unique<LearningMechanism>(fam, ns, t, d, pay); };
  }
  throw std::invalid_argument("unknown mechanism '" + name + "'");
}

// --- Experiments -------------------------------------------------------------

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::Sampled: return "sampled";
    case Estimator::Expected: return "expected";
    case Estimator::Importance: return "importance";
  }
  return "unknown";
}

Estimator estimator_from_string(const std::string& s) {
  if (s == "sampled") return Estimator::Sampled;
  if (s == "expected") return Estimator::Expected;
  if (s == "importance") return Estimator::Importance;
  throw std::invalid_argument("estimator: expected sampled, expected or importance, got '" + s + "'");
}

bool ExperimentReport::any_failed() const {
  return std::any_of(cells.begin(), cells.end(), [](const CellResult& c) { return c.failed; });
}

std::uint64_t cell_seed(std::uint64_t base, const std::string& curve, const std::string& dist, std::size_t n) {
  return derive_seed(base, fnv1a(curve + "|" + dist + "|" + std::to_string(n)));
}

unsigned default_threads() {
  if (const char* env = std::getenv("TDA_THREADS")) {
    try {
      unsigned long v = std::stoul(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<Decision> ir_audit(const AuctionOutcome& out) {
  std::vector<Decision> bad;
  for (const auto& d : out.transcript) {
    if (d.accepted && d.payment > d.price) bad.push_back(d);
  }
  return bad;
}

namespace {

struct Replication {
  BidStream stream;
  double weight = 1.0;
};

// Draws one replication: valuations, arrivals and the slot assignment.
Replication draw_replication(const ExperimentConfig& cfg, const MarketContext& ctx, ValuationPreset vp,
                             std::uint64_t seed) {
  Engine eng(seed);
  Replication rep;
  std::vector<double> times, disc;
  if (cfg.arrivals == ArrivalMode::Grid) {
    times = ctx.grid_t;
    disc = ctx.grid_d;
  } else {
    times = sample_arrivals(ctx.lambda, ctx.horizon, ArrivalMode::Poisson, eng);
    disc.resize(times.size());
    for (std::size_t j = 0; j < times.size(); ++j) disc[j] = ctx.curve(times[j]);
  }
  const std::size_t n = times.size();
  std::vector<double> vals = sample_valuations(vp, n, eng);
  std::vector<std::size_t> perm(n);
  if (cfg.estimator == Estimator::Importance && n > 0) {
    // Place the top valuations with a discount-tilted proposal, the rest
    // uniformly; the weight corrects back to uniform slot assignment.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] > vals[b]; });
    const std::size_t top = std::min(cfg.is_top, n);
    std::vector<char> used(n, 0);
    std::vector<std::size_t> slot_of(n, n);
    double w = 1.0;
    for (std::size_t i = 0; i < top; ++i) {
      std::vector<double> q(n, 0.0);
      double dsum = 0.0;
      std::size_t free = 0;
      for (std::size_t s = 0; s < n; ++s) {
        if (!used[s]) {
          dsum += disc[s];
          ++free;
        }
      }
      double qsum = 0.0;
      for (std::size_t s = 0; s < n; ++s) {
        if (used[s]) continue;
        q[s] = cfg.is_alpha / static_cast<double>(free) + (1.0 - cfg.is_alpha) * (dsum > 0.0 ? disc[s] / dsum : 0.0);
        qsum += q[s];
      }
      double u = uniform01(eng) * qsum, acc = 0.0;
      std::size_t pick = n;
      for (std::size_t s = 0; s < n; ++s) {
        if (used[s]) continue;
        acc += q[s];
        pick = s;
        if (u < acc) break;
      }
      used[pick] = 1;
      slot_of[order[i]] = pick;
      w *= (1.0 / static_cast<double>(free)) / (q[pick] / qsum);
    }
    std::vector<std::size_t> free_slots;
    for (std::size_t s = 0; s < n; ++s) {
      if (!used[s]) free_slots.push_back(s);
    }
    auto shuffle = random_permutation(free_slots.size(), eng);
    std::size_t k = 0;
    for (std::size_t i = top; i < n; ++i) slot_of[order[i]] = free_slots[shuffle[k++]];
    for (std::size_t v = 0; v < n; ++v) perm[slot_of[v]] = v;
    rep.weight = w;
  } else {
    perm = random_permutation(n, eng);
  }
  std::vector<double> by_slot(n);
  for (std::size_t j = 0; j < n; ++j) by_slot[j] = vals[perm[j]];
  rep.stream = make_stream(by_slot, times, disc);
  rep.stream.perm = perm;
  return rep;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  ExperimentReport report;
  report.config = cfg;
  const unsigned threads = cfg.threads ? cfg.threads : default_threads();
  for (std::size_t n : cfg.n_values) {
    for (const auto& curve_name : cfg.curves) {
      for (const auto& dist_name : cfg.dists) {
        const auto t0 = std::chrono::steady_clock::now();
        const double lambda = cfg.lambda_for(n);
        const std::size_t reps = cfg.reps_for(n);
        const std::uint64_t cseed = cell_seed(cfg.seed, curve_name, dist_name, n);
        const std::size_t M = cfg.mechanisms.size();
        std::vector<CellResult> cells(M);
        for (std::size_t m = 0; m < M; ++m) {
          auto& c = cells[m];
          c.mechanism = cfg.mechanisms[m];
          c.curve = curve_name;
          c.dist = dist_name;
          c.n = n;
          c.B = cfg.B;
          c.lambda = lambda;
          c.reps = reps;
          c.seed = cseed;
        }
        std::vector<MechanismFactory> factories(M);
        std::optional<MarketContext> ctx;
        ValuationPreset vp = ValuationPreset::Uni;
        try {
          vp = preset_of(dist_name);
          const double eps = cfg.eps_exponent > 0.0 ? std::pow(static_cast<double>(n), -cfg.eps_exponent) : cfg.eps;
          auto curve = DiscountCurve::preset(curve_kind_from_string(curve_name), cfg.horizon, lambda, eps);
          std::optional<std::vector<double>> vset;
          if (vp == ValuationPreset::Ext) vset = ext_valuations(static_cast<std::size_t>(std::floor(lambda * cfg.horizon + 1e-9)));
          ctx = MarketContext::build(curve, cfg.B, lambda, cfg.horizon, cfg.k, preset_distribution(vp, n), vset);
        } catch (const std::exception& e) {
          for (auto& c : cells) {
            c.failed = true;
            c.failure = e.what();
          }
        }
        if (ctx) {
          for (std::size_t m = 0; m < M; ++m) {
            try {
              factories[m] = make_mechanism_factory(cfg.mechanisms[m], *ctx, cfg.mech);
            } catch (const std::exception& e) {
              cells[m].failed = true;
              cells[m].failure = e.what();
            }
          }
        }

        std::vector<double> vick(reps, 0.0), weight(reps, 1.0);
        std::vector<std::vector<double>> rev(M, std::vector<double>(reps, 0.0));
        std::vector<std::vector<char>> failed(M, std::vector<char>(reps, 0));
        std::vector<std::string> fail_msg(M);
        std::vector<std::size_t> viol_count(M, 0);
        std::vector<IrViolation> viol;
        std::mutex mu;
        if (ctx) {
          std::vector<std::vector<std::unique_ptr<Mechanism>>> pool(threads);
          parallel_for(reps, threads, [&](unsigned w, std::size_t lo, std::size_t hi) {
            auto& mine = pool[w];
            if (mine.empty()) {
              mine.resize(M);
              for (std::size_t m = 0; m < M; ++m) {
                if (factories[m]) mine[m] = factories[m]();
              }
            }
            for (std::size_t r = lo; r < hi; ++r) {
              const std::uint64_t rseed = derive_seed(cseed, r);
              Replication rep;
              try {
                rep = draw_replication(cfg, *ctx, vp, rseed);
              } catch (const std::exception& e) {
                std::lock_guard lk(mu);
                for (std::size_t m = 0; m < M; ++m) {
                  failed[m][r] = 1;
                  if (fail_msg[m].empty()) fail_msg[m] = e.what();
                }
                continue;
              }
              weight[r] = rep.weight;
              vick[r] = second_price(rep.stream.prices());
              for (std::size_t m = 0; m < M; ++m) {
                if (!mine[m]) continue;
                try {
                  Mechanism& mech = *mine[m];
                  RandomCoins coins(derive_seed(rseed, fnv1a(cfg.mechanisms[m])));
                  std::optional<AuctionOutcome> sampled;
                  if (cfg.estimator == Estimator::Sampled || cfg.audit) {
                    sampled = run_mechanism(mech, rep.stream, coins, false);
                  }
                  rev[m][r] = cfg.estimator == Estimator::Sampled ? sampled->revenue : expected_revenue(mech, rep.stream);
                  if (cfg.audit) {
                    auto bad = ir_audit(*sampled);
                    if (!bad.empty()) {
                      std::lock_guard lk(mu);
                      viol_count[m] += bad.size();
                      for (const auto& b : bad) {
                        viol.push_back({cfg.mechanisms[m], curve_name, dist_name, n, r, rseed, b.slot, b.price, b.payment});
                      }
                    }
                  }
                } catch (const std::exception& e) {
                  std::lock_guard lk(mu);
                  failed[m][r] = 1;
                  if (fail_msg[m].empty()) fail_msg[m] = e.what();
                }
              }
            }
          });
        }

        const double wall =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        std::vector<double> b(reps);
        for (std::size_t r = 0; r < reps; ++r) b[r] = weight[r] * vick[r];
        const Moments mb = moments(b);
        for (std::size_t m = 0; m < M; ++m) {
          auto& c = cells[m];
          c.wall_ms = wall;
          auto first_bad = std::find(failed[m].begin(), failed[m].end(), 1);
          if (first_bad != failed[m].end()) {
            c.failed = true;
            c.failed_seed = derive_seed(cseed, static_cast<std::uint64_t>(first_bad - failed[m].begin()));
            c.failure = fail_msg[m];
          }
          c.ir_violations = viol_count[m];
          if (c.failed || reps == 0) continue;
          std::vector<double> a(reps);
          for (std::size_t r = 0; r < reps; ++r) a[r] = weight[r] * rev[m][r];
          const Moments ma = moments(a);
          const double N = static_cast<double>(reps);
          c.mean_rev = ma.mean;
          c.mean_vickrey = mb.mean;
          c.rev_ci95 = 1.96 * std::sqrt(ma.var / N);
          c.vickrey_ci95 = 1.96 * std::sqrt(mb.var / N);
          if (mb.mean > 0.0) {
            c.ratio = ma.mean / mb.mean;
            std::vector<double> resid(reps);
            for (std::size_t r = 0; r < reps; ++r) resid[r] = a[r] - c.ratio * b[r];
            c.ci95 = 1.96 * std::sqrt(moments(resid).var / N) / mb.mean;
          } else {
            c.ratio = std::numeric_limits<double>::quiet_NaN();
            c.ci95 = std::numeric_limits<double>::quiet_NaN();
          }
        }
        // Keep violations in replication order so reports stay deterministic.
        std::sort(viol.begin(), viol.end(), [&](const IrViolation& x, const IrViolation& y) {
          if (x.rep != y.rep) return x.rep < y.rep;
          return x.mechanism < y.mechanism;
        });
        std::vector<std::size_t> kept(M, 0);
        for (const auto& v : viol) {
          auto m = static_cast<std::size_t>(
              std::find(cfg.mechanisms.begin(), cfg.mechanisms.end(), v.mechanism) - cfg.mechanisms.begin());
          if (kept[m]++ < 5) report.violations.push_back(v);
        }
        for (auto& c : cells) {
          report.total_violations += c.ir_violations;
          if (cfg.progress) {
            std::cerr << "[cell] " << c.mechanism << ' ' << c.curve << ' ' << c.dist << " n=" << c.n
                      << " reps=" << c.reps << " ratio=" << fmt_num(c.ratio) << (c.failed ? " FAILED" : "") << '\n';
          }
          report.cells.push_back(std::move(c));
        }
      }
    }
  }
  return report;
}

std::string report_csv(const ExperimentReport& r) {
  std::ostringstream os;
  os << "# tdlab " << kVersion << '\n';
  std::istringstream cfg(config_to_text(r.config));
  for (std::string line; std::getline(cfg, line);) os << "# " << line << '\n';
  os << "mechanism,curve,dist,n,B,lambda,reps,mean_rev,mean_vickrey,ratio,ci95,seed\n";
  for (const auto& c : r.cells) {
    os << c.mechanism << ',' << c.curve << ',' << c.dist << ',' << c.n << ',' << fmt_num(c.B) << ','
       << fmt_num(c.lambda) << ',' << c.reps << ',';
    if (c.failed) {
      os << "failed,failed,failed,failed," << c.seed << '\n';
    } else {
      os << fmt_num(c.mean_rev) << ',' << fmt_num(c.mean_vickrey) << ',' << fmt_num(c.ratio) << ','
         << fmt_num(c.ci95) << ',' << c.seed << '\n';
    }
  }
  return os.str();
}

std::string report_json(const ExperimentReport& r) {
  using nlohmann::json;
  json j;
  j["tool"] = "tdlab";
  j["version"] = kVersion;
  j["config"] = config_to_text(r.config);
  json cells = json::array();
  for (const auto& c : r.cells) {
    json x = {{"mechanism", c.mechanism}, {"curve", c.curve},       {"dist", c.dist},
              {"n", c.n},                 {"B", c.B},               {"lambda", c.lambda},
              {"reps", c.reps},           {"seed", c.seed},         {"failed", c.failed},
              {"ir_violations", c.ir_violations}, {"wall_ms", c.wall_ms}};
    if (c.failed) {
      x["failure"] = c.failure;
      if (c.failed_seed) x["failed_seed"] = *c.failed_seed;
    } else {
      x["mean_rev"] = c.mean_rev;
      x["mean_vickrey"] = c.mean_vickrey;
      x["rev_ci95"] = c.rev_ci95;
      x["vickrey_ci95"] = c.vickrey_ci95;
      if (std::isfinite(c.ratio)) {
        x["ratio"] = c.ratio;
        x["ci95"] = c.ci95;
      } else {
        x["ratio"] = nullptr;
        x["ci95"] = nullptr;
      }
    }
    cells.push_back(std::move(x));
  }
  j["cells"] = std::move(cells);
  json v = json::array();
  for (const auto& x : r.violations) {
    v.push_back({{"mechanism", x.mechanism}, {"curve", x.curve}, {"dist", x.dist}, {"n", x.n}, {"rep", x.rep},
                 {"seed", x.seed}, {"slot", x.slot}, {"price", x.price}, {"payment", x.payment}});
  }
  j["ir_violations"] = std::move(v);
  j["total_ir_violations"] = r.total_violations;
  return j.dump(2) + "\n";
}

// --- Config files ------------------------------------------------------------

ConfigError::ConfigError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

std::map<std::string, std::string> parse_flat_config(const std::string& text,
                                                     std::map<std::string, std::size_t>* lines) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    auto hash = raw.find('#');
    std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(lineno, "expected 'key = value', got '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(lineno, "missing key");
    kv[key] = value;
    if (lines) (*lines)[key] = lineno;
  }
  return kv;
}

std::vector<std::size_t> parse_n_sweep(const std::string& s) {
  std::vector<std::size_t> out;
  for (const auto& part : split(s, ',')) {
    auto dots = part.find("..");
    if (dots == std::string::npos) {
      out.push_back(parse_uint(part, "n"));
      continue;
    }
    auto colon = part.find(':', dots);
    const std::uint64_t lo = parse_uint(part.substr(0, dots), "n");
    const std::uint64_t hi =
        parse_uint(part.substr(dots + 2, colon == std::string::npos ? std::string::npos : colon - dots - 2), "n");
    const std::uint64_t step = colon == std::string::npos ? 1 : parse_uint(part.substr(colon + 1), "n");
    if (step == 0 || hi < lo) throw std::invalid_argument("n: bad range '" + part + "'");
    for (std::uint64_t v = lo; v <= hi; v += step) out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("n: empty sweep");
  return out;
}

void apply_config_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "mech" || key == "mechanisms") {
    auto v = split(value, ',');
    for (const auto& m : v) {
      auto names = mechanism_names();
      if (std::find(names.begin(), names.end(), m) == names.end()) {
        throw std::invalid_argument("mech: unknown mechanism '" + m + "'");
      }
    }
    if (v.empty()) throw std::invalid_argument("mech: empty list");
    cfg.mechanisms = v;
  } else if (key == "curve" || key == "curves") {
    auto v = split(value, ',');
    for (const auto& c : v) {
      auto kind = curve_kind_from_string(c);
      if (kind == CurveKind::Table || kind == CurveKind::Custom) throw std::invalid_argument("curve: only D1..D6");
    }
    if (v.empty()) throw std::invalid_argument("curve: empty list");
    cfg.curves = v;
  } else if (key == "dist" || key == "dists") {
    auto v = split(value, ',');
    for (auto& d : v) d = to_string(valuation_preset_from_string(d));
    if (v.empty()) throw std::invalid_argument("dist: empty list");
    cfg.dists = v;
  } else if (key == "n") {
    cfg.n_values = parse_n_sweep(value);
  } else if (key == "B") {
    cfg.B = parse_double(value, key);
    if (!(cfg.B > 1.0)) throw std::invalid_argument("B: must exceed 1");
  } else if (key == "lambda") {
    cfg.lambda = value == "auto" ? 0.0 : parse_double(value, key);
    if (cfg.lambda < 0.0) throw std::invalid_argument("lambda: must be positive or auto");
  } else if (key == "horizon") {
    cfg.horizon = parse_double(value, key);
    if (!(cfg.horizon > 0.0)) throw std::invalid_argument("horizon: must be positive");
  } else if (key == "reps") {
    cfg.reps = value == "auto" ? 0 : parse_uint(value, key);
  } else if (key == "seed") {
    cfg.seed = parse_uint(value, key);
  } else if (key == "threads") {
    cfg.threads = static_cast<unsigned>(value == "auto" ? 0 : parse_uint(value, key));
  } else if (key == "k") {
    cfg.k = parse_double(value, key);
    if (cfg.k < 0.0) throw std::invalid_argument("k: must be non-negative");
  } else if (key == "eps") {
    cfg.eps = parse_double(value, key);
    if (!(cfg.eps > 0.0 && cfg.eps <= 1.0)) throw std::invalid_argument("eps: must lie in (0, 1]");
  } else if (key == "eps_exponent") {
    cfg.eps_exponent = parse_double(value, key);
  } else if (key == "arrivals") {
    if (value == "grid") cfg.arrivals = ArrivalMode::Grid;
    else if (value == "poisson") cfg.arrivals = ArrivalMode::Poisson;
    else throw std::invalid_argument("arrivals: expected grid or poisson");
  } else if (key == "estimator") {
    cfg.estimator = estimator_from_string(value);
  } else if (key == "is_alpha") {
    cfg.is_alpha = parse_double(value, key);
    if (!(cfg.is_alpha > 0.0 && cfg.is_alpha <= 1.0)) throw std::invalid_argument("is_alpha: must lie in (0, 1]");
  } else if (key == "is_top") {
    cfg.is_top = parse_uint(value, key);
  } else if (key == "audit") {
    cfg.audit = parse_bool(value, key);
  } else if (key == "progress") {
    cfg.progress = parse_bool(value, key);
  } else if (key == "compare") {
    if (value == "price") cfg.mech.online.compare_valuation = false;
    else if (value == "valuation") cfg.mech.online.compare_valuation = true;
    else throw std::invalid_argument("compare: expected price or valuation");
  } else if (key == "counts") {
    if (value == "expected") cfg.mech.online.realized_counts = false;
    else if (value == "realized") cfg.mech.online.realized_counts = true;
    else throw std::invalid_argument("counts: expected expected or realized");
  } else if (key == "lottery") {
    if (value == "sequential") cfg.mech.online.lottery = Lottery::Sequential;
    else if (value == "uniform_slot") cfg.mech.online.lottery = Lottery::UniformSlot;
    else throw std::invalid_argument("lottery: expected sequential or uniform_slot");
  } else if (key == "rho_payment") {
    if (value == "guarded") cfg.mech.rho_payment = RhoPayment::Guarded;
    else if (value == "literal") cfg.mech.rho_payment = RhoPayment::Literal;
    else throw std::invalid_argument("rho_payment: expected guarded or literal");
  } else if (key == "Z") {
    if (value == "auto") cfg.mech.Z.reset();
    else cfg.mech.Z = parse_double(value, key);
  } else if (key == "samples") {
    if (value == "auto") cfg.mech.samples.reset();
    else cfg.mech.samples = parse_uint(value, key);
  } else if (key == "learn_family") {
    if (value == "auto") cfg.mech.learn_family.reset();
    else cfg.mech.learn_family = dist_family_from_string(value);
  } else {
    throw std::invalid_argument("unknown key '" + key + "'");
  }
}

ExperimentConfig config_from_text(const std::string& text) {
  std::map<std::string, std::size_t> lines;
  auto kv = parse_flat_config(text, &lines);
  ExperimentConfig cfg;
  if (auto it = kv.find("preset"); it != kv.end()) {
    try {
      cfg = experiment_preset(it->second);
    } catch (const std::exception& e) {
      throw ConfigError(lines["preset"], e.what());
    }
    kv.erase(it);
  }
  for (const auto& [k, v] : kv) {
    try {
      apply_config_key(cfg, k, v);
    } catch (const std::exception& e) {
      throw ConfigError(lines[k], e.what());
    }
  }
  return cfg;
}

std::string config_to_text(const ExperimentConfig& cfg) {
  std::ostringstream os;
  std::vector<std::string> ns;
  for (auto n : cfg.n_values) ns.push_back(std::to_string(n));
  os << "mech = " << join(cfg.mechanisms) << '\n'
     << "curve = " << join(cfg.curves) << '\n'
     << "dist = " << join(cfg.dists) << '\n'
     << "n = " << join(ns) << '\n'
     << "B = " << fmt_num(cfg.B) << '\n'
     << "lambda = " << (cfg.lambda > 0.0 ? fmt_num(cfg.lambda) : "auto") << '\n'
     << "horizon = " << fmt_num(cfg.horizon) << '\n'
     << "reps = " << (cfg.reps ? std::to_string(cfg.reps) : "auto") << '\n'
     << "seed = " << cfg.seed << '\n'
     << "k = " << fmt_num(cfg.k) << '\n'
     << "eps = " << fmt_num(cfg.eps) << '\n'
     << "eps_exponent = " << fmt_num(cfg.eps_exponent) << '\n'
     << "arrivals = " << (cfg.arrivals == ArrivalMode::Grid ? "grid" : "poisson") << '\n'
     << "estimator = " << to_string(cfg.estimator) << '\n'
     << "is_alpha = " << fmt_num(cfg.is_alpha) << '\n'
     << "is_top = " << cfg.is_top << '\n'
     << "audit = " << (cfg.audit ? "true" : "false") << '\n'
     << "compare = " << (cfg.mech.online.compare_valuation ? "valuation" : "price") << '\n'
     << "counts = " << (cfg.mech.online.realized_counts ? "realized" : "expected") << '\n'
     << "lottery = " << (cfg.mech.online.lottery == Lottery::Sequential ? "sequential" : "uniform_slot") << '\n'
     << "rho_payment = " << (cfg.mech.rho_payment == RhoPayment::Guarded ? "guarded" : "literal") << '\n'
     << "Z = " << (cfg.mech.Z ? fmt_num(*cfg.mech.Z) : "auto") << '\n'
     << "samples = " << (cfg.mech.samples ? std::to_string(*cfg.mech.samples) : "auto") << '\n'
     << "learn_family = " << (cfg.mech.learn_family ? to_string(*cfg.mech.learn_family) : "auto") << '\n';
  return os.str();
}

std::vector<std::string> experiment_preset_names() { return {"paper-fig-ratios", "ir-sweep", "worst-case-eq26"}; }

ExperimentConfig experiment_preset(const std::string& name) {
  ExperimentConfig cfg;
  if (name == "paper-fig-ratios") {
    cfg.mechanisms = {"m_r", "m_w", "m_1", "m_w_most"};
    cfg.curves = {"D1", "D2", "D3", "D4", "D5", "D6"};
    cfg.dists = {"Uni", "Nor", "Exp", "Ext"};
    cfg.n_values = parse_n_sweep("1000..5000:500");
    return cfg;
  }
  if (name == "ir-sweep") {
    cfg.mechanisms = {"m_r", "m_1", "m_w", "m_w_most", "mod1", "m_o", "m_z", "m_f", "m_d", "m_t", "m_l", "vickrey"};
    cfg.curves = {"D1", "D2", "D3", "D4", "D5", "D6"};
    cfg.dists = {"Uni", "Nor", "Exp", "Ext"};
    cfg.n_values = {1000};
    cfg.reps = 200;
    return cfg;
  }
  if (name == "worst-case-eq26") {
    cfg.mechanisms = {"m_r"};
    cfg.curves = {"D6"};
    cfg.dists = {"Ext"};
    cfg.n_values = {256, 1024, 4096};
    cfg.eps_exponent = 5.0;
    cfg.estimator = Estimator::Importance;
    return cfg;
  }
  throw std::invalid_argument("unknown experiment preset '" + name + "'");
}

// --- Instances on disk ---------------------------------------------------------

std::string instance_to_json(const MarketInstance& inst) {
  using nlohmann::json;
  const auto& c = inst.curve;
  if (c.kind() == CurveKind::Custom) throw std::invalid_argument("instance_to_json: custom curves cannot be serialised");
  json curve = {{"kind", to_string(c.kind())}, {"horizon", c.horizon()}, {"lambda", c.lambda()}, {"eps", c.eps()}};
  if (c.kind() == CurveKind::Table) {
    json pieces = json::array();
    for (const auto& p : c.pieces()) pieces.push_back({p.t_hi, p.value});
    curve["pieces"] = std::move(pieces);
  }
  json j = {{"valuations", inst.valuations},
            {"arrivals", inst.arrivals},
            {"curve", std::move(curve)},
            {"lambda", inst.lambda},
            {"horizon", inst.horizon}};
  return j.dump(2) + "\n";
}

MarketInstance instance_from_json(const std::string& text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("instance json: ") + e.what());
  }
  try {
    MarketInstance inst;
    inst.valuations = j.at("valuations").get<std::vector<double>>();
    inst.arrivals = j.at("arrivals").get<std::vector<double>>();
    inst.lambda = j.at("lambda").get<double>();
    inst.horizon = j.at("horizon").get<double>();
    const auto& c = j.at("curve");
    const auto kind = curve_kind_from_string(c.at("kind").get<std::string>());
    const double horizon = c.at("horizon").get<double>();
    if (kind == CurveKind::Table) {
      std::vector<StepPiece> pieces;
      for (const auto& p : c.at("pieces")) pieces.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      inst.curve = DiscountCurve::table(std::move(pieces), horizon);
    } else if (kind == CurveKind::Custom) {
      throw std::invalid_argument("instance json: custom curves cannot be restored");
    } else {
      inst.curve = DiscountCurve::preset(kind, horizon, c.at("lambda").get<double>(), c.at("eps").get<double>());
    }
    inst.validate();
    return inst;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("instance json: ") + e.what());
  }
}

// --- Truthfulness probes ------------------------------------------------------

std::string Deviation::label() const {
  std::string delay_s = to_next_class ? "next-class" : std::to_string(delay);
  switch (kind) {
    case DeviationKind::Scale: return "scale=" + fmt_num(factor);
    case DeviationKind::Delay: return "delay=" + delay_s;
    case DeviationKind::Combined: return "scale=" + fmt_num(factor) + "+delay=" + delay_s;
  }
  return "unknown";
}

std::vector<Deviation> default_deviations(bool scale, bool delay) {
  std::vector<Deviation> out;
  if (scale) {
    for (double f : {0.5, 0.9, 1.1, 2.0}) out.push_back({DeviationKind::Scale, f, 0, false});
  }
  if (delay) {
    out.push_back({DeviationKind::Delay, 1.0, 1, false});
    out.push_back({DeviationKind::Delay, 1.0, 2, false});
    out.push_back({DeviationKind::Delay, 1.0, 0, true});
  }
  return out;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "PASS";
    case Verdict::Fail: return "FAIL";
    case Verdict::Inconclusive: return "INCONCLUSIVE";
    case Verdict::Skipped: return "SKIPPED";
  }
  return "unknown";
}

namespace {

// Target utility for one stream and one coin source.
double target_utility(Mechanism& m, const BidStream& s, std::size_t slot, double true_price, Coins& coins) {
  AuctionOutcome out = run_mechanism(m, s, coins, false);
  double u = 0.0;
  if (out.winner && *out.winner == slot) u += true_price - out.payment;
  if (slot < out.credits.size()) u += out.credits[slot];
  return u;
}

// Stream with the target at `slot` reporting `factor` times its true price
// and co-bidders filling the other slots in `order`.
BidStream probe_stream(const MarketInstance& inst, const std::vector<double>& disc, std::size_t target,
                       std::size_t slot, double factor, const std::vector<std::size_t>& order) {
  const std::size_t n = inst.size();
  std::vector<double> vals(n);
  std::vector<std::size_t> perm(n);
  std::size_t k = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == slot) {
      perm[j] = target;
      vals[j] = inst.valuations[target];
    } else {
      perm[j] = order[k++];
      vals[j] = inst.valuations[perm[j]];
    }
  }
  BidStream s = make_stream(vals, inst.arrivals, disc);
  s.perm = perm;
  s.events[slot].price *= factor;
  return s;
}

}  // namespace

std::vector<ProbeResult> truthfulness_probe(const ProbeSetup& setup) {
  const auto& inst = setup.instance;
  inst.validate();
  const std::size_t n = inst.size();
  if (setup.target >= n || setup.slot >= n) throw std::invalid_argument("probe: target or slot out of range");
  if (setup.exact && n > 6) throw std::invalid_argument("probe: exact mode supports n <= 6");
  const auto ctx = MarketContext::build(inst.curve, setup.B, inst.lambda, inst.horizon, setup.k, setup.prior,
                                        inst.valuations);
  const auto factory = make_mechanism_factory(setup.mechanism, ctx, setup.options);
  const auto disc = inst.slot_discounts();
  const auto& part = *ctx.partition;

  std::vector<std::size_t> others;
  for (std::size_t i = 0; i < n; ++i) {
    if (i != setup.target) others.push_back(i);
  }
  const double v = inst.valuations[setup.target];

  std::vector<ProbeResult> results;
  for (const auto& dev : setup.deviations) {
    ProbeResult res;
    res.mechanism = setup.mechanism;
    res.deviation = dev.label();
    res.slot = setup.slot;
    res.exact = setup.exact;
    const bool delays = dev.kind != DeviationKind::Scale;
    const double factor = dev.kind == DeviationKind::Delay ? 1.0 : dev.factor;
    std::size_t dslot = setup.slot;
    bool skip = false;
    if (delays) {
      if (dev.to_next_class) {
        const int c0 = part.class_of(disc[setup.slot]);
        std::size_t j = setup.slot + 1;
        while (j < n && part.class_of(disc[j]) <= c0) ++j;
        skip = j >= n;
        dslot = j;
      } else {
        dslot = setup.slot + dev.delay;
        skip = dslot >= n;
      }
    }
    res.deviant_slot = skip ? n : dslot;
    if (skip) {
      // The buyer would arrive after the horizon, so the deviation is void.
      res.verdict = Verdict::Skipped;
      results.push_back(res);
      continue;
    }
    res.crosses_class = part.class_of(disc[dslot]) != part.class_of(disc[setup.slot]);
    const double true_now = v * disc[setup.slot];
    const double true_later = v * disc[dslot];
    auto mech = factory();

    auto eval_pair = [&](const std::vector<std::size_t>& order, auto&& coin_expect) {
      BidStream truthful = probe_stream(inst, disc, setup.target, setup.slot, 1.0, order);
      BidStream deviant = probe_stream(inst, disc, setup.target, dslot, factor, order);
      double ut = coin_expect(truthful, setup.slot, true_now);
      double ud = coin_expect(deviant, dslot, true_later);
      return std::pair{ut, ud};
    };

    if (setup.exact) {
      std::vector<std::size_t> order = others;
      std::sort(order.begin(), order.end());
      double st = 0.0, sd = 0.0;
      std::size_t count = 0;
      auto exact_coins = [&](const BidStream& s, std::size_t slot, double tp) {
        double e = 0.0;
        enumerate_coins([&](Coins& c) { return target_utility(*mech, s, slot, tp, c); },
                        [&](double p, double u) { e += p * u; });
        return e;
      };
      do {
        auto [ut, ud] = eval_pair(order, exact_coins);
        st += ut;
        sd += ud;
        ++count;
      } while (std::next_permutation(order.begin(), order.end()));
      res.truthful = st / static_cast<double>(count);
      res.deviant = sd / static_cast<double>(count);
      res.gain = res.deviant - res.truthful;
      const double tol = 1e-9 * std::max({1.0, std::abs(res.truthful), std::abs(res.deviant)});
      res.verdict = res.gain <= tol ? Verdict::Pass : Verdict::Fail;
    } else {
      std::vector<double> gains(setup.reps), tr(setup.reps), dv(setup.reps);
      for (std::size_t r = 0; r < setup.reps; ++r) {
        const std::uint64_t rs = derive_seed(setup.seed, r);
        Engine eng(rs);
        auto p = random_permutation(others.size(), eng);
        std::vector<std::size_t> order(others.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = others[p[i]];
        const std::uint64_t coin_seed = derive_seed(rs, 0x636f696eULL);
        // Common random numbers: both runs see the same coin sequence.
        auto sampled = [&](const BidStream& s, std::size_t slot, double tp) {
          RandomCoins c(coin_seed);
          return target_utility(*mech, s, slot, tp, c);
        };
        auto [ut, ud] = eval_pair(order, sampled);
        tr[r] = ut;
        dv[r] = ud;
        gains[r] = ud - ut;
      }
      const Moments mg = moments(gains);
      res.truthful = moments(tr).mean;
      res.deviant = moments(dv).mean;
      res.gain = mg.mean;
      const double se = std::sqrt(mg.var / static_cast<double>(std::max<std::size_t>(setup.reps, 1)));
      res.ci95 = 1.96 * se;
      const double tol = 1e-9 * std::max({1.0, std::abs(res.truthful), std::abs(res.deviant)});
      if (res.gain <= tol) res.verdict = Verdict::Pass;
      else if (res.gain > 3.0 * se + tol) res.verdict = Verdict::Fail;
      else res.verdict = Verdict::Inconclusive;
    }
    results.push_back(res);
  }
  return results;
}

std::vector<MonotonicityViolation> winner_delay_monotonicity(const ReservationSchedule& s, RhoPayment pay,
                                                             std::size_t v_points) {
  std::vector<MonotonicityViolation> out;
  const std::size_t n = s.size();
  if (n < 2 || s.rho.size() != n) return out;
  const double xmax = *std::max_element(s.x.begin(), s.x.end());
  auto payment = [&](std::size_t j) { return pay == RhoPayment::Guarded ? std::min(s.rho[j], s.x[j]) : s.rho[j]; };
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const double lo = s.x[j];
    const double hi = 2.0 * std::max({xmax, lo, 1e-12});
    for (std::size_t i = 1; i <= v_points; ++i) {
      const double v = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(v_points);
      if (!(v > lo)) continue;
      const double stay = (v - payment(j)) * s.d[j];
      const double later = v > s.x[j + 1] ? (v - payment(j + 1)) * s.d[j + 1] : 0.0;
      const double tol = 1e-12 * std::max(1.0, v * s.d[j]);
      if (later > stay + tol) out.push_back({j, v, stay, later});
    }
  }
  return out;
}

}  // namespace tda
