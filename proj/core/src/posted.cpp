#include "tda/posted.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "tda/format.hpp"

namespace tda {

namespace {

// Sup of a right-continuous step objective sits just left of a kink.
double just_below(double v) { return v > 0.0 ? v * (1.0 - 1e-12) : v; }

std::vector<double> unique_samples(const ValuationDistribution& dist) {
  std::vector<double> u = dist.samples();
  u.erase(std::unique(u.begin(), u.end()), u.end());
  return u;
}

// Maximises f on [lo, hi]: 64-point scan, then Brent's method on the
// bracket around the best scan point.
template <class F>
double maximise(F&& f, double lo, double hi, double* best_value) {
  const int scan = 64;
  int best_i = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= scan; ++i) {
    double x = lo + (hi - lo) * i / scan;
    double v = f(x);
    if (v > best) {
      best = v;
      best_i = i;
    }
  }
  double a = lo + (hi - lo) * std::max(0, best_i - 1) / scan;
  double b = lo + (hi - lo) * std::min(scan, best_i + 1) / scan;
  double arg = lo + (hi - lo) * best_i / scan;
  if (b > a) {
    // 20 bits is a relative tolerance of about 1e-6.
    auto r = boost::math::tools::brent_find_minima([&](double x) { return -f(x); }, a, b, 20);
    if (-r.second > best) {
      best = -r.second;
      arg = r.first;
    }
  }
  if (best_value) *best_value = best;
  return arg;
}

}  // namespace

double fixed_price_revenue(const ValuationDistribution& dist, const std::vector<double>& d, double x) {
  double prod = 1.0;
  for (double dj : d) {
    prod *= dist.cdf(x / dj);
    if (prod == 0.0) break;
  }
  return (1.0 - prod) * x;
}

double fixed_reservation_price(const ValuationDistribution& dist, const std::vector<double>& d) {
  if (d.empty()) throw std::invalid_argument("fixed_reservation_price: empty grid");
  const double hi = dist.upper();
  const double dmax = *std::max_element(d.begin(), d.end());
  if (dist.family() == DistFamily::Empirical) {
    auto u = unique_samples(dist);
    if (u.size() == 1) return std::nextafter(u.front(), 0.0);
  }
  std::vector<double> cand;
  cand.reserve(d.size() + 10001);
  for (double dj : d) cand.push_back(just_below(hi * dj));
  const int grid = 10000;
  for (int i = 1; i <= grid; ++i) cand.push_back(hi * dmax * i / grid);
  if (dist.family() == DistFamily::Empirical) {
    auto u = unique_samples(dist);
    if (u.size() <= 64) {
      for (double s : u) {
        for (double dj : d) cand.push_back(just_below(s * dj));
      }
    }
  }
  double best_x = 0.0, best = -1.0;
  for (double x : cand) {
    double v = fixed_price_revenue(dist, d, x);
    if (v > best) {
      best = v;
      best_x = x;
    }
  }
  if (dist.family() != DistFamily::Empirical) {
    const double step = hi * dmax / grid;
    double a = std::max(0.0, best_x - step), b = std::min(hi * dmax, best_x + step);
    auto r = boost::math::tools::brent_find_minima([&](double x) { return -fixed_price_revenue(dist, d, x); }, a, b, 40);
    if (-r.second > best) best_x = r.first;
  }
  return best_x;
}

ReservationSchedule dynamic_reservation_schedule(const ValuationDistribution& dist, const std::vector<double>& t,
                                                 const std::vector<double>& d) {
  if (t.size() != d.size()) throw std::invalid_argument("schedule: t and d differ in length");
  const std::size_t n = d.size();
  ReservationSchedule s;
  s.t = t;
  s.d = d;
  s.x.assign(n, 0.0);
  s.R.assign(n, 0.0);
  if (n == 0) return s;
  const bool closed_form = dist.family() == DistFamily::Uniform && dist.lower() == 0.0;
  const double H = dist.upper();
  const double lo = dist.lower();
  std::vector<double> kinks;
  if (dist.family() == DistFamily::Empirical) {
    for (double v : unique_samples(dist)) kinks.push_back(just_below(v));
    kinks.push_back(H);
  }
  double prev = 0.0;  // R_{m-1}
  for (std::size_t m = 1; m <= n; ++m) {
    const std::size_t j = n - m;  // 0-based slot
    const double dj = d[j];
    double x, R;
    if (closed_form) {
      const double r = prev / H;
      double xh = 0.5 + r / (2.0 * dj);
      if (xh >= 1.0) {
        xh = 1.0;
        R = prev;
      } else {
        R = H * (r + dj) * (r + dj) / (4.0 * dj);
      }
      x = H * xh;
    } else {
      auto g = [&](double v) {
        double F = dist.cdf(v);
        return (1.0 - F) * v * dj + F * prev;
      };
      if (!kinks.empty()) {
        x = kinks.front();
        R = g(x);
        for (double k : kinks) {
          double v = g(k);
          if (v > R) {
            R = v;
            x = k;
          }
        }
      } else {
        x = maximise(g, lo, H, &R);
      }
    }
    s.x[j] = x;
    s.R[m - 1] = R;
    prev = R;
  }
  return s;
}

void semi_truthful_schedule(const ValuationDistribution& dist, ReservationSchedule& s) {
  const std::size_t n = s.size();
  s.rho.assign(n, 0.0);
  s.Rp.assign(n, 0.0);
  if (n == 0) return;
  s.rho[n - 1] = s.x[n - 1];
  for (std::size_t j = n - 1; j-- > 0;) {
    s.rho[j] = (s.x[j] * s.d[j] - s.x[j] * s.d[j + 1] + s.rho[j + 1] * s.d[j + 1]) / s.d[j];
  }
  double prev = 0.0;
  for (std::size_t m = 1; m <= n; ++m) {
    const std::size_t j = n - m;
    const double F = dist.cdf(s.x[j]);
    prev = (1.0 - F) * s.rho[j] * s.d[j] + F * prev;
    s.Rp[m - 1] = prev;
  }
}

std::string schedule_csv(const ReservationSchedule& s) {
  std::ostringstream os;
  os << "j,t_j,d_j,x_j,rho_j,R_m,Rp_m\n";
  const std::size_t n = s.size();
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t m = n - j;
    os << (j + 1) << ',' << fmt_num(s.t[j]) << ',' << fmt_num(s.d[j]) << ',' << fmt_num(s.x[j]) << ','
       << fmt_num(s.rho.empty() ? s.x[j] : s.rho[j]) << ',' << fmt_num(s.R[m - 1]) << ','
       << fmt_num(s.Rp.empty() ? s.R[m - 1] : s.Rp[m - 1]) << '\n';
  }
  return os.str();
}

double expected_max_price(const ValuationDistribution& dist, const std::vector<double>& d) {
  if (d.empty()) return 0.0;
  const double hi = dist.upper();
  auto tail = [&](double y) {
    double prod = 1.0;
    for (double dj : d) {
      prod *= dist.cdf(y / dj);
      if (prod == 0.0) break;
    }
    return 1.0 - prod;
  };
  std::vector<double> cuts{0.0};
  // The integrand has kinks at hi * d_j only for bounded support; smooth
  // families get an even composite grid instead.
  const bool bounded = dist.family() == DistFamily::Uniform || dist.family() == DistFamily::Empirical;
  const double top = hi * *std::max_element(d.begin(), d.end());
  if (bounded) {
    for (double dj : d) cuts.push_back(hi * dj);
  } else {
    for (int i = 1; i <= 256; ++i) cuts.push_back(top * i / 256.0);
  }
  if (dist.family() == DistFamily::Empirical) {
    auto u = unique_samples(dist);
    if (u.size() <= 64) {
      for (double s : u)
        for (double dj : d) cuts.push_back(s * dj);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  // Many short pieces are smooth enough for a single Kronrod pass each.
  const unsigned depth = cuts.size() > 64 ? 0 : 10;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(tail, cuts[i], cuts[i + 1], depth, 1e-11);
  }
  return total;
}

std::unique_ptr<PostedPrice> PostedPrice::fixed(double price) {
  auto m = std::unique_ptr<PostedPrice>(new PostedPrice());
  m->kind_ = PostedKind::Fixed;
  m->price_ = price;
  return m;
}

std::unique_ptr<PostedPrice> PostedPrice::dynamic(std::shared_ptr<const ReservationSchedule> s) {
  auto m = std::unique_ptr<PostedPrice>(new PostedPrice());
  m->kind_ = PostedKind::Dynamic;
  m->sched_ = std::move(s);
  return m;
}

std::unique_ptr<PostedPrice> PostedPrice::semi_truthful(std::shared_ptr<const ReservationSchedule> s, RhoPayment pay) {
  if (s->rho.size() != s->size()) throw std::invalid_argument("semi_truthful: schedule lacks payments");
  auto m = std::unique_ptr<PostedPrice>(new PostedPrice());
  m->kind_ = PostedKind::SemiTruthful;
  m->sched_ = std::move(s);
  m->pay_ = pay;
  return m;
}

std::string PostedPrice::name() const {
  switch (kind_) {
    case PostedKind::Fixed: return "m_f";
    case PostedKind::Dynamic: return "m_d";
    case PostedKind::SemiTruthful: return "m_t";
  }
  return "posted";
}

double PostedPrice::threshold_at(std::size_t slot, double d) const {
  if (kind_ == PostedKind::Fixed) return price_;
  if (slot >= sched_->size()) return std::numeric_limits<double>::infinity();
  return sched_->x[slot] * d;
}

double PostedPrice::payment_at(std::size_t slot, double d) const {
  if (kind_ != PostedKind::SemiTruthful) return threshold_at(slot, d);
  if (slot >= sched_->size()) return std::numeric_limits<double>::infinity();
  const double rho = sched_->rho[slot];
  return (pay_ == RhoPayment::Guarded ? std::min(rho, sched_->x[slot]) : rho) * d;
}

Decision PostedPrice::on_event(const Event& e, Coins&) {
  Decision dec;
  dec.slot = e.slot;
  dec.time = e.time;
  dec.price = e.price;
  dec.phase = closed_ ? Phase::Closed : Phase::Posted;
  if (closed_) return dec;
  const double thr = threshold_at(e.slot, e.discount);
  if (e.price > thr) {
    dec.accepted = true;
    dec.payment = payment_at(e.slot, e.discount);
    closed_ = true;
  }
  return dec;
}

std::size_t default_sample_count(std::size_t n) {
  return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
}

LearningMechanism::LearningMechanism(DistFamily family, std::size_t n_s, std::vector<double> grid_t,
                                     std::vector<double> grid_d, RhoPayment pay)
    : family_(family), n_s_(n_s), grid_t_(std::move(grid_t)), grid_d_(std::move(grid_d)), pay_(pay) {
  if (grid_t_.size() != grid_d_.size()) throw std::invalid_argument("m_l: grid size mismatch");
  if (n_s_ >= grid_d_.size()) throw std::invalid_argument("m_l: need n_s < n");
  if (family_ == DistFamily::Empirical) throw std::invalid_argument("m_l: family must be parametric");
}

void LearningMechanism::start(Coins&) {
  samples_.clear();
  sched_.reset();
  winner_.reset();
  closed_ = false;
}

Decision LearningMechanism::on_event(const Event& e, Coins&) {
  Decision dec;
  dec.slot = e.slot;
  dec.time = e.time;
  dec.price = e.price;
  dec.phase = Phase::Closed;
  if (closed_) return dec;
  if (e.slot < n_s_) {
    dec.phase = Phase::Learning;
    samples_.push_back(e.price / e.discount);
    return dec;
  }
  if (!sched_) {
    if (samples_.size() < n_s_) {
      closed_ = true;
      return dec;
    }
    // One-time refit at the phase boundary.
    auto fitted = fit_mle(family_, samples_);
    std::vector<double> t(grid_t_.begin() + static_cast<std::ptrdiff_t>(n_s_), grid_t_.end());
    std::vector<double> d(grid_d_.begin() + static_cast<std::ptrdiff_t>(n_s_), grid_d_.end());
    sched_ = std::make_unique<ReservationSchedule>(dynamic_reservation_schedule(fitted, t, d));
    semi_truthful_schedule(fitted, *sched_);
  }
  dec.phase = Phase::Posted;
  const std::size_t k = e.slot - n_s_;
  if (k >= sched_->size()) return dec;
  if (e.price > sched_->x[k] * e.discount) {
    const double rho = sched_->rho[k];
    dec.accepted = true;
    dec.payment = (pay_ == RhoPayment::Guarded ? std::min(rho, sched_->x[k]) : rho) * e.discount;
    winner_ = e.slot;
    closed_ = true;
  }
  return dec;
}

double LearningMechanism::compensation(std::size_t slot) const {
  if (!sched_ || slot < n_s_) return 0.0;
  const std::size_t k = slot - n_s_;
  if (k >= sched_->size()) return 0.0;
  const double xj = sched_->x[k];
  const double xprev = k > 0 ? sched_->x[k - 1] : xj;
  const double dj = sched_->d[k];
  const double j = static_cast<double>(slot + 1);
  return ((xprev + xj) / 2.0 * dj - sched_->rho[k] * dj) * (xprev - xj) / j;
}

void LearningMechanism::finish(AuctionOutcome& out) {
  if (!winner_) return;
  const double eps = compensation(*winner_);
  out.credits.assign(n_s_, eps);
  out.revenue = out.payment - eps * static_cast<double>(n_s_);
}

}  // namespace tda
