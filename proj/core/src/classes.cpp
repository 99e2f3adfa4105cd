#include "tda/classes.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "tda/format.hpp"

namespace tda {

int class_of_discount(double d, double B) {
  if (!(d > 0.0) || d > 1.0) throw std::domain_error("class_of_discount: d must lie in (0, 1]");
  if (!(B > 1.0)) throw std::domain_error("class_of_discount: B must exceed 1");
  int c = static_cast<int>(std::floor(-std::log(d) / std::log(B))) + 1;
  if (c < 1) c = 1;
  // Repair rounding at exact powers of B.
  while (c > 1 && std::pow(B, -(c - 1)) < d) --c;
  while (std::pow(B, -c) >= d) ++c;
  return c;
}

int reserved_class_count(double n, double B, double k) {
  if (!(B > 1.0)) throw std::domain_error("reserved_class_count: B must exceed 1");
  const double lg = std::log(std::max(n, 2.0)) / std::log(B);
  // Guard against values like 43.000000000000007 produced by the logarithm.
  const double raw = 4.0 * lg + 3.0 + k * lg;
  return static_cast<int>(std::ceil(raw - 1e-9));
}

double TimeSet::length() const {
  double s = 0.0;
  for (const auto& p : parts) s += p.length();
  return s;
}

const ClassRecord* ClassPartition::find(int c) const {
  if (c < 1 || static_cast<std::size_t>(c) > classes.size()) return nullptr;
  return &classes[static_cast<std::size_t>(c - 1)];
}

double ClassPartition::expected_size(int c) const {
  const auto* r = find(c);
  return r ? r->expected_size : 0.0;
}

double ClassPartition::weight(int c) const {
  const auto* r = find(c);
  return r ? r->weight : 0.0;
}

double ClassPartition::approx_weight(int c) const { return expected_size(c) / std::pow(B, c); }

namespace {

double curve_max(const DiscountCurve& curve) {
  if (curve.is_step()) {
    double m = 0.0;
    for (const auto& p : curve.pieces()) m = std::max(m, p.value);
    return m;
  }
  if (curve.non_increasing()) return curve(0.0);
  double m = 0.0;
  const int samples = 100001;
  for (int i = 0; i < samples; ++i) m = std::max(m, curve(curve.horizon() * i / (samples - 1)));
  return m;
}

void push_part(TimeSet& set, double lo, double hi) {
  if (!(hi > lo)) return;
  if (!set.parts.empty() && std::abs(set.parts.back().hi - lo) <= 0.0) {
    set.parts.back().hi = hi;
  } else {
    set.parts.push_back({lo, hi});
  }
}

// First time in [0, T] where scale * d(t) <= level, or T if none.
double first_time_at_or_below(const DiscountCurve& curve, double level, double scale) {
  const double T = curve.horizon();
  if (scale * curve(0.0) <= level) return 0.0;
  if (scale * curve(T) > level) return T;
  double a = 0.0, b = T;
  const double tol = 1e-9 * T;
  while (b - a > tol) {
    double m = 0.5 * (a + b);
    if (scale * curve(m) <= level) b = m; else a = m;
  }
  return b;
}

}  // namespace

TimeSet class_time_interval(const DiscountCurve& curve, int c, double B, double scale) {
  TimeSet set;
  const double hi_level = std::pow(B, -(c - 1));
  const double lo_level = std::pow(B, -c);
  const double T = curve.horizon();
  if (curve.is_step()) {
    double start = 0.0;
    for (const auto& p : curve.pieces()) {
      double end = std::min(p.t_hi, T);
      double v = std::min(1.0, p.value * scale);
      if (v > lo_level && v <= hi_level) push_part(set, start, end);
      start = end;
    }
    return set;
  }
  if (curve.non_increasing()) {
    push_part(set, first_time_at_or_below(curve, hi_level, scale), first_time_at_or_below(curve, lo_level, scale));
    return set;
  }
  // Non-monotone analytic curve: dense scan, membership per cell midpoint.
  const int cells = 100000;
  for (int i = 0; i < cells; ++i) {
    double a = T * i / cells, b = T * (i + 1) / cells;
    double v = std::min(1.0, scale * curve(0.5 * (a + b)));
    if (v > lo_level && v <= hi_level) push_part(set, a, b);
  }
  return set;
}

double class_weight(const DiscountCurve& curve, int c, double B, double lambda, double scale) {
  const auto m = static_cast<std::size_t>(std::floor(lambda * curve.horizon() + 1e-9));
  double w = 0.0;
  for (std::size_t j = 1; j <= m; ++j) {
    double d = curve(static_cast<double>(j) / lambda);
    if (class_of_discount(std::min(1.0, d * scale), B) == c) w += d;
  }
  return w;
}

ClassPartition partition_curve(const DiscountCurve& curve, double B, double lambda, double k) {
  if (!(B > 1.0)) throw std::invalid_argument("partition: B must exceed 1");
  if (!(lambda > 0.0)) throw std::invalid_argument("partition: lambda must be positive");
  ClassPartition p;
  p.B = B;
  p.lambda = lambda;
  p.horizon = curve.horizon();
  p.n = lambda * curve.horizon();
  p.k = k;
  p.reserved = reserved_class_count(p.n, B, k);
  p.scale = 1.0 / curve_max(curve);

  // Deepest class reached on the expected grid or at the horizon.
  const auto m = static_cast<std::size_t>(std::floor(p.n + 1e-9));
  std::vector<double> grid_d(m);
  int deepest = class_of_discount(std::min(1.0, p.scale * curve(p.horizon)), B);
  for (std::size_t j = 1; j <= m; ++j) {
    grid_d[j - 1] = curve(static_cast<double>(j) / lambda);
    deepest = std::max(deepest, class_of_discount(std::min(1.0, p.scale * grid_d[j - 1]), B));
  }
  if (curve.is_step()) {
    for (const auto& piece : curve.pieces())
      deepest = std::max(deepest, class_of_discount(std::min(1.0, p.scale * piece.value), B));
  }
  const int count = std::max(p.reserved, deepest);
  p.classes.resize(static_cast<std::size_t>(count));
  for (int c = 1; c <= count; ++c) {
    auto& r = p.classes[static_cast<std::size_t>(c - 1)];
    r.id = c;
    r.d_lo = std::pow(B, -c);
    r.d_hi = std::pow(B, -(c - 1));
    r.time = class_time_interval(curve, c, B, p.scale);
    // Bisection leaves O(1e-9 T) slack; snap near-integers so floor(n_c / 2) is stable.
    double size = lambda * r.time.length();
    double nearest = std::round(size);
    r.expected_size = std::abs(size - nearest) < 1e-6 * std::max(1.0, nearest) ? nearest : size;
  }
  for (double d : grid_d) {
    int c = class_of_discount(std::min(1.0, p.scale * d), B);
    auto& r = p.classes[static_cast<std::size_t>(c - 1)];
    r.weight += d;
    ++r.grid_count;
  }
  return p;
}

std::optional<double> imbalance_eta(const ClassPartition& p) {
  const double n1 = p.expected_size(1);
  if (!(n1 > 0.0)) return std::nullopt;
  double eta = 1.0;
  bool any = false;
  for (int c = 1; c <= p.reserved; ++c) {
    double nc = p.expected_size(c);
    if (!(nc > 0.0)) continue;
    any = true;
    eta = std::max({eta, nc / n1, n1 / nc});
  }
  if (!any) return std::nullopt;
  return eta;
}

std::string partition_csv(const ClassPartition& p) {
  std::ostringstream os;
  os << "c,d_lo,d_hi,t_lo,t_hi,n_c,w_c\n";
  for (const auto& r : p.classes) {
    os << r.id << ',' << fmt_num(r.d_lo) << ',' << fmt_num(r.d_hi) << ',' << fmt_num(r.time.lo()) << ','
       << fmt_num(r.time.hi()) << ',' << fmt_num(r.expected_size) << ',' << fmt_num(r.weight) << '\n';
  }
  return os.str();
}

}  // namespace tda
