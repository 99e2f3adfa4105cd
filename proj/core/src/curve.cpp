#include "tda/curve.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tda {

std::string to_string(CurveKind k) {
  switch (k) {
    case CurveKind::D1: return "D1";
    case CurveKind::D2: return "D2";
    case CurveKind::D3: return "D3";
    case CurveKind::D4: return "D4";
    case CurveKind::D5: return "D5";
    case CurveKind::D6: return "D6";
    case CurveKind::Table: return "table";
    case CurveKind::Custom: return "custom";
  }
  return "unknown";
}

CurveKind curve_kind_from_string(const std::string& s) {
  for (auto k : {CurveKind::D1, CurveKind::D2, CurveKind::D3, CurveKind::D4, CurveKind::D5, CurveKind::D6,
                 CurveKind::Table, CurveKind::Custom}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown curve '" + s + "'");
}

DiscountCurve DiscountCurve::preset(CurveKind kind, double horizon, double lambda, double eps) {
  if (!(horizon > 0.0) || !(lambda > 0.0)) throw std::invalid_argument("curve: horizon and lambda must be positive");
  DiscountCurve c;
  c.kind_ = kind;
  c.horizon_ = horizon;
  c.lambda_ = lambda;
  c.eps_ = eps;
  if (kind == CurveKind::D6) {
    if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("curve: D6 eps must lie in (0, 1]");
    // Pairs of expected slots share a level; the level halves per pair until
    // slot 2*floor(log2 n), after which the curve drops to eps.
    const double n = std::max(1.0, std::round(lambda * horizon));
    const int levels = std::max(1, static_cast<int>(std::floor(std::log2(n))));
    for (int lvl = 1; lvl <= levels; ++lvl) {
      double t_hi = 2.0 * lvl / lambda;
      double value = std::ldexp(1.0, -(lvl - 1));
      if (t_hi >= horizon) {
        c.pieces_.push_back({horizon, value});
        return c;
      }
      c.pieces_.push_back({t_hi, value});
    }
    c.pieces_.push_back({horizon, std::min(eps, c.pieces_.back().value)});
    return c;
  }
  if (kind == CurveKind::Table || kind == CurveKind::Custom) throw std::invalid_argument("curve: not a preset");
  return c;
}

DiscountCurve DiscountCurve::table(std::vector<StepPiece> pieces, double horizon) {
  if (pieces.empty()) throw std::invalid_argument("curve: empty table");
  DiscountCurve c;
  c.kind_ = CurveKind::Table;
  c.horizon_ = horizon;
  double prev_t = 0.0;
  double prev_v = 2.0;
  for (const auto& p : pieces) {
    if (!(p.value > 0.0 && p.value <= 1.0)) throw std::invalid_argument("curve: table values must lie in (0, 1]");
    if (p.t_hi < prev_t) throw std::invalid_argument("curve: table breakpoints must be increasing");
    if (p.value > prev_v) c.non_increasing_ = false;
    prev_t = p.t_hi;
    prev_v = p.value;
  }
  if (pieces.back().t_hi < horizon) throw std::invalid_argument("curve: table must cover the horizon");
  c.pieces_ = std::move(pieces);
  return c;
}

DiscountCurve DiscountCurve::custom(std::function<double(double)> fn, double horizon, bool non_increasing) {
  DiscountCurve c;
  c.kind_ = CurveKind::Custom;
  c.horizon_ = horizon;
  c.non_increasing_ = non_increasing;
  c.fn_ = std::move(fn);
  return c;
}

double DiscountCurve::eval_raw(double t) const {
  const double T = horizon_;
  switch (kind_) {
    case CurveKind::D1: return 1.0 - t / T;
    case CurveKind::D2: return std::exp(-4.0 * (t - 1.0) / (T - 1.0));
    case CurveKind::D3: return std::pow(0.99, t);
    case CurveKind::D4: return 1.0;
    case CurveKind::D5: {
      const double lt = lambda_ * T;
      const double s = lt * lt - t * t;
      return s > 0.0 ? std::sqrt(s) / lt : 0.0;
    }
    case CurveKind::Custom: return fn_(t);
    default: break;
  }
  auto it = std::lower_bound(pieces_.begin(), pieces_.end(), t,
                             [](const StepPiece& p, double x) { return p.t_hi < x; });
  if (it == pieces_.end()) it = std::prev(pieces_.end());
  return it->value;
}

double DiscountCurve::operator()(double t) const {
  if (!(t >= 0.0) || t > horizon_ * (1.0 + 1e-12)) throw std::domain_error("discount: time outside [0, horizon]");
  double v = eval_raw(std::min(t, horizon_));
  if (is_step() || kind_ == CurveKind::Custom) {
    if (!(v > 0.0 && v <= 1.0)) throw std::domain_error("discount: value outside (0, 1]");
    return v;
  }
  return std::clamp(v, kFloor, 1.0);
}

bool DiscountCurve::check_non_increasing(std::size_t samples) const {
  double prev = (*this)(0.0);
  for (std::size_t i = 1; i < samples; ++i) {
    double t = horizon_ * static_cast<double>(i) / static_cast<double>(samples - 1);
    double v = (*this)(t);
    if (v > prev) return false;
    prev = v;
  }
  return true;
}

}  // namespace tda
