#pragma once

#include <functional>
#include <string>
#include <vector>

namespace tda {

enum class CurveKind { D1, D2, D3, D4, D5, D6, Table, Custom };

std::string to_string(CurveKind k);
CurveKind curve_kind_from_string(const std::string& s);

// One piece of a right-continuous step curve: `value` holds on
// (previous t_hi, t_hi]; the first piece also covers t = 0.
struct StepPiece {
  double t_hi;
  double value;
};

// Evaluable discount d(t) on [0, horizon].
class DiscountCurve {
 public:
  // Lower clamp applied to the analytic presets so that 0 < d(t) holds even
  // where the closed form reaches zero or leaves its domain.
  static constexpr double kFloor = 1e-12;

  // D6 uses n = round(lambda * horizon) expected buyers and tail value eps.
  static DiscountCurve preset(CurveKind kind, double horizon, double lambda, double eps = 1e-9);
  static DiscountCurve table(std::vector<StepPiece> pieces, double horizon);
  static DiscountCurve custom(std::function<double(double)> fn, double horizon, bool non_increasing);

  // Throws std::domain_error when t lies outside [0, horizon].
  double operator()(double t) const;

  CurveKind kind() const { return kind_; }
  double horizon() const { return horizon_; }
  double lambda() const { return lambda_; }
  double eps() const { return eps_; }
  bool non_increasing() const { return non_increasing_; }
  bool is_step() const { return !pieces_.empty(); }
  const std::vector<StepPiece>& pieces() const { return pieces_; }
  std::string name() const { return to_string(kind_); }

  // Samples d on a dense grid and checks d(t1) >= d(t2) for t1 < t2.
  bool check_non_increasing(std::size_t samples = 10001) const;

 private:
  double eval_raw(double t) const;

  CurveKind kind_ = CurveKind::D4;
  double horizon_ = 1.0;
  double lambda_ = 1.0;
  double eps_ = 1e-9;
  bool non_increasing_ = true;
  std::vector<StepPiece> pieces_;
  std::function<double(double)> fn_;
};

}  // namespace tda
