#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "tda/curve.hpp"

namespace tda {

// Class c holds discounts in (B^-c, B^-(c-1)].
int class_of_discount(double d, double B);

int reserved_class_count(double n, double B, double k);

struct TimeInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool empty() const { return !(hi > lo); }
  double length() const { return empty() ? 0.0 : hi - lo; }
};

// Preimage of a discount band: one interval for monotone curves, possibly
// several for non-monotone step or custom curves.
struct TimeSet {
  std::vector<TimeInterval> parts;
  bool empty() const { return length() <= 0.0; }
  double length() const;
  double lo() const { return parts.empty() ? 0.0 : parts.front().lo; }
  double hi() const { return parts.empty() ? 0.0 : parts.back().hi; }
};

struct ClassRecord {
  int id = 0;
  double d_lo = 0.0;  // open end of I_c
  double d_hi = 0.0;  // closed end of I_c
  TimeSet time;
  double expected_size = 0.0;  // lambda * |T_c|
  double weight = 0.0;         // sum of d(t_j) over the expected grid inside T_c
  std::size_t grid_count = 0;  // expected-grid slots inside T_c
};

struct ClassPartition {
  double B = 2.0;
  double lambda = 1.0;
  double horizon = 1.0;
  double n = 0.0;
  double k = 1.0;
  int reserved = 0;     // c-hat
  double scale = 1.0;   // multiplier normalising max d to 1
  std::vector<ClassRecord> classes;  // ids 1..max(reserved, deepest class on [0, T])

  // Class of a raw (unnormalised) discount value.
  int class_of(double d) const { return class_of_discount(std::min(1.0, d * scale), B); }
  const ClassRecord* find(int c) const;
  // Expected size of class c (0 for unknown classes).
  double expected_size(int c) const;
  double weight(int c) const;
  // Weight approximation n_c / B^c.
  double approx_weight(int c) const;
};

// Geometry of all discount classes for a non-increasing curve.
ClassPartition partition_curve(const DiscountCurve& curve, double B, double lambda, double k = 1.0);

// Time preimage of class c computed by bisection (or breakpoints for step curves).
TimeSet class_time_interval(const DiscountCurve& curve, int c, double B, double scale = 1.0);

double class_weight(const DiscountCurve& curve, int c, double B, double lambda, double scale = 1.0);

// max over non-empty reserved classes of max(n_c / n_1, n_1 / n_c).
std::optional<double> imbalance_eta(const ClassPartition& p);

// CSV with columns c,d_lo,d_hi,t_lo,t_hi,n_c,w_c.
std::string partition_csv(const ClassPartition& p);

}  // namespace tda
