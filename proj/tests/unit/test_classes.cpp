#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "tda/classes.hpp"
#include "tda/instances.hpp"

using namespace tda;

TEST_CASE("class of a discount") {
  CHECK(class_of_discount(1.0, 2.0) == 1);
  CHECK(class_of_discount(0.6, 2.0) == 1);
  CHECK(class_of_discount(0.5, 2.0) == 2);
  CHECK(class_of_discount(0.25, 2.0) == 3);
  CHECK(class_of_discount(1.0 / 27.0, 3.0) == 4);
  CHECK_THROWS_AS(class_of_discount(0.0, 2.0), std::domain_error);
  CHECK_THROWS_AS(class_of_discount(1.5, 2.0), std::domain_error);
  for (double d : {0.9, 0.31, 1e-3, 1e-9, 0.125}) {
    int c = class_of_discount(d, 2.0);
    CHECK(std::pow(2.0, -c) < d);
    CHECK(d <= std::pow(2.0, -(c - 1)));
  }
}

TEST_CASE("reserved class count") {
  // Oracle: tests/oracles/derive.py.
  CHECK(reserved_class_count(1000, 2.0, 1.0) == 53);
  CHECK(reserved_class_count(2, 2.0, 0.0) == 7);
  CHECK(reserved_class_count(1000, 2.0, 0.0) == 43);
  CHECK(reserved_class_count(2000, 2.0, 1.0) == 58);
}

TEST_CASE("class time intervals") {
  auto d1 = DiscountCurve::preset(CurveKind::D1, 2000.0, 1.0);
  auto t1 = class_time_interval(d1, 1, 2.0);
  REQUIRE(t1.parts.size() == 1);
  CHECK(t1.lo() == 0.0);
  CHECK(t1.hi() == doctest::Approx(1000.0).epsilon(1e-9));
  auto d4 = DiscountCurve::preset(CurveKind::D4, 500.0, 1.0);
  auto c1 = class_time_interval(d4, 1, 2.0);
  CHECK(c1.lo() == 0.0);
  CHECK(c1.hi() == 500.0);
  CHECK(class_time_interval(d4, 2, 2.0).empty());

  // Consecutive and disjoint on a monotone curve.
  auto d2 = DiscountCurve::preset(CurveKind::D2, 2000.0, 1.0);
  double prev_hi = 0.0;
  for (int c = 1; c <= 6; ++c) {
    auto t = class_time_interval(d2, c, 2.0);
    if (t.empty()) continue;
    CHECK(t.lo() == doctest::Approx(prev_hi).epsilon(1e-9));
    prev_hi = t.hi();
  }
}

TEST_CASE("class weights and partition") {
  auto d1 = DiscountCurve::preset(CurveKind::D1, 2000.0, 1.0);
  // Oracle: 2997/4 = 749.25; the integral of the class is 750.
  CHECK(class_weight(d1, 1, 2.0, 1.0) == doctest::Approx(749.25));
  auto d4 = DiscountCurve::preset(CurveKind::D4, 300.0, 1.0);
  CHECK(class_weight(d4, 1, 2.0, 1.0) == 300.0);
  CHECK(class_weight(d4, 3, 2.0, 1.0) == 0.0);

  auto p = partition_curve(d1, 2.0, 1.0, 1.0);
  CHECK(p.reserved == 58);
  double total = 0.0;
  std::size_t slots = 0;
  for (const auto& r : p.classes) {
    total += r.expected_size;
    slots += r.grid_count;
  }
  CHECK(total == doctest::Approx(2000.0));
  CHECK(slots == 2000);
  CHECK(p.expected_size(1) == 1000.0);
  CHECK(partition_csv(p).rfind("c,d_lo,d_hi,t_lo,t_hi,n_c,w_c\n", 0) == 0);
}

TEST_CASE("imbalance diagnostic") {
  auto d4 = DiscountCurve::preset(CurveKind::D4, 100.0, 1.0);
  CHECK(*imbalance_eta(partition_curve(d4, 2.0, 1.0)) == 1.0);

  auto two = DiscountCurve::table({{2.0, 1.0}, {6.0, 0.5}}, 6.0);
  CHECK(*imbalance_eta(partition_curve(two, 2.0, 1.0)) == doctest::Approx(2.0));

  PresetParams pp;
  pp.n = 8;
  pp.k = 5;
  pp.K = 64;
  auto inst = make_preset_instance("eq27", pp);
  auto part = partition_curve(inst.curve, 2.0, inst.lambda);
  CHECK(part.expected_size(1) == 2.0);
  CHECK(*imbalance_eta(part) == doctest::Approx((8.0 - 2.0) / 2.0));
}
