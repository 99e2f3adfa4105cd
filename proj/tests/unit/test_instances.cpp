#include <doctest.h>

#include <cmath>
#include <numeric>

#include "tda/instances.hpp"

using namespace tda;

TEST_CASE("eq26 preset") {
  PresetParams p;
  p.n = 16;
  auto inst = make_preset_instance("eq26", p);
  CHECK(inst.valuations[0] == 65536.0);
  CHECK(inst.valuations[1] == 16.0);
  CHECK(std::count(inst.valuations.begin(), inst.valuations.end(), 0.0) == 14);
  auto d = inst.slot_discounts();
  const std::vector<double> head{1, 1, 0.5, 0.5, 0.25, 0.25, 0.125, 0.125};
  for (std::size_t j = 0; j < head.size(); ++j) CHECK(d[j] == head[j]);
  for (std::size_t j = head.size(); j < 16; ++j) CHECK(d[j] == p.eps);
}

TEST_CASE("eq33 and eq27 presets") {
  PresetParams p;
  p.n = 10;
  p.K = 10;
  auto eq33 = make_preset_instance("eq33", p);
  CHECK(eq33.valuations[0] == 21.0);
  CHECK(eq33.valuations[1] == 10.0);
  auto d = eq33.slot_discounts();
  CHECK(d[0] == 1.0);
  CHECK(d[1] == 1.0);
  CHECK(d[2] == 0.5);
  CHECK(d[9] == 0.5);

  PresetParams q;
  q.n = 8;
  q.k = 5;
  q.K = 64;
  auto eq27 = make_preset_instance("eq27", q);
  const double deep = std::pow(8.0, -5.0);
  CHECK(eq27.valuations[1] == 64.0);
  CHECK(eq27.valuations[0] == doctest::Approx(std::pow(8.0, 5.0) * 64.0 + deep));
  auto d27 = eq27.slot_discounts();
  CHECK(d27[0] == 0.5);
  CHECK(d27[1] == 0.5);
  for (std::size_t j = 2; j < 8; ++j) CHECK(d27[j] == doctest::Approx(deep));
}

TEST_CASE("eq10 family") {
  PresetParams p;
  p.n = 6;
  p.k = 5;
  auto inst = make_preset_instance("eq10", p);
  // Oracle: tests/oracles/derive.py, 2178182015/362797056.
  CHECK(exact_expected_vickrey(inst) == doctest::Approx(2178182015.0 / 362797056.0).epsilon(1e-12));
  p.k = 4;
  CHECK_THROWS_AS(make_preset_instance("eq10", p), std::invalid_argument);
  CHECK_THROWS_AS(make_preset_instance("nope", PresetParams{}), std::invalid_argument);
}

TEST_CASE("thm8 and thm10 families") {
  PresetParams p;
  p.n = 6;
  p.x = 3;
  auto t8 = make_preset_instance("thm8", p);
  auto d = t8.slot_discounts();
  CHECK(d[2] == 1.0);
  CHECK(d[3] == doctest::Approx(std::pow(6.0, -5.0)));
  p.x = 1;
  CHECK_THROWS(make_preset_instance("thm8", p));

  PresetParams q;
  q.n = 256;
  q.c = 2;
  q.t = 2;
  auto t10 = make_preset_instance("thm10", q);
  REQUIRE(t10.size() == 256);
  const double K = std::pow(256.0, 3.0);
  // t = 2: n/n_1 - n/n_2 = 64 - 16 copies of K, n/n_2 = 16 copies of K^2.
  CHECK(std::count(t10.valuations.begin(), t10.valuations.end(), K) == 48);
  CHECK(std::count(t10.valuations.begin(), t10.valuations.end(), K * K) == 16);
  auto d10 = t10.slot_discounts();
  CHECK(d10[3] == 0.5);
  CHECK(d10[4] == 0.25);
  CHECK(d10[255] == 1.0 / 16.0);
  q.n = 100;
  CHECK_THROWS(make_preset_instance("thm10", q));
}

TEST_CASE("valuation sampling") {
  CHECK(sample_valuations(ValuationPreset::Uni, 3, 99) == sample_valuations(ValuationPreset::Uni, 3, 99));
  auto ext = sample_valuations(ValuationPreset::Ext, 16, 1);
  CHECK(ext[0] == 65536.0);
  CHECK(ext[1] == 16.0);
  auto nor = sample_valuations(ValuationPreset::Nor, 100000, 5);
  const double mean = std::accumulate(nor.begin(), nor.end(), 0.0) / nor.size();
  CHECK(std::abs(mean - 100.0) < 0.2);
  for (double v : nor) CHECK_UNARY(v >= 0.0);
  for (double v : sample_valuations(ValuationPreset::Uni, 1000, 2)) CHECK_UNARY(v >= 0.0 && v <= 200.0);
}

TEST_CASE("arrival sampling") {
  CHECK(sample_arrivals(1.0, 3.0, ArrivalMode::Grid, 1) == std::vector<double>{1, 2, 3});
  CHECK(sample_arrivals(1.0, 2.5, ArrivalMode::Grid, 1) == std::vector<double>{1, 2});
  auto pois = sample_arrivals(1.0, 2000.0, ArrivalMode::Poisson, 17);
  CHECK(std::abs(static_cast<double>(pois.size()) - 2000.0) <= 3.0 * std::sqrt(2000.0));
  CHECK(std::is_sorted(pois.begin(), pois.end()));
  CHECK(pois.back() <= 2000.0);
}

TEST_CASE("adaptive adversary game") {
  ConstantProbe quarter(0.25);
  auto g4 = run_adaptive_game(quarter, 4, 1e6);
  CHECK(g4.rounds.size() == 2);
  CHECK(g4.vickrey == 1.0);
  CHECK(g4.mechanism_revenue == doctest::Approx(0.5));
  CHECK(g4.ratio == doctest::Approx(2.0));

  // Oracle ratios at n = 100, K = 1e6: 50, 25, 3999996, 1e6.
  const double expect[] = {50.0, 25.0, 3999996.0, 1e6};
  const double ps[] = {0.01, 0.02, 0.25, 1.0};
  for (int i = 0; i < 4; ++i) {
    ConstantProbe probe(ps[i]);
    auto g = run_adaptive_game(probe, 100, 1e6);
    CHECK(g.ratio == doctest::Approx(expect[i]).epsilon(1e-9));
    CHECK(g.accepted_mass <= 1.0 + 1e-12);
  }
  ThresholdProbe thr(1e3, 0.5, 0.0);
  auto gt = run_adaptive_game(thr, 100, 10.0);
  CHECK(gt.accepted_mass <= 1.0);
}
