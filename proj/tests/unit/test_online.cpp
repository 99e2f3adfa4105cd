#include <doctest.h>

#include <cmath>
#include <memory>

#include "tda/harness.hpp"
#include "tda/instances.hpp"
#include "tda/online.hpp"

using namespace tda;

namespace {

BidStream flat_stream(const std::vector<double>& prices, double d = 1.0) {
  std::vector<double> t(prices.size()), disc(prices.size(), d), vals(prices.size());
  for (std::size_t j = 0; j < prices.size(); ++j) {
    t[j] = static_cast<double>(j + 1);
    vals[j] = prices[j] / d;
  }
  return make_stream(vals, t, disc);
}

BidStream stream_on(const DiscountCurve& curve, double lambda, const std::vector<double>& values) {
  auto t = grid_arrivals(values.size(), lambda);
  std::vector<double> d(values.size());
  for (std::size_t j = 0; j < values.size(); ++j) d[j] = curve(t[j]);
  return make_stream(values, t, d);
}

std::shared_ptr<const ClassPartition> part_of(const DiscountCurve& c, double lambda, double B = 2.0) {
  return std::make_shared<const ClassPartition>(partition_curve(c, B, lambda, 1.0));
}

double enumerated(Mechanism& m, const BidStream& s) {
  double total = 0.0;
  enumerate_coins([&](Coins& c) { return run_mechanism(m, s, c, false).revenue; },
                  [&](double p, double r) { total += p * r; });
  return total;
}

}  // namespace

TEST_CASE("observe-then-select traces") {
  ObserveThenSelect m(4.0);
  ScriptedCoins none({});
  auto out = run_mechanism(m, flat_stream({2, 5, 3, 7}), none);
  REQUIRE(out.winner);
  CHECK(*out.winner == 3);
  CHECK(out.payment == 5.0);
  CHECK(none.path_probability() == doctest::Approx(4.0 / 9.0));

  ScriptedCoins first({1});
  auto obs = run_mechanism(m, flat_stream({2, 5, 3, 7}), first);
  CHECK(*obs.winner == 0);
  CHECK(obs.payment == 0.0);
  CHECK(first.path_probability() == doctest::Approx(1.0 / 3.0));
  CHECK(obs.transcript.front().phase == Phase::Observation);

  ScriptedCoins none2({});
  CHECK_FALSE(run_mechanism(m, flat_stream({5, 2, 1, 1}), none2).winner);

  ObserveThenSelect lone(1.0);
  ScriptedCoins c3({});
  CHECK_FALSE(run_mechanism(lone, flat_stream({9}), c3).winner);
}

TEST_CASE("observe-then-select closed form matches the coin tree") {
  for (auto lottery : {Lottery::Sequential, Lottery::UniformSlot}) {
    OnlineOptions opt;
    opt.lottery = lottery;
    ObserveThenSelect m(6.0, opt);
    auto s = flat_stream({3, 1, 4, 1, 5, 9});
    CHECK(*m.expected_revenue(s) == doctest::Approx(enumerated(m, s)));
  }
}

TEST_CASE("star-class closed form matches the coin tree") {
  std::vector<DiscountCurve> curves{DiscountCurve::preset(CurveKind::D1, 12.0, 1.0),
                                    DiscountCurve::preset(CurveKind::D2, 12.0, 1.0),
                                    DiscountCurve::preset(CurveKind::D6, 12.0, 1.0, 1e-6),
                                    DiscountCurve::table({{3.0, 1.0}, {7.0, 0.4}, {12.0, 1e-7}}, 12.0)};
  Engine eng(11);
  for (const auto& curve : curves) {
    auto part = std::make_shared<const ClassPartition>(partition_curve(curve, 2.0, 1.0, 0.0));
    for (int trial = 0; trial < 4; ++trial) {
      std::vector<double> v(12);
      for (auto& x : v) x = std::floor(uniform01(eng) * 100.0);
      auto s = stream_on(curve, 1.0, v);
      for (auto rule : {StarRule::Uniform, StarRule::FirstClass, StarRule::Weighted, StarRule::MostWeighted}) {
        for (int variant = 0; variant < 4; ++variant) {
          OnlineOptions opt;
          opt.compare_valuation = variant & 1;
          opt.lottery = variant & 2 ? Lottery::UniformSlot : Lottery::Sequential;
          const bool tail = rule == StarRule::Uniform || rule == StarRule::Weighted;
          ClassSelect m(part, rule, tail, opt);
          CHECK(*m.expected_revenue(s) == doctest::Approx(enumerated(m, s)).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("fixed-select inside the first class") {
  auto curve = DiscountCurve::table({{2.0, 1.0}, {6.0, 0.5}}, 6.0);
  auto part = part_of(curve, 1.0);
  ClassSelect m1(part, StarRule::FirstClass, false);
  ScriptedCoins none({});
  auto out = run_mechanism(m1, stream_on(curve, 1.0, {10, 21, 0, 0, 0, 0}), none);
  REQUIRE(out.winner);
  CHECK(*out.winner == 1);
  CHECK(out.payment == 10.0);
}

TEST_CASE("star-class selection rules") {
  auto w = DiscountCurve::table({{3.0, 1.0}, {5.0, 0.5}}, 5.0);
  ClassSelect mw(part_of(w, 1.0), StarRule::Weighted, true);
  CHECK(mw.star_distribution()[0] == doctest::Approx(0.75));
  CHECK(mw.star_distribution()[1] == doctest::Approx(0.25));

  auto d4 = DiscountCurve::preset(CurveKind::D4, 10.0, 1.0);
  ClassSelect mw4(part_of(d4, 1.0), StarRule::Weighted, true);
  CHECK(mw4.star_distribution()[0] == 1.0);

  // n_c = 2^c with d = 2^-(c-1): every n_c / B^c equals 1, so class 1 wins the tie.
  auto tie = DiscountCurve::table({{2.0, 1.0}, {6.0, 0.5}, {14.0, 0.25}}, 14.0);
  ClassSelect most(part_of(tie, 1.0), StarRule::MostWeighted, false);
  CHECK(most.star_distribution()[0] == 1.0);

  PresetParams pp;
  pp.n = 12;
  pp.K = 10;
  auto eq33 = make_preset_instance("eq33", pp);
  ClassSelect most33(part_of(eq33.curve, eq33.lambda), StarRule::MostWeighted, false);
  CHECK(most33.star_distribution()[1] == 1.0);
}

TEST_CASE("uniform star over empty reserved classes") {
  // On a constant curve only class 1 holds buyers, so the uniform star finds
  // them with probability 1 / c-hat.
  auto d4 = DiscountCurve::preset(CurveKind::D4, 8.0, 1.0);
  auto part = part_of(d4, 1.0);
  ClassSelect mr(part, StarRule::Uniform, true);
  ObserveThenSelect mo(8.0);
  auto s = stream_on(d4, 1.0, {4, 8, 1, 9, 2, 7, 3, 6});
  CHECK(*mr.expected_revenue(s) == doctest::Approx(*mo.expected_revenue(s) / part->reserved));
  ClassSelect m1(part, StarRule::FirstClass, false);
  CHECK(*m1.expected_revenue(s) == doctest::Approx(*mo.expected_revenue(s)));
}

TEST_CASE("modified observe-then-decide") {
  auto d4 = DiscountCurve::preset(CurveKind::D4, 4.0, 1.0);
  ModifiedObserveDecide mod(part_of(d4, 1.0));
  ScriptedCoins none({});
  auto out = run_mechanism(mod, stream_on(d4, 1.0, {5, 2, 1, 3}), none);
  REQUIRE(out.winner);
  CHECK(*out.winner == 3);
  CHECK(out.payment == 3.0);

  auto d2 = DiscountCurve::preset(CurveKind::D4, 2.0, 1.0);
  ModifiedObserveDecide mod2(part_of(d2, 1.0));
  ScriptedCoins none2({});
  auto out2 = run_mechanism(mod2, stream_on(d2, 1.0, {2, 5}), none2);
  CHECK(*out2.winner == 1);
  CHECK(out2.payment == 2.0);
}

TEST_CASE("known-OPT posted price") {
  KnownOptPosted mz(10.0);
  ScriptedCoins c({});
  auto out = run_mechanism(mz, flat_stream({3, 6, 8}), c);
  CHECK(*out.winner == 1);
  CHECK(out.payment == 5.0);
  CHECK_FALSE(run_mechanism(mz, flat_stream({4, 4}), c).winner);
  CHECK_THROWS(KnownOptPosted(0.0));
}

TEST_CASE("payments are bid-independent for the decision winner") {
  ObserveThenSelect m(4.0);
  for (double bump : {1.0, 1.5, 10.0}) {
    ScriptedCoins c({});
    auto out = run_mechanism(m, flat_stream({2, 5, 3, 7 * bump}), c);
    CHECK(*out.winner == 3);
    CHECK(out.payment == 5.0);
  }
}

TEST_CASE("runs are deterministic, IR holds and transcripts serialise") {
  auto d1 = DiscountCurve::preset(CurveKind::D1, 64.0, 1.0);
  auto part = part_of(d1, 1.0);
  Engine eng(3);
  std::vector<double> v(64);
  for (auto& x : v) x = uniform01(eng) * 200.0;
  auto s = stream_on(d1, 1.0, v);
  for (auto rule : {StarRule::Uniform, StarRule::FirstClass, StarRule::Weighted, StarRule::MostWeighted}) {
    ClassSelect a(part, rule, true), b(part, rule, true);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      RandomCoins ca(seed), cb(seed);
      auto oa = run_mechanism(a, s, ca);
      auto ob = run_mechanism(b, s, cb);
      CHECK(transcript_jsonl(oa) == transcript_jsonl(ob));
      CHECK(ir_audit(oa).empty());
    }
  }
  ScriptedCoins c({});
  ObserveThenSelect m(4.0);
  auto out = run_mechanism(m, flat_stream({2, 5, 3, 7}), c);
  auto lines = transcript_jsonl(out);
  CHECK(lines.find("{\"slot\":0,\"time\":1,\"price\":2,\"phase\":\"observation\",\"decision\":\"reject\",\"payment\":0}") == 0);
  CHECK(lines.find("\"decision\":\"accept\",\"payment\":5") != std::string::npos);

  OverpayControl bad;
  auto o = run_mechanism(bad, flat_stream({0, 3, 4}), c);
  CHECK(ir_audit(o).size() == 1);
}
