#include "tda/mechanism.hpp"

#include <sstream>

#include "tda/format.hpp"

namespace tda {

AuctionOutcome run_mechanism(Mechanism& m, const BidStream& stream, Coins& coins, bool transcript) {
  AuctionOutcome out;
  m.prime(stream);
  m.start(coins);
  if (transcript) out.transcript.reserve(stream.size());
  for (const auto& e : stream.events) {
    if (!transcript && m.closed()) break;
    Decision d = m.on_event(e, coins);
    if (d.accepted && !out.winner) {
      out.winner = e.slot;
      out.payment = d.payment;
    }
    if (transcript || d.accepted) out.transcript.push_back(d);
  }
  out.revenue = out.payment;
  m.finish(out);
  return out;
}

double expected_revenue(Mechanism& m, const BidStream& stream) {
  if (auto v = m.expected_revenue(stream)) return *v;
  double total = 0.0;
  enumerate_coins(
      [&](Coins& coins) { return run_mechanism(m, stream, coins, false).revenue; },
      [&](double p, double rev) { total += p * rev; });
  return total;
}

std::string transcript_jsonl(const AuctionOutcome& out) {
  std::ostringstream os;
  for (const auto& d : out.transcript) {
    os << "{\"slot\":" << d.slot << ",\"time\":" << fmt_num(d.time) << ",\"price\":" << fmt_num(d.price)
       << ",\"phase\":\"" << to_string(d.phase) << "\",\"decision\":\"" << (d.accepted ? "accept" : "reject")
       << "\",\"payment\":" << fmt_num(d.payment) << "}\n";
  }
  return os.str();
}

}  // namespace tda
