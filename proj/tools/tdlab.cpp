// tdlab: batch front end for experiments, instances, probes, games and schedules.
//
// Exit codes: 0 ok, 1 usage or bad input, 2 cell failure, 3 IR violation,
// 4 truthfulness regression.
#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "tda/format.hpp"
#include "tda/harness.hpp"

using namespace tda;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kCellFailure = 2, kIrViolation = 3, kTruthRegression = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write '" + path + "'");
  out << text;
}

// Flat config files, or an earlier CSV report whose "# key = value" header
// holds the effective config.
std::string config_text_from(const std::string& raw) {
  if (raw.rfind("# tdlab", 0) != 0) return raw;
  std::istringstream is(raw);
  std::string line, out;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] != '#') break;
    if (line.rfind("# ", 0) == 0 && line.find(" = ") != std::string::npos) out += line.substr(2) + "\n";
  }
  return out;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t pos = 0;
    const double v = std::stod(item, &pos);
    if (item.find_first_not_of(" \t", pos) != std::string::npos) throw UsageError("bad number '" + item + "'");
    out.push_back(v);
  }
  return out;
}

using Header = std::vector<std::pair<std::string, std::string>>;

std::string csv_header(const std::string& cmd, const Header& kv) {
  std::string s = std::string("# tdlab ") + kVersion + "\n# command = " + cmd + "\n";
  for (const auto& [k, v] : kv) s += "# " + k + " = " + v + "\n";
  return s;
}

json json_header(const std::string& cmd, const Header& kv) {
  json cfg = json::object();
  for (const auto& [k, v] : kv) cfg[k] = v;
  return {{"tdlab_version", kVersion}, {"command", cmd}, {"config", cfg}};
}

void check_format(const std::string& f) {
  if (f != "csv" && f != "json") throw UsageError("--format must be csv or json");
}

// --- instance loading ----------------------------------------------------------

struct InstanceArgs {
  std::string instance;  // preset id or JSON path
  PresetParams p;
  std::string K, delta;  // optional overrides as text

  void add(CLI::App* app) {
    app->add_option("--instance", instance, "preset id (" + [] {
      std::string s;
      for (const auto& id : preset_ids()) s += (s.empty() ? "" : ", ") + id;
      return s;
    }() + ") or instance JSON file");
    app->add_option("--k", p.k, "discount exponent of the deep level");
    app->add_option("--K", K, "large value");
    app->add_option("--delta", delta, "small value");
    app->add_option("--eps", p.eps, "tail level of the D6 step curve");
    app->add_option("--c", p.c, "size parameter of the thm10 family");
    app->add_option("--t", p.t, "instance index of the thm10 family");
    app->add_option("--x", p.x, "breakpoint of the thm8 family");
  }

  MarketInstance load(std::size_t n, double B, double lambda) {
    if (std::filesystem::exists(instance)) return instance_from_json(read_file(instance));
    p.n = n;
    p.B = B;
    p.lambda = lambda;
    if (!K.empty()) p.K = std::stod(K);
    if (!delta.empty()) p.delta = std::stod(delta);
    return make_preset_instance(instance, p);
  }

  Header header() const {
    Header h{{"instance", instance}, {"k", fmt_num(p.k)}, {"eps", fmt_num(p.eps)}, {"c", std::to_string(p.c)},
             {"t", std::to_string(p.t)}, {"x", std::to_string(p.x)}};
    if (!K.empty()) h.push_back({"K", K});
    if (!delta.empty()) h.push_back({"delta", delta});
    return h;
  }
};

// --- experiment ----------------------------------------------------------------

struct ExperimentArgs {
  std::string config, preset, out, format = "csv";
  std::vector<std::pair<std::string, std::string*>> flags;
  std::string mech, curve, dist, n, B, lambda, horizon, reps, seed, threads, estimator;
  std::vector<std::string> sets;
  bool progress = false;
};

int cmd_experiment(ExperimentArgs& a) {
  check_format(a.format);
  std::string text;
  if (!a.config.empty()) text = config_text_from(read_file(a.config));
  // Appended so that file line numbers stay intact in diagnostics.
  if (!a.preset.empty()) text += "\npreset = " + a.preset + "\n";
  ExperimentConfig cfg;
  try {
    cfg = config_from_text(text);
  } catch (const ConfigError& e) {
    std::cerr << "tdlab: " << (a.config.empty() ? "<flags>" : a.config) << ": " << e.what() << '\n';
    return kUsage;
  }
  for (const auto& [key, value] : a.flags) {
    if (value->empty()) continue;
    try {
      apply_config_key(cfg, key, *value);
    } catch (const std::exception& e) {
      throw UsageError("--" + key + ": " + e.what());
    }
  }
  for (const auto& kv : a.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
    try {
      apply_config_key(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    } catch (const std::exception& e) {
      throw UsageError("--set " + kv + ": " + e.what());
    }
  }
  if (a.progress) cfg.progress = true;

  const auto rep = run_experiment(cfg);
  write_output(a.out, a.format == "json" ? report_json(rep) : report_csv(rep));

  std::size_t failed = 0;
  for (const auto& c : rep.cells) {
    if (!c.failed) continue;
    ++failed;
    std::cerr << "tdlab: cell failed: " << c.mechanism << ' ' << c.curve << ' ' << c.dist << " n=" << c.n
              << " seed=" << (c.failed_seed ? *c.failed_seed : c.seed) << ": " << c.failure << '\n';
  }
  for (const auto& v : rep.violations) {
    std::cerr << "tdlab: IR violation: " << v.mechanism << ' ' << v.curve << ' ' << v.dist << " n=" << v.n
              << " rep=" << v.rep << " seed=" << v.seed << " slot=" << v.slot << " price=" << fmt_num(v.price)
              << " payment=" << fmt_num(v.payment) << '\n';
  }
  if (rep.total_violations > 0) return kIrViolation;
  if (failed > 0) return kCellFailure;
  return kOk;
}

// --- instance ------------------------------------------------------------------

int cmd_instance(InstanceArgs& ia, std::size_t n, double B, double lambda, bool list, const std::string& out) {
  if (list) {
    std::string s;
    for (const auto& id : preset_ids()) s += id + "\n";
    write_output(out, s);
    return kOk;
  }
  if (ia.instance.empty()) throw UsageError("--instance is required");
  const auto inst = ia.load(n, B, lambda);
  auto j = json::parse(instance_to_json(inst));
  auto h = ia.header();
  h.push_back({"n", std::to_string(n)});
  h.push_back({"B", fmt_num(B)});
  h.push_back({"lambda", fmt_num(lambda)});
  j["generator"] = json_header("instance", h);
  write_output(out, j.dump(2) + "\n");
  return kOk;
}

// --- probe ---------------------------------------------------------------------

struct ProbeArgs {
  std::string mech, deviation = "all", values, curve = "D4", format = "csv", out, lottery;
  InstanceArgs inst;
  std::size_t n = 6, reps = 20000;
  std::uint64_t seed = 1;
  double B = 2.0, k = 1.0, lambda = 1.0, prior_hi = 0.0;
  std::vector<std::size_t> slots;
  std::optional<std::size_t> target;
  bool exact = false;
};

int cmd_probe(ProbeArgs& a) {
  check_format(a.format);
  const auto names = mechanism_names();
  if (std::find(names.begin(), names.end(), a.mech) == names.end()) throw UsageError("unknown mechanism '" + a.mech + "'");
  std::vector<Deviation> devs;
  if (a.deviation == "scale") devs = default_deviations(true, false);
  else if (a.deviation == "delay") devs = default_deviations(false, true);
  else if (a.deviation == "all") devs = default_deviations(true, true);
  else throw UsageError("--deviation must be scale, delay or all");

  MarketInstance inst;
  if (!a.inst.instance.empty()) {
    inst = a.inst.load(a.n, a.B, a.lambda);
  } else {
    std::vector<double> v;
    if (!a.values.empty()) {
      v = parse_list(a.values);
    } else {
      Engine eng(a.seed);
      v.resize(a.n);
      for (auto& x : v) x = uniform01(eng);
    }
    if (v.empty()) throw UsageError("probe needs at least one buyer");
    inst.valuations = v;
    inst.lambda = a.lambda;
    inst.horizon = static_cast<double>(v.size()) / a.lambda;
    inst.arrivals = grid_arrivals(v.size(), a.lambda);
    inst.curve = DiscountCurve::preset(curve_kind_from_string(a.curve), inst.horizon, a.lambda);
  }
  const std::size_t n = inst.size();
  const double vmax = *std::max_element(inst.valuations.begin(), inst.valuations.end());

  ProbeSetup ps;
  ps.mechanism = a.mech;
  ps.instance = inst;
  ps.prior = ValuationDistribution::uniform(0.0, a.prior_hi > 0.0 ? a.prior_hi : std::max(1.0, vmax));
  ps.B = a.B;
  ps.k = a.k;
  ps.target = a.target.value_or(static_cast<std::size_t>(
      std::max_element(inst.valuations.begin(), inst.valuations.end()) - inst.valuations.begin()));
  ps.deviations = devs;
  ps.exact = a.exact;
  ps.reps = a.reps;
  ps.seed = a.seed;
  if (!a.lottery.empty()) {
    if (a.lottery == "sequential") ps.options.online.lottery = Lottery::Sequential;
    else if (a.lottery == "uniform_slot") ps.options.online.lottery = Lottery::UniformSlot;
    else throw UsageError("--lottery must be sequential or uniform_slot");
  }
  std::vector<std::size_t> slots = a.slots;
  if (slots.empty()) {
    for (std::size_t j = 0; j < n; ++j) slots.push_back(j);
  }

  std::vector<std::pair<ProbeResult, DeviationKind>> rows;
  for (std::size_t slot : slots) {
    if (slot >= n) throw UsageError("--slot " + std::to_string(slot) + " is past the last buyer");
    ps.slot = slot;
    const auto res = truthfulness_probe(ps);
    for (std::size_t i = 0; i < res.size(); ++i) rows.push_back({res[i], devs[i].kind});
  }

  bool regression = false;
  for (const auto& [r, kind] : rows) {
    if (r.verdict == Verdict::Fail && documented_truthful(a.mech, kind)) regression = true;
  }

  std::string vals;
  for (double v : inst.valuations) vals += (vals.empty() ? "" : ",") + fmt_num(v);
  Header h{{"mech", a.mech},
           {"deviation", a.deviation},
           {"values", vals},
           {"curve", a.inst.instance.empty() ? a.curve : a.inst.instance},
           {"target", std::to_string(ps.target)},
           {"prior", ps.prior.describe()},
           {"B", fmt_num(a.B)},
           {"k", fmt_num(a.k)},
           {"exact", a.exact ? "true" : "false"},
           {"reps", std::to_string(a.reps)},
           {"seed", std::to_string(a.seed)},
           {"lottery", a.lottery.empty() ? "sequential" : a.lottery}};

  if (a.format == "json") {
    json j = json_header("probe", h);
    json arr = json::array();
    for (const auto& [r, kind] : rows) {
      arr.push_back({{"deviation", r.deviation}, {"slot", r.slot}, {"deviant_slot", r.deviant_slot},
                     {"crosses_class", r.crosses_class}, {"exact", r.exact}, {"truthful", r.truthful},
                     {"deviant", r.deviant}, {"gain", r.gain}, {"ci95", r.ci95}, {"verdict", to_string(r.verdict)},
                     {"documented_truthful", documented_truthful(a.mech, kind)}});
    }
    j["results"] = std::move(arr);
    j["regression"] = regression;
    write_output(a.out, j.dump(2) + "\n");
  } else {
    std::ostringstream os;
    os << csv_header("probe", h);
    os << "mechanism,deviation,slot,deviant_slot,crosses_class,exact,truthful,deviant,gain,ci95,verdict\n";
    for (const auto& [r, kind] : rows) {
      os << r.mechanism << ',' << r.deviation << ',' << r.slot << ',' << r.deviant_slot << ','
         << (r.crosses_class ? 1 : 0) << ',' << (r.exact ? 1 : 0) << ',' << fmt_num(r.truthful) << ','
         << fmt_num(r.deviant) << ',' << fmt_num(r.gain) << ',' << fmt_num(r.ci95) << ',' << to_string(r.verdict)
         << '\n';
    }
    write_output(a.out, os.str());
  }
  if (regression) {
    std::cerr << "tdlab: truthfulness regression: " << a.mech << " failed a deviation it is documented to resist\n";
    return kTruthRegression;
  }
  return kOk;
}

// --- game ----------------------------------------------------------------------

int cmd_game(const std::string& ps, const std::string& threshold, std::size_t n, double K, double first_bid,
             const std::string& format, const std::string& out) {
  check_format(format);
  std::vector<std::unique_ptr<ProbeMechanism>> mechs;
  for (double p : parse_list(ps)) mechs.push_back(std::make_unique<ConstantProbe>(p));
  if (!threshold.empty()) {
    const auto t = parse_list(threshold);
    if (t.size() != 3) throw UsageError("--threshold expects thr,p_high,p_low");
    mechs.push_back(std::make_unique<ThresholdProbe>(t[0], t[1], t[2]));
  }
  if (mechs.empty()) throw UsageError("give --p and/or --threshold");
  Header h{{"p", ps}, {"threshold", threshold}, {"n", std::to_string(n)}, {"K", fmt_num(K)},
           {"first_bid", fmt_num(first_bid)}};
  json runs = json::array();
  std::ostringstream os;
  os << csv_header("game", h) << "probe,n,K,rounds,vickrey,mechanism_revenue,ratio,accepted_mass\n";
  for (auto& m : mechs) {
    const auto g = run_adaptive_game(*m, n, K, first_bid);
    os << '"' << m->name() << "\"," << n << ',' << fmt_num(K) << ',' << g.rounds.size() << ',' << fmt_num(g.vickrey)
       << ',' << fmt_num(g.mechanism_revenue) << ',' << fmt_num(g.ratio) << ',' << fmt_num(g.accepted_mass) << '\n';
    json rounds = json::array();
    for (const auto& r : g.rounds) rounds.push_back({{"bid", r.bid}, {"p", r.p}, {"action", r.action}});
    json run = {{"probe", m->name()}, {"rounds", rounds}, {"vickrey", g.vickrey},
                {"mechanism_revenue", g.mechanism_revenue}, {"accepted_mass", g.accepted_mass}};
    run["ratio"] = std::isfinite(g.ratio) ? json(g.ratio) : json(nullptr);
    runs.push_back(std::move(run));
  }
  if (format == "json") {
    json j = json_header("game", h);
    j["games"] = std::move(runs);
    write_output(out, j.dump(2) + "\n");
  } else {
    write_output(out, os.str());
  }
  return kOk;
}

// --- schedule ------------------------------------------------------------------

ValuationDistribution schedule_dist(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string fam = spec.substr(0, colon);
  const auto params = colon == std::string::npos ? std::vector<double>{} : parse_list(spec.substr(colon + 1));
  auto need = [&](std::size_t k) {
    if (params.size() != k) throw UsageError("--dist " + fam + " takes " + std::to_string(k) + " parameters");
  };
  if (fam == "uniform") {
    if (params.empty()) return ValuationDistribution::uniform(0.0, 1.0);
    need(2);
    return ValuationDistribution::uniform(params[0], params[1]);
  }
  if (fam == "normal") {
    need(2);
    return ValuationDistribution::normal(params[0], params[1]);
  }
  if (fam == "exponential") {
    need(1);
    return ValuationDistribution::exponential(params[0]);
  }
  if (fam == "Uni" || fam == "Nor" || fam == "Exp") return preset_distribution(valuation_preset_from_string(fam), 0);
  throw UsageError("unsupported distribution family '" + fam + "' (uniform, normal, exponential, Uni, Nor, Exp)");
}

int cmd_schedule(const std::string& dist_spec, const std::string& d_list, const std::string& curve, std::size_t n,
                 double horizon, double lambda, const std::string& out) {
  const auto dist = schedule_dist(dist_spec);
  std::vector<double> t, d;
  if (!d_list.empty()) {
    d = parse_list(d_list);
    for (std::size_t j = 0; j < d.size(); ++j) t.push_back(static_cast<double>(j + 1));
  } else if (n > 0) {
    const double lam = lambda > 0.0 ? lambda : static_cast<double>(n) / horizon;
    const auto c = DiscountCurve::preset(curve_kind_from_string(curve), horizon, lam);
    t = grid_arrivals(n, lam);
    for (double tj : t) d.push_back(c(tj));
  }
  ReservationSchedule s;
  if (!d.empty()) {
    s = dynamic_reservation_schedule(dist, t, d);
    semi_truthful_schedule(dist, s);
  }
  Header h{{"dist", dist.describe()}, {"n", std::to_string(d.size())}};
  if (!d_list.empty()) h.push_back({"d", d_list});
  else h.insert(h.end(), {{"curve", curve}, {"horizon", fmt_num(horizon)}, {"lambda", fmt_num(lambda)}});
  write_output(out, csv_header("schedule", h) + schedule_csv(s));
  return kOk;
}

// --- oracle --------------------------------------------------------------------

int cmd_oracle(InstanceArgs& ia, std::size_t n, double B, double lambda, double k, const std::string& out) {
  if (ia.instance.empty()) throw UsageError("--instance is required");
  const auto inst = ia.load(n, B, lambda);
  const std::size_t m = inst.size();
  if (m > 8) throw UsageError("exact oracles enumerate all orders and need n <= 8");
  const auto d = inst.slot_discounts();

  double opt = 0.0;
  std::vector<std::size_t> perm(m);
  for (std::size_t i = 0; i < m; ++i) perm[i] = i;
  std::size_t count = 0;
  do {
    double best = 0.0;
    for (std::size_t j = 0; j < m; ++j) best = std::max(best, inst.valuations[perm[j]] * d[j]);
    opt += best;
    ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  opt /= static_cast<double>(count);

  const auto part = partition_curve(inst.curve, B, inst.lambda, k);
  Header h = ia.header();
  h.push_back({"n", std::to_string(m)});
  h.push_back({"B", fmt_num(B)});
  std::ostringstream os;
  os << csv_header("oracle", h) << "quantity,value\n";
  os << "exact_expected_vickrey," << fmt_num(exact_expected_vickrey(inst)) << '\n';
  os << "exact_expected_opt1," << fmt_num(opt) << '\n';
  // Observe-then-select on each class that owns a contiguous block of slots.
  for (const auto& c : part.classes) {
    std::size_t first = m, cnt = 0;
    for (std::size_t j = 0; j < m; ++j) {
      if (part.class_of(d[j]) != c.id) continue;
      if (first == m) first = j;
      ++cnt;
    }
    if (cnt == 0) continue;
    os << "exact_expected_observe_select_class_" << c.id << ','
       << fmt_num(exact_expected_observe_select(inst, first, cnt, c.expected_size)) << '\n';
  }
  write_output(out, os.str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tdlab: online time-discounted auction lab"};
  app.set_version_flag("--version", std::string("tdlab ") + kVersion);
  app.require_subcommand(1);
  app.footer("Exit codes: 0 ok, 1 usage, 2 cell failure, 3 IR violation, 4 truthfulness regression.\n"
             "TDA_THREADS sets the default parallel width.");

  // experiment
  ExperimentArgs ea;
  auto* exp = app.add_subcommand("experiment", "run a sweep and write a CSV or JSON report");
  exp->add_option("--config", ea.config, "flat key = value config file or an earlier CSV report");
  exp->add_option("--preset", ea.preset, "built-in sweep");
  exp->add_option("--out", ea.out, "output file (default stdout)");
  exp->add_option("--format", ea.format, "csv or json");
  exp->add_option("--set", ea.sets, "extra key=value config override");
  exp->add_flag("--progress", ea.progress, "per-cell progress on stderr");
  ea.flags = {{"mech", &ea.mech},       {"curve", &ea.curve},   {"dist", &ea.dist},       {"n", &ea.n},
              {"B", &ea.B},             {"lambda", &ea.lambda}, {"horizon", &ea.horizon}, {"reps", &ea.reps},
              {"seed", &ea.seed},       {"threads", &ea.threads}, {"estimator", &ea.estimator}};
  for (auto& [key, target] : ea.flags) exp->add_option("--" + key, *target);

  // instance
  InstanceArgs ia;
  std::size_t inst_n = 16;
  double inst_B = 2.0, inst_lambda = 1.0;
  bool inst_list = false;
  std::string inst_out;
  auto* ins = app.add_subcommand("instance", "emit a preset instance as JSON");
  ia.add(ins);
  ins->add_option("--n", inst_n, "buyers");
  ins->add_option("--B", inst_B, "class base");
  ins->add_option("--lambda", inst_lambda, "arrival rate");
  ins->add_flag("--list", inst_list, "list preset ids");
  ins->add_option("--out", inst_out, "output file (default stdout)");

  // probe
  ProbeArgs pa;
  std::size_t target_opt = 0;
  auto* prb = app.add_subcommand("probe", "truthfulness probes");
  prb->add_option("--mech", pa.mech, "mechanism")->required();
  prb->add_option("--deviation", pa.deviation, "scale, delay or all");
  prb->add_option("--values", pa.values, "comma separated valuations in slot order");
  prb->add_option("--curve", pa.curve, "discount preset for generated instances");
  prb->add_option("--n", pa.n, "buyers for generated instances");
  pa.inst.add(prb);
  prb->add_option("--B", pa.B, "class base");
  prb->add_option("--class-k", pa.k, "reserved-class exponent");
  prb->add_option("--lambda", pa.lambda, "arrival rate");
  prb->add_option("--prior-hi", pa.prior_hi, "upper end of the uniform prior (default max(1, max value))");
  prb->add_option("--slot", pa.slots, "truthful slot(s) of the target, 0-based (default all)");
  auto* topt = prb->add_option("--target", target_opt, "index of the probed buyer (default highest value)");
  prb->add_flag("--exact", pa.exact, "enumerate co-bidder orders and coins (n <= 6)");
  prb->add_option("--reps", pa.reps, "sampled replications");
  prb->add_option("--seed", pa.seed, "seed");
  prb->add_option("--lottery", pa.lottery, "sequential or uniform_slot");
  prb->add_option("--format", pa.format, "csv or json");
  prb->add_option("--out", pa.out, "output file (default stdout)");

  // game
  std::string g_p, g_thr, g_format = "csv", g_out;
  std::size_t g_n = 100;
  double g_K = 1e6, g_first = 1.0;
  auto* gm = app.add_subcommand("game", "adaptive adversary against probe mechanisms");
  gm->add_option("--p", g_p, "comma separated constant acceptance probabilities");
  gm->add_option("--threshold", g_thr, "thr,p_high,p_low");
  gm->add_option("--n", g_n, "rounds");
  gm->add_option("--K", g_K, "escalation factor");
  gm->add_option("--first-bid", g_first, "opening bid");
  gm->add_option("--format", g_format, "csv or json");
  gm->add_option("--out", g_out, "output file (default stdout)");

  // schedule
  std::string s_dist = "uniform", s_d, s_curve = "D1", s_out;
  std::size_t s_n = 0;
  double s_horizon = 2000.0, s_lambda = 0.0;
  auto* sch = app.add_subcommand("schedule", "reservation price ladder as CSV");
  sch->add_option("--dist", s_dist, "uniform[:lo,hi], normal:mean,sd, exponential:mean, Uni, Nor or Exp");
  sch->add_option("--d", s_d, "comma separated discounts, one per slot");
  sch->add_option("--curve", s_curve, "discount preset when --d is absent");
  sch->add_option("--n", s_n, "slots when --d is absent");
  sch->add_option("--horizon", s_horizon, "horizon when --d is absent");
  sch->add_option("--lambda", s_lambda, "arrival rate (default n / horizon)");
  sch->add_option("--out", s_out, "output file (default stdout)");

  // oracle
  InstanceArgs oa;
  std::size_t o_n = 6;
  double o_B = 2.0, o_lambda = 1.0, o_k = 1.0;
  std::string o_out;
  auto* orc = app.add_subcommand("oracle", "exact expectations for a small instance");
  oa.add(orc);
  orc->add_option("--n", o_n, "buyers");
  orc->add_option("--B", o_B, "class base");
  orc->add_option("--lambda", o_lambda, "arrival rate");
  orc->add_option("--class-k", o_k, "reserved-class exponent");
  orc->add_option("--out", o_out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*exp) return cmd_experiment(ea);
    if (*ins) return cmd_instance(ia, inst_n, inst_B, inst_lambda, inst_list, inst_out);
    if (*prb) {
      if (*topt) pa.target = target_opt;
      return cmd_probe(pa);
    }
    if (*gm) return cmd_game(g_p, g_thr, g_n, g_K, g_first, g_format, g_out);
    if (*sch) return cmd_schedule(s_dist, s_d, s_curve, s_n, s_horizon, s_lambda, s_out);
    if (*orc) return cmd_oracle(oa, o_n, o_B, o_lambda, o_k, o_out);
  } catch (const UsageError& e) {
    std::cerr << "tdlab: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "tdlab: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "tdlab: error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
