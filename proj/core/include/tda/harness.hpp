#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tda/classes.hpp"
#include "tda/distribution.hpp"
#include "tda/instances.hpp"
#include "tda/market.hpp"
#include "tda/mechanism.hpp"
#include "tda/online.hpp"
#include "tda/posted.hpp"

namespace tda {

inline constexpr const char* kVersion = "0.1.0";

// --- Mechanism registry ------------------------------------------------------

enum class DeviationKind { Scale, Delay, Combined };

struct MechanismOptions {
  OnlineOptions online;
  RhoPayment rho_payment = RhoPayment::Guarded;
  std::optional<double> Z;                // M_Z target; defaults to the market's OPT1 estimate
  std::optional<std::size_t> samples;     // M_L learning size; defaults to ceil(sqrt(n))
  std::optional<DistFamily> learn_family; // M_L fitted family; defaults from the prior
};

// Everything a mechanism may know before the first arrival.
struct MarketContext {
  DiscountCurve curve;
  double B = 2.0;
  double lambda = 1.0;
  double horizon = 1.0;
  double k = 1.0;
  std::size_t n = 0;                   // expected buyers
  std::vector<double> grid_t;          // expected grid j / lambda
  std::vector<double> grid_d;          // d on the expected grid
  std::shared_ptr<const ClassPartition> partition;
  std::optional<ValuationDistribution> prior;
  std::optional<std::vector<double>> valuation_set;  // multiset known up to order (Ext)

  static MarketContext build(const DiscountCurve& curve, double B, double lambda, double horizon, double k,
                             std::optional<ValuationDistribution> prior,
                             std::optional<std::vector<double>> valuation_set = std::nullopt);
};

std::vector<std::string> mechanism_names();
// Whether the mechanism is documented as resistant to this deviation kind;
// a FAIL there is a regression.
bool documented_truthful(const std::string& name, DeviationKind kind);

// Builds a factory for `name`. Schedules and other per-market precomputation
// happen once here and are shared by every run.
MechanismFactory make_mechanism_factory(const std::string& name, const MarketContext& ctx,
                                        const MechanismOptions& opt = {});

// OPT1 estimate E[max_j v_j d_j]: exact pair average for a known multiset
// with at most two positive values, else i.i.d. quadrature under the prior.
double opt1_estimate(const MarketContext& ctx);

// --- Experiments -------------------------------------------------------------

enum class Estimator {
  Sampled,     // one draw of the mechanism's coins per replication
  Expected,    // exact expectation over the mechanism's coins
  Importance,  // Expected plus importance placement of the top valuations
};

std::string to_string(Estimator e);
Estimator estimator_from_string(const std::string& s);

struct ExperimentConfig {
  std::vector<std::string> mechanisms{"m_r"};
  std::vector<std::string> curves{"D1"};
  std::vector<std::string> dists{"Uni"};
  std::vector<std::size_t> n_values{1000};
  double B = 2.0;
  double lambda = 0.0;   // 0 means n / horizon
  double horizon = 2000.0;
  std::size_t reps = 0;  // 0 means 10 * n
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0 means TDA_THREADS or hardware concurrency
  double k = 1.0;
  double eps = 1e-9;           // D6 tail level
  double eps_exponent = 0.0;   // when positive the D6 tail is n^-eps_exponent
  ArrivalMode arrivals = ArrivalMode::Grid;
  Estimator estimator = Estimator::Sampled;
  double is_alpha = 0.5;       // uniform share of the importance proposal
  std::size_t is_top = 2;      // valuations placed by importance sampling
  bool audit = true;
  bool progress = false;       // per-cell lines on stderr
  MechanismOptions mech;

  std::size_t reps_for(std::size_t n) const { return reps ? reps : 10 * n; }
  double lambda_for(std::size_t n) const { return lambda > 0.0 ? lambda : static_cast<double>(n) / horizon; }
};

struct IrViolation {
  std::string mechanism, curve, dist;
  std::size_t n = 0;
  std::size_t rep = 0;
  std::uint64_t seed = 0;
  std::size_t slot = 0;
  double price = 0.0;
  double payment = 0.0;
};

struct CellResult {
  std::string mechanism, curve, dist;
  std::size_t n = 0;
  double B = 2.0;
  double lambda = 1.0;
  std::size_t reps = 0;
  double mean_rev = 0.0;
  double mean_vickrey = 0.0;
  double ratio = 0.0;
  double ci95 = 0.0;           // half-width for the ratio (delta method)
  double rev_ci95 = 0.0;
  double vickrey_ci95 = 0.0;
  std::uint64_t seed = 0;      // cell seed shared by every mechanism of the cell
  bool failed = false;
  std::string failure;
  std::optional<std::uint64_t> failed_seed;
  std::size_t ir_violations = 0;
  double wall_ms = 0.0;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<CellResult> cells;
  std::vector<IrViolation> violations;  // first few per cell
  std::size_t total_violations = 0;

  bool any_failed() const;
};

// Seed of the (curve, dist, n) cell; replication r uses derive_seed(cell, r).
std::uint64_t cell_seed(std::uint64_t base, const std::string& curve, const std::string& dist, std::size_t n);

ExperimentReport run_experiment(const ExperimentConfig& cfg);

std::string report_csv(const ExperimentReport& r);
std::string report_json(const ExperimentReport& r);

// --- Config files ------------------------------------------------------------

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Flat `key = value` lines; `#` starts a comment. Duplicate keys keep the
// last value.
std::map<std::string, std::string> parse_flat_config(const std::string& text, std::map<std::string, std::size_t>* lines = nullptr);

// Applies one key; throws std::invalid_argument on bad keys or values.
void apply_config_key(ExperimentConfig& cfg, const std::string& key, const std::string& value);
ExperimentConfig config_from_text(const std::string& text);
std::string config_to_text(const ExperimentConfig& cfg);

// Built-in sweeps addressable by name.
std::vector<std::string> experiment_preset_names();
ExperimentConfig experiment_preset(const std::string& name);

// "1000", "1000,2000" or "1000..5000:500".
std::vector<std::size_t> parse_n_sweep(const std::string& s);

// --- Instances on disk ---------------------------------------------------------

std::string instance_to_json(const MarketInstance& inst);
MarketInstance instance_from_json(const std::string& text);

// --- Truthfulness probes ------------------------------------------------------

struct Deviation {
  DeviationKind kind = DeviationKind::Scale;
  double factor = 1.0;
  std::size_t delay = 0;
  bool to_next_class = false;  // delay resolved to the first slot of the next class
  std::string label() const;
};

std::vector<Deviation> default_deviations(bool scale, bool delay);

struct ProbeSetup {
  std::string mechanism;
  MarketInstance instance;
  ValuationDistribution prior = ValuationDistribution::uniform(0.0, 1.0);
  double B = 2.0;
  double k = 1.0;
  std::size_t target = 0;  // index into instance.valuations
  std::size_t slot = 0;    // truthful arrival slot of the target
  std::vector<Deviation> deviations;
  bool exact = false;      // enumerate co-bidder orders and coins (n <= 6)
  std::size_t reps = 20000;
  std::uint64_t seed = 1;
  MechanismOptions options;
};

enum class Verdict { Pass, Fail, Inconclusive, Skipped };
std::string to_string(Verdict v);

struct ProbeResult {
  std::string mechanism;
  std::string deviation;
  std::size_t slot = 0;
  std::size_t deviant_slot = 0;
  bool crosses_class = false;
  bool exact = false;
  double truthful = 0.0;
  double deviant = 0.0;
  double gain = 0.0;   // deviant - truthful
  double ci95 = 0.0;   // half-width of the paired gain (0 when exact)
  Verdict verdict = Verdict::Skipped;
};

std::vector<ProbeResult> truthfulness_probe(const ProbeSetup& setup);

// Pointwise check of v d_j - pay_j d_j >= v d_{j+1} - pay_{j+1} d_{j+1} for
// every v > x_j on a grid of test valuations. Returns violating (j, v) pairs.
struct MonotonicityViolation {
  std::size_t j = 0;
  double v = 0.0;
  double stay = 0.0;
  double delay = 0.0;
};
std::vector<MonotonicityViolation> winner_delay_monotonicity(const ReservationSchedule& s, RhoPayment pay,
                                                             std::size_t v_points = 64);

// --- IR audit ---------------------------------------------------------------

// Accept records whose payment exceeds the reported price.
std::vector<Decision> ir_audit(const AuctionOutcome& out);

// Width for parallel loops: TDA_THREADS when set, else hardware concurrency.
unsigned default_threads();

}  // namespace tda
