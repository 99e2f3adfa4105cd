#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tda/distribution.hpp"
#include "tda/mechanism.hpp"

namespace tda {

// Per-slot thresholds in valuation units; slot j posts x_j * d_j.
struct ReservationSchedule {
  std::vector<double> t;
  std::vector<double> d;
  std::vector<double> x;
  std::vector<double> rho;  // payments for the semi-truthful variant
  std::vector<double> R;    // R[m-1] = R_m, revenue with m slots remaining
  std::vector<double> Rp;   // R'_m for the semi-truthful variant

  std::size_t size() const { return d.size(); }
};

// Expected revenue (1 - prod_j F(x / d_j)) * x of posting price x everywhere.
double fixed_price_revenue(const ValuationDistribution& dist, const std::vector<double>& d, double x);

// Best single posted price over {hi * d_j} plus a 10^4-point grid, refined
// locally. Point-mass laws return the mass point less one ulp.
double fixed_reservation_price(const ValuationDistribution& dist, const std::vector<double>& d);

// Backward recursion for thresholds x_j and the revenue ladder R_m. Uniform
// laws on [0, H] use the closed form; other laws maximise each step
// numerically after a 64-point bracketing scan.
ReservationSchedule dynamic_reservation_schedule(const ValuationDistribution& dist, const std::vector<double>& t,
                                                 const std::vector<double>& d);

// Adds payments rho_j and the ladder R'_m on top of a dynamic schedule.
void semi_truthful_schedule(const ValuationDistribution& dist, ReservationSchedule& s);

// CSV with columns j,t_j,d_j,x_j,rho_j,R_m,Rp_m (m = n - j + 1).
std::string schedule_csv(const ReservationSchedule& s);

// E[max_j v_j d_j] for i.i.d. valuations, by adaptive quadrature.
double expected_max_price(const ValuationDistribution& dist, const std::vector<double>& d);

enum class PostedKind { Fixed, Dynamic, SemiTruthful };

enum class RhoPayment {
  Guarded,  // min(rho_j, x_j) * d: never above the posted threshold
  Literal,  // rho_j * d as printed
};

// Posted-price mechanisms: M_F (fixed price), M_D (dynamic) and M_T
// (semi-truthful payments). Acceptance requires a strict r > threshold.
class PostedPrice final : public Mechanism {
 public:
  static std::unique_ptr<PostedPrice> fixed(double price);
  static std::unique_ptr<PostedPrice> dynamic(std::shared_ptr<const ReservationSchedule> s);
  static std::unique_ptr<PostedPrice> semi_truthful(std::shared_ptr<const ReservationSchedule> s,
                                                    RhoPayment pay = RhoPayment::Guarded);

  std::string name() const override;
  void start(Coins&) override { closed_ = false; }
  Decision on_event(const Event& e, Coins& coins) override;
  bool closed() const override { return closed_; }

  // Threshold price and payment that slot j would face at discount d.
  double threshold_at(std::size_t slot, double d) const;
  double payment_at(std::size_t slot, double d) const;

 private:
  PostedKind kind_ = PostedKind::Fixed;
  double price_ = 0.0;
  std::shared_ptr<const ReservationSchedule> sched_;
  RhoPayment pay_ = RhoPayment::Guarded;
  bool closed_ = false;
};

// Learning mechanism: watches the first n_s arrivals, fits the family by
// maximum likelihood, then runs the semi-truthful schedule on the remaining
// expected grid and credits compensation to the learning-phase buyers.
class LearningMechanism final : public Mechanism {
 public:
  LearningMechanism(DistFamily family, std::size_t n_s, std::vector<double> grid_t, std::vector<double> grid_d,
                    RhoPayment pay = RhoPayment::Guarded);
  std::string name() const override { return "m_l"; }
  void start(Coins&) override;
  Decision on_event(const Event& e, Coins& coins) override;
  bool closed() const override { return closed_; }
  void finish(AuctionOutcome& out) override;

  std::size_t sample_count() const { return n_s_; }
  // Per-buyer compensation for a winner at 0-based slot j of the full grid.
  double compensation(std::size_t slot) const;
  const ReservationSchedule* schedule() const { return sched_.get(); }

 private:
  DistFamily family_;
  std::size_t n_s_;
  std::vector<double> grid_t_;
  std::vector<double> grid_d_;
  RhoPayment pay_;
  std::vector<double> samples_;
  std::unique_ptr<ReservationSchedule> sched_;
  std::optional<std::size_t> winner_;
  bool closed_ = false;
};

// Default learning sample size ceil(sqrt(n)).
std::size_t default_sample_count(std::size_t n);

}  // namespace tda
