#pragma once

#include <string>
#include <vector>

#include "tda/rng.hpp"

namespace tda {

enum class DistFamily { Uniform, Normal, Exponential, Empirical };

std::string to_string(DistFamily f);
DistFamily dist_family_from_string(const std::string& s);

// Valuation law. Normal laws are truncated at 0.
class ValuationDistribution {
 public:
  static ValuationDistribution uniform(double lo, double hi);
  static ValuationDistribution normal(double mean, double sd);
  static ValuationDistribution exponential(double mean);
  static ValuationDistribution empirical(std::vector<double> samples);

  DistFamily family() const { return family_; }
  double cdf(double v) const;
  double sample(Engine& eng) const;
  // Support used for numerical work. Unbounded laws are cut at the
  // 1 - 1e-12 quantile.
  double lower() const;
  double upper() const;
  double mean() const;
  const std::vector<double>& params() const { return params_; }
  const std::vector<double>& samples() const { return samples_; }
  std::string describe() const;

 private:
  DistFamily family_ = DistFamily::Uniform;
  std::vector<double> params_;
  std::vector<double> samples_;  // sorted, empirical only
  double norm_lo_ = 0.0;         // Phi(-mean/sd) for the truncated normal
};

// Maximum-likelihood fit of a family to observed valuations. Degenerate
// samples (no spread) are widened so the fitted law stays non-degenerate.
ValuationDistribution fit_mle(DistFamily family, const std::vector<double>& samples);

}  // namespace tda
