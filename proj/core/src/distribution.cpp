#include "tda/distribution.hpp"

#include <algorithm>
#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "tda/format.hpp"

namespace tda {

namespace {

double phi_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Upper tail cut used for unbounded supports.
constexpr double kTailMass = 1e-12;

}  // namespace

std::string to_string(DistFamily f) {
  switch (f) {
    case DistFamily::Uniform: return "uniform";
    case DistFamily::Normal: return "normal";
    case DistFamily::Exponential: return "exponential";
    case DistFamily::Empirical: return "empirical";
  }
  return "unknown";
}

DistFamily dist_family_from_string(const std::string& s) {
  if (s == "uniform" || s == "uni") return DistFamily::Uniform;
  if (s == "normal" || s == "nor") return DistFamily::Normal;
  if (s == "exponential" || s == "exp") return DistFamily::Exponential;
  if (s == "empirical") return DistFamily::Empirical;
  throw std::invalid_argument("unknown distribution family '" + s + "'");
}

ValuationDistribution ValuationDistribution::uniform(double lo, double hi) {
  if (!(hi > lo) || lo < 0.0) throw std::invalid_argument("uniform: need 0 <= lo < hi");
  ValuationDistribution d;
  d.family_ = DistFamily::Uniform;
  d.params_ = {lo, hi};
  return d;
}

ValuationDistribution ValuationDistribution::normal(double mean, double sd) {
  if (!(sd > 0.0)) throw std::invalid_argument("normal: sd must be positive");
  ValuationDistribution d;
  d.family_ = DistFamily::Normal;
  d.params_ = {mean, sd};
  d.norm_lo_ = phi_cdf(-mean / sd);
  if (!(d.norm_lo_ < 1.0)) throw std::invalid_argument("normal: no mass above 0");
  return d;
}

ValuationDistribution ValuationDistribution::exponential(double mean) {
  if (!(mean > 0.0)) throw std::invalid_argument("exponential: mean must be positive");
  ValuationDistribution d;
  d.family_ = DistFamily::Exponential;
  d.params_ = {mean};
  return d;
}

ValuationDistribution ValuationDistribution::empirical(std::vector<double> samples) {
  if (samples.empty()) throw std::invalid_argument("empirical: no samples");
  std::sort(samples.begin(), samples.end());
  if (samples.front() < 0.0) throw std::invalid_argument("empirical: negative sample");
  ValuationDistribution d;
  d.family_ = DistFamily::Empirical;
  d.samples_ = std::move(samples);
  return d;
}

double ValuationDistribution::cdf(double v) const {
  switch (family_) {
    case DistFamily::Uniform: {
      const double lo = params_[0], hi = params_[1];
      if (v <= lo) return 0.0;
      if (v >= hi) return 1.0;
      return (v - lo) / (hi - lo);
    }
    case DistFamily::Normal: {
      if (v <= 0.0) return 0.0;
      const double p = phi_cdf((v - params_[0]) / params_[1]);
      return std::clamp((p - norm_lo_) / (1.0 - norm_lo_), 0.0, 1.0);
    }
    case DistFamily::Exponential:
      return v <= 0.0 ? 0.0 : -std::expm1(-v / params_[0]);
    case DistFamily::Empirical: {
      auto it = std::upper_bound(samples_.begin(), samples_.end(), v);
      return static_cast<double>(it - samples_.begin()) / static_cast<double>(samples_.size());
    }
  }
  return 0.0;
}

double ValuationDistribution::sample(Engine& eng) const {
  switch (family_) {
    case DistFamily::Uniform:
      return boost::random::uniform_real_distribution<double>(params_[0], params_[1])(eng);
    case DistFamily::Normal: {
      boost::random::normal_distribution<double> nd(params_[0], params_[1]);
      for (;;) {
        double v = nd(eng);
        if (v >= 0.0) return v;
      }
    }
    case DistFamily::Exponential:
      return boost::random::exponential_distribution<double>(1.0 / params_[0])(eng);
    case DistFamily::Empirical: {
      boost::random::uniform_int_distribution<std::size_t> pick(0, samples_.size() - 1);
      return samples_[pick(eng)];
    }
  }
  return 0.0;
}

double ValuationDistribution::lower() const {
  switch (family_) {
    case DistFamily::Uniform: return params_[0];
    case DistFamily::Empirical: return samples_.front();
    default: return 0.0;
  }
}

double ValuationDistribution::upper() const {
  switch (family_) {
    case DistFamily::Uniform: return params_[1];
    case DistFamily::Normal: {
      // Solve the truncated upper quantile by bisection on the CDF.
      double a = 0.0, b = std::max(params_[0], 0.0) + 40.0 * params_[1];
      for (int i = 0; i < 200; ++i) {
        double m = 0.5 * (a + b);
        if (1.0 - cdf(m) > kTailMass) a = m; else b = m;
      }
      return b;
    }
    case DistFamily::Exponential: return params_[0] * -std::log(kTailMass);
    case DistFamily::Empirical: return samples_.back();
  }
  return 0.0;
}

double ValuationDistribution::mean() const {
  switch (family_) {
    case DistFamily::Uniform: return 0.5 * (params_[0] + params_[1]);
    case DistFamily::Normal: {
      const double mu = params_[0], sd = params_[1];
      const double a = -mu / sd;
      const double pdf_a = std::exp(-0.5 * a * a) / std::sqrt(2.0 * M_PI);
      return mu + sd * pdf_a / (1.0 - norm_lo_);
    }
    case DistFamily::Exponential: return params_[0];
    case DistFamily::Empirical:
      return std::accumulate(samples_.begin(), samples_.end(), 0.0) / static_cast<double>(samples_.size());
  }
  return 0.0;
}

std::string ValuationDistribution::describe() const {
  std::ostringstream os;
  os << to_string(family_) << '(';
  if (family_ == DistFamily::Empirical) {
    os << samples_.size() << " samples";
  } else {
    for (std::size_t i = 0; i < params_.size(); ++i) os << (i ? "," : "") << fmt_num(params_[i]);
  }
  os << ')';
  return os.str();
}

ValuationDistribution fit_mle(DistFamily family, const std::vector<double>& samples) {
  if (samples.empty()) throw std::invalid_argument("fit_mle: no samples");
  const double n = static_cast<double>(samples.size());
  const double mx = *std::max_element(samples.begin(), samples.end());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  switch (family) {
    case DistFamily::Uniform:
      // MLE of the upper end with the lower end pinned at 0.
      return ValuationDistribution::uniform(0.0, mx > 0.0 ? mx : 1e-12);
    case DistFamily::Normal: {
      double ss = 0.0;
      for (double v : samples) ss += (v - mean) * (v - mean);
      double sd = std::sqrt(ss / n);
      sd = std::max(sd, 1e-6 * std::max(1.0, std::abs(mean)));
      return ValuationDistribution::normal(mean, sd);
    }
    case DistFamily::Exponential:
      return ValuationDistribution::exponential(std::max(mean, 1e-12));
    case DistFamily::Empirical:
      return ValuationDistribution::empirical(samples);
  }
  throw std::invalid_argument("fit_mle: unsupported family");
}

}  // namespace tda
