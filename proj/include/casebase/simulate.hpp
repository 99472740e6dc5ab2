#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "casebase/dataset.hpp"

namespace casebase {

enum class HazardFamily { exponential, gompertz, weibull };

const char* to_string(HazardFamily family) noexcept;

/// Baseline hazard of one cause:
///   exponential  lambda(t) = rate
///   gompertz     lambda(t) = exp(a + b t)
///   weibull      lambda(t) = (shape / scale) (t / scale)^(shape - 1)
/// scaled by exp(sum_k log_hr[k] x_k).
struct CauseTruth {
  HazardFamily family = HazardFamily::exponential;
  double rate = 1.0;
  double a = 0.0;
  double b = 0.0;
  double shape = 1.0;
  double scale = 1.0;
  std::map<std::string, double> log_hr;

  double baseline_hazard(double t) const;
  double baseline_cumulative_hazard(double t) const;
  /// Smallest t with H0(t) = h; +inf when the cumulative hazard stays below h.
  double inverse_cumulative_hazard(double h) const;
  double linear_predictor(const Profile& x) const;
};

enum class SamplerKind { bernoulli, normal, uniform };

struct CovariateSampler {
  std::string name;
  SamplerKind kind = SamplerKind::bernoulli;
  double p = 0.5;               // bernoulli
  double mean = 0.0, sd = 1.0;  // normal
  double min = 0.0, max = 1.0;  // uniform
};

struct TruthSpec {
  std::vector<CauseTruth> causes;
  std::vector<CovariateSampler> covariates;
  std::optional<double> tau;             // administrative end of follow-up
  std::optional<double> censoring_rate;  // independent exponential censoring
  std::size_t n = 1000;
  std::uint64_t seed = 1;

  void validate() const;
};

TruthSpec truth_from_json(std::string_view text);
std::string truth_to_json(const TruthSpec& spec);

/// Latent cause-specific times by inverse transform; observed time is the
/// minimum of the latent times, the censoring time, and tau. Subject i draws
/// from its own counter stream, so output does not depend on evaluation order.
SurvivalDataset simulate_dataset(const TruthSpec& spec);

struct RateEstimate {
  double rate = 0.0;
  double se_log_rate = 0.0;
};

/// Constant-hazard MLE: events / person-time, SE(log rate) = 1/sqrt(events).
RateEstimate exponential_mle(const SurvivalDataset& data);

struct WeibullCoefficients {
  double intercept = 0.0;
  double log_time_slope = 0.0;
};

/// Log-hazard log(shape/scale) - (shape-1) log(scale) + (shape-1) log t.
WeibullCoefficients weibull_truth_coefficients(double shape, double scale);

/// Analytic survival of the latent event time (all causes, no censoring).
double truth_survival(const TruthSpec& spec, double t, const Profile& x);
/// Analytic cumulative incidence of `cause` (1-based) without censoring,
/// by adaptive quadrature of lambda_j S.
double truth_cif(const TruthSpec& spec, int cause, double t, const Profile& x);

}  // namespace casebase
