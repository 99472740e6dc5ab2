#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "casebase/dataset.hpp"
#include "casebase/design.hpp"
#include "casebase/sampling.hpp"
#include "casebase/simulate.hpp"

namespace fixture {

inline casebase::SurvivalDataset dataset(const std::vector<double>& times, const std::vector<int>& events,
                                         std::vector<casebase::CovariateColumn> covariates = {},
                                         double tau = 0.0) {
  casebase::SurvivalDataset d;
  d.followup_times = times;
  d.event_types = events;
  for (std::size_t i = 0; i < times.size(); ++i) d.subject_ids.push_back(std::to_string(i + 1));
  d.covariates.columns = std::move(covariates);
  int j = 0;
  for (int e : events) j = std::max(j, e);
  d.n_causes = std::max(j, 1);
  double t_max = 0.0;
  for (double t : times) t_max = std::max(t_max, t);
  d.tau = tau > 0.0 ? tau : t_max;
  return d;
}

inline casebase::CauseTruth exponential(double rate, std::map<std::string, double> log_hr = {}) {
  casebase::CauseTruth c;
  c.family = casebase::HazardFamily::exponential;
  c.rate = rate;
  c.log_hr = std::move(log_hr);
  return c;
}

inline casebase::CauseTruth weibull(double shape, double scale) {
  casebase::CauseTruth c;
  c.family = casebase::HazardFamily::weibull;
  c.shape = shape;
  c.scale = scale;
  return c;
}

inline casebase::CauseTruth gompertz(double a, double b) {
  casebase::CauseTruth c;
  c.family = casebase::HazardFamily::gompertz;
  c.a = a;
  c.b = b;
  return c;
}

inline casebase::CovariateSampler bernoulli(std::string name, double p = 0.5) {
  casebase::CovariateSampler s;
  s.name = std::move(name);
  s.kind = casebase::SamplerKind::bernoulli;
  s.p = p;
  return s;
}

inline casebase::CovariateSampler normal(std::string name, double mean = 0.0, double sd = 1.0) {
  casebase::CovariateSampler s;
  s.name = std::move(name);
  s.kind = casebase::SamplerKind::normal;
  s.mean = mean;
  s.sd = sd;
  return s;
}

inline casebase::TruthSpec truth(std::vector<casebase::CauseTruth> causes, std::size_t n, std::uint64_t seed,
                                 std::optional<double> tau = std::nullopt,
                                 std::vector<casebase::CovariateSampler> covariates = {}) {
  casebase::TruthSpec s;
  s.causes = std::move(causes);
  s.covariates = std::move(covariates);
  s.n = n;
  s.seed = seed;
  s.tau = tau;
  return s;
}

inline casebase::PersonMomentTable sample(const casebase::SurvivalDataset& d, double ratio, std::uint64_t seed) {
  casebase::SamplingOptions o;
  o.ratio = ratio;
  o.seed = seed;
  return casebase::sample_base_series(d, o);
}

/// Table with an intercept-only structure: given counts per class and offset.
inline casebase::PersonMomentTable counts_table(const std::vector<std::size_t>& counts, double offset) {
  casebase::PersonMomentTable t;
  double time = 0.5;
  for (std::size_t cls = 0; cls < counts.size(); ++cls)
    for (std::size_t k = 0; k < counts[cls]; ++k) {
      t.subject_ids.push_back(std::to_string(t.size() + 1));
      t.moment_times.push_back(time);
      t.event_indicators.push_back(static_cast<int>(cls));
      t.offsets.push_back(offset);
      time += 0.01;
    }
  t.n_causes = static_cast<int>(counts.size()) - 1;
  t.tau = time;
  return t;
}

/// Resolved spec for numeric terms only, for evaluating known truths.
inline casebase::ModelSpec resolved_spec(const std::string& text, double tau = 10.0) {
  auto spec = casebase::parse_model_spec(text);
  spec.time.epsilon = 1e-8 * tau;
  if (spec.time.kind == casebase::TimeKind::bspline && !spec.time.boundary_given) spec.time.upper = tau;
  spec.time.resolved = true;
  return spec;
}

}  // namespace fixture
