#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "casebase/dataset.hpp"

namespace casebase {

struct MomentsMeta {
  double person_time = 0.0;  // B
  std::size_t base_size = 0; // b
  double ratio = 0.0;
  std::uint64_t seed = 0;
};

/// Case series (event_indicator = cause) plus base series (event_indicator = 0).
struct PersonMomentTable {
  std::vector<std::string> subject_ids;
  std::vector<double> moment_times;
  std::vector<int> event_indicators;
  std::vector<double> offsets;
  Covariates covariates;
  int n_causes = 0;
  double tau = 0.0;
  MomentsMeta meta;

  std::size_t size() const noexcept { return moment_times.size(); }
  std::size_t count(int indicator) const;
};

struct SamplingOptions {
  double ratio = 100.0;
  std::uint64_t seed = 1;
  std::size_t row_cap = 50'000'000;
};

double total_person_time(const SurvivalDataset& data);

/// log(B / b).
double compute_offset(std::size_t base_size, double person_time);

/// b = round(ratio x events), half away from zero.
std::size_t base_series_size(double ratio, std::size_t events);

PersonMomentTable sample_base_series(const SurvivalDataset& data, const SamplingOptions& options);

/// Row view handed to annotation rules.
struct MomentRow {
  const PersonMomentTable& table;
  std::size_t index;

  const std::string& subject_id() const { return table.subject_ids[index]; }
  double moment_time() const { return table.moment_times[index]; }
  int event_indicator() const { return table.event_indicators[index]; }
  /// Numeric covariate value; categorical columns return their level code.
  double covariate(std::string_view name) const;
};

using MomentRule = std::function<double(const MomentRow&)>;

/// Appends a numeric covariate computed per row. A throwing rule aborts the
/// whole annotation with the offending row index.
PersonMomentTable annotate_moments(const PersonMomentTable& table, const std::string& name,
                                   const MomentRule& rule);

/// "exposed = column <op> moment_time" indicator rule, op in {<, <=, >, >=}.
MomentRule threshold_rule(const std::string& column, const std::string& op);

}  // namespace casebase
