#include "casebase/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "casebase/error.hpp"
#include "casebase/random.hpp"

namespace casebase {

std::size_t PersonMomentTable::count(int indicator) const {
  return static_cast<std::size_t>(std::count(event_indicators.begin(), event_indicators.end(), indicator));
}

double total_person_time(const SurvivalDataset& data) {
  if (data.size() == 0) fail(ErrorKind::data, "total person-time of an empty dataset");
  double total = 0.0;
  for (double t : data.followup_times) total += t;
  return total;
}

double compute_offset(std::size_t base_size, double person_time) {
  if (base_size < 1) fail(ErrorKind::invalid_argument, "base series size must be >= 1");
  if (!(person_time > 0.0) || !std::isfinite(person_time))
    fail(ErrorKind::invalid_argument, "person-time must be positive and finite");
  return std::log(person_time / static_cast<double>(base_size));
}

std::size_t base_series_size(double ratio, std::size_t events) {
  if (!(ratio > 0.0) || !std::isfinite(ratio)) fail(ErrorKind::invalid_argument, "ratio must be positive");
  const double b = std::round(ratio * static_cast<double>(events));
  if (b >= static_cast<double>(std::numeric_limits<std::size_t>::max() / 2))
    fail(ErrorKind::invalid_argument, "base series size overflows");
  return static_cast<std::size_t>(b);
}

PersonMomentTable sample_base_series(const SurvivalDataset& data, const SamplingOptions& options) {
  const std::size_t events = data.total_events();
  if (events == 0) fail(ErrorKind::data, "case-base sampling needs at least one event");
  const std::size_t b = base_series_size(options.ratio, events);
  if (b == 0) fail(ErrorKind::data, "ratio x events rounds to an empty base series");
  if (b + events > options.row_cap)
    fail(ErrorKind::invalid_argument, "base series of " + std::to_string(b) + " rows exceeds the row cap of " +
                                          std::to_string(options.row_cap));

  const std::size_t n = data.size();
  std::vector<double> cumulative(n);
  double running = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    running += data.followup_times[i];
    cumulative[i] = running;
  }
  const double person_time = running;
  const double offset = compute_offset(b, person_time);

  PersonMomentTable out;
  out.n_causes = data.n_causes;
  out.tau = data.tau;
  out.meta = {person_time, b, options.ratio, options.seed};
  const std::size_t rows = b + events;
  out.subject_ids.reserve(rows);
  out.moment_times.reserve(rows);
  out.event_indicators.reserve(rows);
  out.offsets.assign(rows, offset);
  for (const auto& c : data.covariates.columns) {
    out.covariates.columns.push_back(c.empty_like());
    if (c.categorical) out.covariates.columns.back().codes.reserve(rows);
    else out.covariates.columns.back().values.reserve(rows);
  }
  auto push_row = [&](std::size_t subject, double moment, int indicator) {
    out.subject_ids.push_back(data.subject_ids[subject]);
    out.moment_times.push_back(moment);
    out.event_indicators.push_back(indicator);
    for (std::size_t c = 0; c < data.covariates.columns.size(); ++c)
      out.covariates.columns[c].push_from(data.covariates.columns[c], subject);
  };

  // Follow-up times laid end to end on (0, B]; a uniform point on that line
  // picks a subject with probability t_i / B and a uniform moment within it.
  // Draw k always uses Philox block k, so any chunking gives the same rows.
  CounterRng rng(options.seed, streams::sampling);
  for (std::size_t k = 0; k < b; ++k) {
    rng.seek(k);
    const double point = rng.uniform_open_low() * person_time;
    auto it = std::lower_bound(cumulative.begin(), cumulative.end(), point);
    if (it == cumulative.end()) --it;
    const auto subject = static_cast<std::size_t>(it - cumulative.begin());
    const double start = subject ? cumulative[subject - 1] : 0.0;
    double moment = std::min(point - start, data.followup_times[subject]);
    if (!(moment > 0.0)) moment = std::nextafter(0.0, 1.0);
    push_row(subject, moment, 0);
  }
  for (std::size_t i = 0; i < n; ++i)
    if (data.event_types[i] > 0) push_row(i, data.followup_times[i], data.event_types[i]);
  return out;
}

double MomentRow::covariate(std::string_view name) const {
  const auto* column = table.covariates.find(name);
  if (!column) fail(ErrorKind::data, "unknown covariate '" + std::string(name) + "'");
  return column->categorical ? static_cast<double>(column->codes[index]) : column->values[index];
}

PersonMomentTable annotate_moments(const PersonMomentTable& table, const std::string& name,
                                   const MomentRule& rule) {
  if (name.empty()) fail(ErrorKind::invalid_argument, "annotation column needs a name");
  for (const char* reserved : {"subject_id", "moment_time", "event_indicator", "offset"})
    if (name == reserved) fail(ErrorKind::invalid_argument, "'" + name + "' is a reserved column name");
  if (table.covariates.find(name)) fail(ErrorKind::invalid_argument, "column '" + name + "' already exists");
  std::vector<double> values(table.size());
  for (std::size_t r = 0; r < table.size(); ++r) {
    try {
      values[r] = rule(MomentRow{table, r});
    } catch (const std::exception& e) {
      fail(ErrorKind::data, "annotation rule failed at row " + std::to_string(r + 1) + ": " + e.what());
    }
    if (!std::isfinite(values[r]))
      fail(ErrorKind::data, "annotation rule returned a non-finite value at row " + std::to_string(r + 1));
  }
  PersonMomentTable out = table;
  out.covariates.columns.push_back(CovariateColumn::numeric(name, std::move(values)));
  return out;
}

MomentRule threshold_rule(const std::string& column, const std::string& op) {
  if (op != "<" && op != "<=" && op != ">" && op != ">=")
    fail(ErrorKind::invalid_argument, "unsupported comparison '" + op + "'");
  return [column, op](const MomentRow& row) -> double {
    const double lhs = row.covariate(column);
    const double t = row.moment_time();
    if (op == "<") return lhs < t ? 1.0 : 0.0;
    if (op == "<=") return lhs <= t ? 1.0 : 0.0;
    if (op == ">") return lhs > t ? 1.0 : 0.0;
    return lhs >= t ? 1.0 : 0.0;
  };
}

}  // namespace casebase
