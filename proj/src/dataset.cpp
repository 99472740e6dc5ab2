#include "casebase/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "casebase/error.hpp"
#include "casebase/table.hpp"

namespace casebase {

CovariateColumn CovariateColumn::numeric(std::string name, std::vector<double> values) {
  CovariateColumn c;
  c.name = std::move(name);
  c.values = std::move(values);
  return c;
}

CovariateColumn CovariateColumn::factor(std::string name, std::vector<int> codes,
                                        std::vector<std::string> levels, std::string reference) {
  CovariateColumn c;
  c.name = std::move(name);
  c.categorical = true;
  c.codes = std::move(codes);
  c.levels = std::move(levels);
  c.reference = std::move(reference);
  return c;
}

CovariateValue CovariateColumn::value(std::size_t row) const {
  if (categorical) return levels.at(static_cast<std::size_t>(codes.at(row)));
  return values.at(row);
}

std::string CovariateColumn::text(std::size_t row) const {
  if (categorical) return levels.at(static_cast<std::size_t>(codes.at(row)));
  return format_real(values.at(row));
}

CovariateColumn CovariateColumn::empty_like() const {
  CovariateColumn c;
  c.name = name;
  c.categorical = categorical;
  c.levels = levels;
  c.reference = reference;
  return c;
}

void CovariateColumn::push_from(const CovariateColumn& source, std::size_t row) {
  if (categorical) codes.push_back(source.codes[row]);
  else values.push_back(source.values[row]);
}

int CovariateColumn::level_index(std::string_view level) const {
  for (std::size_t i = 0; i < levels.size(); ++i)
    if (levels[i] == level) return static_cast<int>(i);
  return -1;
}

const CovariateColumn* Covariates::find(std::string_view name) const {
  for (const auto& c : columns)
    if (c.name == name) return &c;
  return nullptr;
}

CovariateColumn* Covariates::find(std::string_view name) {
  for (auto& c : columns)
    if (c.name == name) return &c;
  return nullptr;
}

std::vector<std::string> Covariates::names() const {
  std::vector<std::string> out;
  out.reserve(columns.size());
  for (const auto& c : columns) out.push_back(c.name);
  return out;
}

Profile Covariates::row(std::size_t index) const {
  Profile p;
  for (const auto& c : columns) p.emplace(c.name, c.value(index));
  return p;
}

void ColumnSchema::validate() const {
  if (time_column.empty() || event_column.empty())
    fail(ErrorKind::invalid_argument, "time and event column names must be non-empty");
  if (time_column == event_column)
    fail(ErrorKind::invalid_argument, "time and event columns must be distinct");
  if (id_column && (*id_column == time_column || *id_column == event_column))
    fail(ErrorKind::invalid_argument, "id column must differ from time and event columns");
  if (tau && !(*tau > 0.0)) fail(ErrorKind::invalid_argument, "tau must be positive");
  if (n_causes && *n_causes < 1) fail(ErrorKind::invalid_argument, "number of causes must be >= 1");
}

std::size_t SurvivalDataset::event_count(int cause) const {
  return static_cast<std::size_t>(std::count(event_types.begin(), event_types.end(), cause));
}

std::size_t SurvivalDataset::total_events() const {
  return static_cast<std::size_t>(
      std::count_if(event_types.begin(), event_types.end(), [](int e) { return e > 0; }));
}

void SurvivalDataset::validate(bool require_events) const {
  const std::size_t n = size();
  if (subject_ids.size() != n || event_types.size() != n)
    fail(ErrorKind::data, "dataset columns have inconsistent lengths");
  if (n == 0) fail(ErrorKind::data, "dataset is empty");
  if (!(tau > 0.0) || !std::isfinite(tau)) fail(ErrorKind::data, "tau must be positive and finite");
  if (n_causes < 1) fail(ErrorKind::data, "dataset must declare at least one cause");
  for (std::size_t i = 0; i < n; ++i) {
    const double t = followup_times[i];
    if (!std::isfinite(t)) fail(ErrorKind::data, "row " + std::to_string(i + 1) + ": non-finite follow-up time");
    if (!(t > 0.0)) fail(ErrorKind::data, "row " + std::to_string(i + 1) + ": non-positive follow-up time");
    if (t > tau) fail(ErrorKind::data, "row " + std::to_string(i + 1) + ": follow-up time exceeds tau");
    if (event_types[i] < 0 || event_types[i] > n_causes)
      fail(ErrorKind::data, "row " + std::to_string(i + 1) + ": event code " +
                                std::to_string(event_types[i]) + " outside 0.." + std::to_string(n_causes));
  }
  if (require_events && total_events() == 0) fail(ErrorKind::data, "dataset contains no events");
  for (const auto& c : covariates.columns) {
    if (c.size() != n) fail(ErrorKind::data, "covariate '" + c.name + "' has wrong length");
    if (c.categorical) {
      if (c.level_index(c.reference) < 0)
        fail(ErrorKind::data, "reference level '" + c.reference + "' not observed in '" + c.name + "'");
    } else {
      for (double v : c.values)
        if (!std::isfinite(v)) fail(ErrorKind::data, "covariate '" + c.name + "' has a non-finite value");
    }
  }
}

}  // namespace casebase
