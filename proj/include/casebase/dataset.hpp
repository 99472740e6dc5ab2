#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace casebase {

using CovariateValue = std::variant<double, std::string>;

/// A covariate profile: name -> numeric value or categorical level.
using Profile = std::map<std::string, CovariateValue, std::less<>>;

/// One covariate column. Categorical columns keep integer codes into `levels`;
/// one-hot expansion happens in the design module.
struct CovariateColumn {
  std::string name;
  bool categorical = false;
  std::vector<double> values;
  std::vector<int> codes;
  std::vector<std::string> levels;
  std::string reference;

  static CovariateColumn numeric(std::string name, std::vector<double> values);
  static CovariateColumn factor(std::string name, std::vector<int> codes,
                                std::vector<std::string> levels, std::string reference);

  std::size_t size() const noexcept { return categorical ? codes.size() : values.size(); }
  CovariateValue value(std::size_t row) const;
  std::string text(std::size_t row) const;
  /// Empty column with the same name, type, and level set.
  CovariateColumn empty_like() const;
  void push_from(const CovariateColumn& source, std::size_t row);
  int level_index(std::string_view level) const;  // -1 when absent
};

struct Covariates {
  std::vector<CovariateColumn> columns;

  const CovariateColumn* find(std::string_view name) const;
  CovariateColumn* find(std::string_view name);
  std::vector<std::string> names() const;
  Profile row(std::size_t index) const;
};

struct ColumnSchema {
  std::string time_column = "time";
  std::string event_column = "event";
  std::optional<std::string> id_column;
  std::set<std::string> categorical_columns;
  std::map<std::string, std::string> reference_levels;
  std::optional<double> tau;
  std::optional<int> n_causes;
  char delimiter = ',';

  void validate() const;
};

/// Validated survival data: positive follow-up times bounded by tau, event code
/// 0 for censoring and 1..J for causes.
struct SurvivalDataset {
  std::vector<std::string> subject_ids;
  std::vector<double> followup_times;
  std::vector<int> event_types;
  Covariates covariates;
  int n_causes = 0;
  double tau = 0.0;

  std::string id_name = "id";
  std::string time_name = "time";
  std::string event_name = "event";

  std::size_t size() const noexcept { return followup_times.size(); }
  std::size_t event_count(int cause) const;
  std::size_t total_events() const;

  /// Throws Error(data) on the first violated invariant. `require_events`
  /// toggles the at-least-one-event check (simulated data may have none).
  void validate(bool require_events = true) const;
};

}  // namespace casebase
