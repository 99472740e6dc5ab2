#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "casebase/dataset.hpp"
#include "casebase/sampling.hpp"

namespace casebase {

enum class TimeKind { constant, linear, log, bspline };

const char* to_string(TimeKind kind) noexcept;

/// Functional form of time in the log-hazard. A spline basis is "requested"
/// (df, optional knots) until resolve_spec fills in knots and boundaries.
struct TimeBasis {
  TimeKind kind = TimeKind::constant;
  int degree = 3;
  int df = 0;  // bspline: degree + #interior knots; 0 means degree
  std::vector<double> interior_knots;
  double lower = 0.0;
  double upper = 0.0;
  double epsilon = 0.0;  // log guard: log(max(t, epsilon))
  bool knots_given = false;
  bool boundary_given = false;
  bool resolved = false;

  std::size_t n_columns() const noexcept;
  std::vector<std::string> column_names(const std::string& time_name) const;
  void validate() const;  // resolved bases only
};

/// Evaluates every B-spline basis function (degree + #interior + 1 values) at
/// x, clamped to [lower, upper]. Sums to one on the whole range.
std::vector<double> bspline_basis(double x, int degree, std::span<const double> interior,
                                  double lower, double upper);

/// Writes the basis columns for one time point into `out` (size n_columns()).
void time_basis_row(const TimeBasis& basis, double t, std::span<double> out);

Eigen::MatrixXd build_time_basis(const TimeBasis& basis, std::span<const double> times);

struct ModelSpec {
  TimeBasis time;
  std::vector<std::string> terms;
  std::vector<std::string> interactions;  // covariates interacting with every time column
  std::map<std::string, std::string> reference_levels;
  std::map<std::string, std::vector<std::string>> levels;  // filled by resolve_spec
  std::string time_name = "time";

  bool resolved() const noexcept { return time.resolved; }
};

/// Compact term language, e.g.
///   "time=bspline(df=3); terms=trt,age; interactions=trt; ref=trt:Control"
/// `time=` accepts constant | linear | log | bspline(df=, degree=, knots=a|b, boundary=lo|hi).
/// Interaction entries may be written "trt" or "trt:time".
ModelSpec parse_model_spec(std::string_view text);
std::string format_model_spec(const ModelSpec& spec);

/// Fills knots, boundary knots, the log guard, and categorical level sets
/// from the table's case series and covariate columns.
ModelSpec resolve_spec(const ModelSpec& spec, const PersonMomentTable& table);

/// Quantile of the sorted sample by linear interpolation (R type 7).
double quantile_sorted(std::span<const double> sorted, double probability);

struct DesignMatrix {
  Eigen::MatrixXd X;
  Eigen::VectorXi y;
  Eigen::VectorXd offset;
  std::vector<std::string> column_names;
  std::vector<std::size_t> time_columns;  // main-effect time-basis columns
  std::vector<std::string> constant_columns;  // rank-deficiency warning metadata
};

std::size_t design_width(const ModelSpec& resolved);
std::vector<std::string> design_column_names(const ModelSpec& resolved);
std::vector<std::size_t> design_time_columns(const ModelSpec& resolved);

DesignMatrix build_design_matrix(const PersonMomentTable& table, const ModelSpec& resolved);

/// Design row for an arbitrary (time, covariate profile) pair.
Eigen::VectorXd design_row(const ModelSpec& resolved, double t, const Profile& profile);

}  // namespace casebase
