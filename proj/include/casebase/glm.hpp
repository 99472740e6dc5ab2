#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "casebase/design.hpp"
#include "casebase/sampling.hpp"

namespace casebase {

struct FitOptions {
  double score_tolerance = 1e-8;      // max |score|
  double deviance_tolerance = 1e-10;  // relative deviance change
  int max_iterations = 50;
  int max_halvings = 20;
  double separation_norm = 1e4;
  double separation_step = 1e-3;      // Newton step at convergence, relative to max(1, max |theta|)
  double jitter = 1e-10;
};

struct FitStats {
  double deviance = 0.0;
  double null_deviance = 0.0;
  double aic = 0.0;
  int iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
  std::size_t n_obs = 0;
};

/// Raw optimizer output. `coefficients` is causes x p; `covariance` is over the
/// cause-major stacked vector (theta_1, ..., theta_J).
struct GlmFit {
  Eigen::MatrixXd coefficients;
  Eigen::MatrixXd covariance;
  FitStats stats;
  std::vector<double> loglik_trace;
};

/// Offset logistic regression by IRLS. y in {0, 1}.
GlmFit fit_logistic_offset(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, const Eigen::VectorXd& offset,
                           const FitOptions& options = {});

/// Offset multinomial regression by Newton's method with class 0 (the base
/// series) as reference. The offset is added to every non-reference predictor.
GlmFit fit_multinomial_offset(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, const Eigen::VectorXd& offset,
                              int n_causes, const FitOptions& options = {});

// Objective pieces on the stacked parameter vector (length J * p).
double multinomial_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, const Eigen::VectorXd& offset,
                          const Eigen::VectorXd& theta, int n_causes);
Eigen::VectorXd multinomial_score(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, const Eigen::VectorXd& offset,
                                  const Eigen::VectorXd& theta, int n_causes);
/// Observed information (negative Hessian of the log-likelihood).
Eigen::MatrixXd multinomial_information(const Eigen::MatrixXd& X, const Eigen::VectorXd& offset,
                                        const Eigen::VectorXd& theta, int n_causes);

/// Columns that make X rank deficient (empty when full column rank).
std::vector<std::size_t> rank_deficient_columns(const Eigen::MatrixXd& X);

struct PenaltyInfo {
  double alpha = 1.0;
  double lambda = 0.0;
  std::vector<double> penalty_factors;
};

/// Fitted hazard model; coefficient row j is the log-hazard of cause j+1.
struct HazardModel {
  int causes = 1;
  ModelSpec spec;
  std::vector<std::string> column_names;
  Eigen::MatrixXd coefficients;
  Eigen::MatrixXd covariance;
  double offset_value = 0.0;
  FitStats fit;
  std::uint64_t data_fingerprint = 0;
  std::optional<PenaltyInfo> penalty;

  std::size_t n_columns() const noexcept { return column_names.size(); }
  std::size_t n_parameters() const noexcept { return static_cast<std::size_t>(causes) * n_columns(); }
  /// Cause is 1-based.
  double std_error(int cause, std::size_t column) const;
};

std::uint64_t data_fingerprint(const PersonMomentTable& table);

/// Resolve the spec, build the design, and fit (logistic for J = 1,
/// multinomial otherwise).
HazardModel fit_hazard(const PersonMomentTable& table, const ModelSpec& requested, const FitOptions& options = {});

/// Model with given coefficients and zero covariance, for evaluating known truths.
HazardModel make_model(const ModelSpec& resolved, const Eigen::MatrixXd& coefficients);

struct CoefficientRow {
  std::string name;
  int cause = 1;
  double estimate = 0.0;
  double std_error = 0.0;
  double z = 0.0;
  double p_value = 1.0;
  double lower = 0.0;
  double upper = 0.0;
};

std::vector<CoefficientRow> wald_ci(const HazardModel& model, double level = 0.95);

struct HazardRatioPoint {
  double t = 0.0;
  double hr = 1.0;
  double lower = 1.0;
  double upper = 1.0;
};

/// HR(t) of profile a versus b for one cause, with delta-method bands.
std::vector<HazardRatioPoint> hazard_ratio_curve(const HazardModel& model, const Profile& a, const Profile& b,
                                                 std::span<const double> grid, int cause = 1,
                                                 double level = 0.95);

struct LrtResult {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
};

LrtResult lrt(const HazardModel& nested, const HazardModel& full);

double aic(const HazardModel& model);

/// Coefficient table with estimate, SE, z, p, and deviance/AIC footer.
std::string summary_text(const HazardModel& model);

}  // namespace casebase
