#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "casebase/glm.hpp"
#include "casebase/table.hpp"

namespace casebase {

struct ElasticNetOptions {
  bool standardize = true;
  double cd_tolerance = 1e-7;        // max coefficient change in one sweep
  double deviance_tolerance = 1e-8;  // relative change between outer iterations
  double kkt_tolerance = 1e-12;      // max KKT residual, standardized scale
  int max_outer = 200;
  int max_sweeps = 100000;
};

/// Column standardization record: x_std = (x - center) / scale.
struct Standardization {
  Eigen::VectorXd center;
  Eigen::VectorXd scale;
  std::vector<bool> excluded;  // penalized columns with zero variance, fixed at 0
};

/// Elastic-net path. Coefficients are on the original (unstandardized) scale.
struct PenalizedPath {
  double alpha = 1.0;
  std::vector<double> penalty_factors;
  std::vector<double> lambdas;
  std::vector<Eigen::VectorXd> coefficients;
  std::vector<double> deviances;
  std::vector<double> kkt_residuals;
  std::vector<int> outer_iterations;
  std::vector<std::vector<double>> objective_traces;
  Standardization standardization;
};

Standardization standardize_columns(const Eigen::MatrixXd& X, const std::vector<double>& penalty_factors,
                                    bool standardize);

/// Decreasing geometric grid from lambda_max to lambda_max * min_ratio.
/// lambda_max is the smallest lambda at which every penalized coefficient is
/// zero, computed from the fit of the unpenalized columns alone.
std::vector<double> lambda_path(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, const Eigen::VectorXd& offset,
                                double alpha, const std::vector<double>& penalty_factors, int n_lambda,
                                double min_ratio, bool standardize = true);

/// Offset logistic elastic net:
///   min  -loglik(theta) / n + lambda * sum_j w_j (alpha |theta_j| + (1 - alpha) theta_j^2 / 2)
/// by IRLS with cyclic coordinate descent on each quadratic approximation.
/// Fits are warm-started along `lambdas`.
PenalizedPath fit_elastic_net(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, const Eigen::VectorXd& offset,
                              double alpha, const std::vector<double>& penalty_factors,
                              const std::vector<double>& lambdas, const ElasticNetOptions& options = {});

struct CvResult {
  std::vector<double> lambdas;
  std::vector<double> cv_deviance;  // mean held-out deviance per observation
  std::vector<double> cv_se;
  std::size_t index_min = 0;
  std::size_t index_1se = 0;
  double lambda_min = 0.0;
  double lambda_1se = 0.0;
  std::vector<int> fold_of;
};

/// Stratified K-fold cross-validation on a fixed lambda grid. An empty grid
/// means "compute with lambda_path(n_lambda, min_ratio)".
CvResult cv_elastic_net(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, const Eigen::VectorXd& offset,
                        double alpha, const std::vector<double>& penalty_factors, std::vector<double> lambdas,
                        int folds, std::uint64_t seed, const ElasticNetOptions& options = {}, int n_lambda = 100,
                        double min_ratio = 1e-4);

/// Fold labels in [0, folds): events and non-events are shuffled separately
/// and dealt round-robin, so every fold gets its share of events.
std::vector<int> stratified_folds(const Eigen::VectorXi& y, int folds, std::uint64_t seed);

/// Held-out logistic deviance (-2 loglik) summed over rows.
double logistic_deviance(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, const Eigen::VectorXd& offset,
                         const Eigen::VectorXd& theta);

struct PenaltyOptions {
  double alpha = 1.0;
  int n_lambda = 100;
  double min_ratio = 1e-4;
  std::vector<double> lambdas;                     // explicit grid; overrides n_lambda
  std::map<std::string, double> penalty_overrides;  // by design column name
  bool penalize_time = false;
  int cv_folds = 5;  // < 2 disables CV and selects the last lambda
  std::uint64_t seed = 1;
  ElasticNetOptions solver;
};

struct PenalizedHazardFit {
  std::vector<std::string> column_names;
  std::vector<double> penalty_factors;
  PenalizedPath path;
  std::optional<CvResult> cv;
  std::size_t selected = 0;
  HazardModel model;  // coefficients at the selected lambda
};

/// Penalized single-event hazard fit on a person-moment table. The intercept
/// is never penalized; time columns are unpenalized unless penalize_time.
PenalizedHazardFit fit_penalized_hazard(const PersonMomentTable& table, const ModelSpec& spec,
                                        const PenaltyOptions& options = {});

/// Path as a table: lambda, deviance, nonzero count, kkt, then one column per
/// coefficient.
Table path_table(const PenalizedHazardFit& fit);

}  // namespace casebase
