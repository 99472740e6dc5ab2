#include "casebase/penalized.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "casebase/error.hpp"
#include "casebase/parallel.hpp"
#include "casebase/random.hpp"

namespace casebase {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;

namespace {

inline double log1pexp(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double soft_threshold(double u, double t) {
  if (u > t) return u - t;
  if (u < -t) return u + t;
  return 0.0;
}

// Neumaier-compensated sum.
double loglik_of(const VectorXd& eta, const VectorXi& y) {
  double sum = 0.0, carry = 0.0;
  for (Index i = 0; i < eta.size(); ++i) {
    const double term = y(i) * eta(i) - log1pexp(eta(i));
    const double t = sum + term;
    carry += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
    sum = t;
  }
  return sum + carry;
}

std::optional<Index> find_intercept(const MatrixXd& X) {
  for (Index j = 0; j < X.cols(); ++j)
    if ((X.col(j).array() == 1.0).all()) return j;
  return std::nullopt;
}

void check_inputs(const MatrixXd& X, const VectorXi& y, const VectorXd& offset, double alpha,
                  const std::vector<double>& w) {
  if (X.rows() == 0) fail(ErrorKind::data, "penalized fit needs at least one row");
  if (y.size() != X.rows() || offset.size() != X.rows())
    fail(ErrorKind::invalid_argument, "design, response, and offset lengths differ");
  if (static_cast<Index>(w.size()) != X.cols())
    fail(ErrorKind::invalid_argument, "penalty factor count does not match the design width");
  for (double v : w)
    if (!(v >= 0.0) || !std::isfinite(v)) fail(ErrorKind::invalid_argument, "penalty factors must be finite and >= 0");
  if (!(alpha >= 0.0 && alpha <= 1.0)) fail(ErrorKind::invalid_argument, "alpha must lie in [0, 1]");
  Index events = 0;
  for (Index i = 0; i < y.size(); ++i) {
    if (y(i) != 0 && y(i) != 1)
      fail(ErrorKind::invalid_argument, "penalized fitting supports single-event (0/1) responses only");
    events += y(i);
  }
  if (events == 0 || events == y.size()) fail(ErrorKind::data, "penalized fit needs both events and base moments");
}

MatrixXd apply_standardization(const MatrixXd& X, const Standardization& s) {
  MatrixXd Xs(X.rows(), X.cols());
  for (Index j = 0; j < X.cols(); ++j) {
    if (s.excluded[static_cast<std::size_t>(j)])
      Xs.col(j).setZero();
    else
      Xs.col(j) = (X.col(j).array() - s.center(j)) / s.scale(j);
  }
  return Xs;
}

VectorXd to_original(const VectorXd& theta_s, const Standardization& s, std::optional<Index> intercept) {
  VectorXd out(theta_s.size());
  double shift = 0.0;
  for (Index j = 0; j < theta_s.size(); ++j) {
    out(j) = theta_s(j) / s.scale(j);
    if (!intercept || j != *intercept) shift += out(j) * s.center(j);
  }
  if (intercept) out(*intercept) -= shift;
  return out;
}

/// Solver state shared by every lambda of one path, on the standardized design.
class PathSolver {
 public:
  PathSolver(const MatrixXd& Xs, const VectorXi& y, const VectorXd& offset, double alpha,
             const std::vector<double>& w, const std::vector<bool>& excluded, const ElasticNetOptions& options)
      : Xs_(Xs), y_(y), yd_(y.cast<double>()), offset_(offset), alpha_(alpha), w_(w), excluded_(excluded),
        options_(options), n_(static_cast<double>(Xs.rows())) {
    for (Index j = 0; j < Xs.cols(); ++j) {
      const auto k = static_cast<std::size_t>(j);
      if (excluded_[k]) continue;
      (w_[k] > 0.0 ? penalized_ : unpenalized_).push_back(j);
    }
  }

  /// Unpenalized-only fit: the starting point of every path.
  VectorXd null_start() const {
    VectorXd theta = VectorXd::Zero(Xs_.cols());
    if (unpenalized_.empty()) return theta;
    MatrixXd XU(Xs_.rows(), static_cast<Index>(unpenalized_.size()));
    for (std::size_t k = 0; k < unpenalized_.size(); ++k) XU.col(static_cast<Index>(k)) = Xs_.col(unpenalized_[k]);
    const GlmFit fit = fit_logistic_offset(XU, y_, offset_);
    for (std::size_t k = 0; k < unpenalized_.size(); ++k)
      theta(unpenalized_[k]) = fit.coefficients(0, static_cast<Index>(k));
    return theta;
  }

  /// Gradient of -loglik / n.
  VectorXd gradient(const VectorXd& theta) const {
    VectorXd eta = Xs_ * theta + offset_;
    VectorXd r(eta.size());
    for (Index i = 0; i < eta.size(); ++i) r(i) = yd_(i) - sigmoid(eta(i));
    return -(Xs_.transpose() * r) / n_;
  }

  double kkt_residual(const VectorXd& theta, double lambda) const {
    const VectorXd g = gradient(theta);
    double worst = 0.0;
    for (Index j : unpenalized_) worst = std::max(worst, std::abs(g(j)));
    for (Index j : penalized_) {
      const double wj = w_[static_cast<std::size_t>(j)];
      const double l1 = alpha_ * lambda * wj;
      if (theta(j) == 0.0) {
        worst = std::max(worst, std::abs(g(j)) - l1);
      } else {
        const double sign = theta(j) > 0.0 ? 1.0 : -1.0;
        worst = std::max(worst, std::abs(g(j) + (1.0 - alpha_) * lambda * wj * theta(j) + l1 * sign));
      }
    }
    return std::max(worst, 0.0);
  }

  double penalty(const VectorXd& theta, double lambda) const {
    double pen = 0.0;
    for (Index j : penalized_) {
      const double wj = w_[static_cast<std::size_t>(j)];
      pen += wj * (alpha_ * std::abs(theta(j)) + 0.5 * (1.0 - alpha_) * theta(j) * theta(j));
    }
    return lambda * pen;
  }

  double objective(const VectorXd& theta, double lambda, double* loglik = nullptr) const {
    const double ll = loglik_of(Xs_ * theta + offset_, y_);
    if (loglik) *loglik = ll;
    return -ll / n_ + penalty(theta, lambda);
  }

  /// Minimizes the penalized objective at one lambda starting from theta.
  /// Returns the number of outer (IRLS) iterations.
  int solve(VectorXd& theta, double lambda, std::vector<double>& trace, double& deviance) const {
    const Index p = Xs_.cols();
    const Index n = Xs_.rows();
    double ll = 0.0;
    double F = objective(theta, lambda, &ll);
    trace.push_back(F);
    double dev = -2.0 * ll;
    double inner_tol = options_.cd_tolerance;
    VectorXd sqrt_w(n);
    MatrixXd G(p, p);
    MatrixXd Xw(n, p);
    int outer = 0;
    while (outer < options_.max_outer) {
      ++outer;
      const VectorXd eta = Xs_ * theta + offset_;
      VectorXd resid(n);
      for (Index i = 0; i < n; ++i) {
        const double pr = sigmoid(eta(i));
        resid(i) = yd_(i) - pr;
        sqrt_w(i) = std::sqrt(std::max(pr * (1.0 - pr), 1e-12));
      }
      Xw = sqrt_w.asDiagonal() * Xs_;
      G.setZero();
      G.selfadjointView<Eigen::Lower>().rankUpdate(Xw.transpose(), 1.0 / n_);
      G = G.selfadjointView<Eigen::Lower>();
      // grad_q = b - G theta_new, the negative gradient of the quadratic model.
      VectorXd grad_q = Xs_.transpose() * resid / n_;
      VectorXd next = theta;

      Eigen::LLT<MatrixXd> block;
      MatrixXd GU;
      if (!unpenalized_.empty()) {
        const auto m = static_cast<Index>(unpenalized_.size());
        GU.resize(m, m);
        for (Index a = 0; a < m; ++a)
          for (Index b = 0; b < m; ++b) GU(a, b) = G(unpenalized_[a], unpenalized_[b]);
        const double ridge = 1e-12 * std::max(GU.diagonal().mean(), 1e-300);
        GU.diagonal().array() += ridge;
        block.compute(GU);
      }

      for (int sweep = 0; sweep < options_.max_sweeps; ++sweep) {
        double max_change = 0.0;
        if (!unpenalized_.empty()) {
          VectorXd rhs(static_cast<Index>(unpenalized_.size()));
          for (std::size_t k = 0; k < unpenalized_.size(); ++k) rhs(static_cast<Index>(k)) = grad_q(unpenalized_[k]);
          const VectorXd delta = block.solve(rhs);
          for (std::size_t k = 0; k < unpenalized_.size(); ++k) {
            const Index j = unpenalized_[k];
            const double d = delta(static_cast<Index>(k));
            if (d == 0.0) continue;
            next(j) += d;
            grad_q.noalias() -= G.col(j) * d;
            max_change = std::max(max_change, std::abs(d));
          }
        }
        for (Index j : penalized_) {
          const double gjj = G(j, j);
          if (!(gjj > 0.0)) continue;
          const double wj = w_[static_cast<std::size_t>(j)];
          const double u = grad_q(j) + gjj * next(j);
          const double updated = soft_threshold(u, lambda * alpha_ * wj) / (gjj + lambda * (1.0 - alpha_) * wj);
          const double d = updated - next(j);
          if (d == 0.0) continue;
          next(j) = updated;
          grad_q.noalias() -= G.col(j) * d;
          max_change = std::max(max_change, std::abs(d));
        }
        if (max_change <= inner_tol) break;
      }

      // Halve towards the current point until the objective does not increase.
      VectorXd candidate = next;
      double ll_c = 0.0;
      double F_c = objective(candidate, lambda, &ll_c);
      double step = 1.0;
      int halvings = 0;
      // Near the optimum the objective change drops below its rounding; fall back to the KKT residual.
      const bool tie = !(F_c <= F) && F_c <= F + 1e-15 * std::abs(F) &&
                       kkt_residual(candidate, lambda) < kkt_residual(theta, lambda);
      while (!tie && !(F_c <= F) && halvings < 40) {
        step *= 0.5;
        ++halvings;
        candidate = theta + step * (next - theta);
        F_c = objective(candidate, lambda, &ll_c);
      }
      const bool stalled = !tie && !(F_c <= F);
      if (!stalled) {
        theta = candidate;
        F = F_c;
        ll = ll_c;
      }
      trace.push_back(F);
      const double dev_new = -2.0 * ll;
      if (!std::isfinite(dev_new)) fail(ErrorKind::numerical, "penalized fit diverged (deviance is not finite)");
      const bool settled = std::abs(dev_new - dev) / (std::abs(dev_new) + 0.1) <= options_.deviance_tolerance;
      dev = dev_new;
      if (settled || stalled) {
        if (kkt_residual(theta, lambda) <= options_.kkt_tolerance || stalled) break;
        inner_tol = std::max(inner_tol * 1e-2, 1e-15);
      }
    }
    deviance = dev;
    return outer;
  }

  const std::vector<Index>& penalized() const noexcept { return penalized_; }

 private:
  const MatrixXd& Xs_;
  const VectorXi& y_;
  VectorXd yd_;
  const VectorXd& offset_;
  double alpha_;
  const std::vector<double>& w_;
  const std::vector<bool>& excluded_;
  ElasticNetOptions options_;
  double n_;
  std::vector<Index> penalized_;
  std::vector<Index> unpenalized_;
};

double lambda_max_of(double alpha, const std::vector<double>& w, const PathSolver& solver) {
  const VectorXd theta = solver.null_start();
  const VectorXd g = solver.gradient(theta);
  double best = 0.0;
  for (Index j : solver.penalized()) best = std::max(best, std::abs(g(j)) / (alpha * w[static_cast<std::size_t>(j)]));
  return best;
}

}  // namespace

Standardization standardize_columns(const MatrixXd& X, const std::vector<double>& w, bool standardize) {
  const Index p = X.cols();
  const double n = static_cast<double>(X.rows());
  const auto intercept = find_intercept(X);
  Standardization s;
  s.center = VectorXd::Zero(p);
  s.scale = VectorXd::Ones(p);
  s.excluded.assign(static_cast<std::size_t>(p), false);
  for (Index j = 0; j < p; ++j) {
    if (intercept && j == *intercept) continue;
    const auto col = X.col(j);
    const bool penalized = w[static_cast<std::size_t>(j)] > 0.0;
    if (intercept) {
      const double mean = col.mean();
      s.center(j) = mean;
      if (penalized) {
        if ((col.array() == col(0)).all()) {
          s.excluded[static_cast<std::size_t>(j)] = true;
          continue;
        }
        if (standardize) s.scale(j) = std::sqrt((col.array() - mean).square().sum() / n);
      }
    } else if (penalized) {
      if ((col.array() == 0.0).all()) {
        s.excluded[static_cast<std::size_t>(j)] = true;
        continue;
      }
      if (standardize) s.scale(j) = std::sqrt(col.squaredNorm() / n);
    }
  }
  return s;
}

std::vector<double> lambda_path(const MatrixXd& X, const VectorXi& y, const VectorXd& offset, double alpha,
                                const std::vector<double>& w, int n_lambda, double min_ratio, bool standardize) {
  check_inputs(X, y, offset, alpha, w);
  if (alpha == 0.0)
    fail(ErrorKind::invalid_argument, "alpha = 0 has no finite lambda_max; supply an explicit lambda grid");
  if (std::none_of(w.begin(), w.end(), [](double v) { return v > 0.0; }))
    fail(ErrorKind::invalid_argument, "all penalty factors are zero; nothing to penalize");
  if (n_lambda < 2) fail(ErrorKind::invalid_argument, "n_lambda must be at least 2");
  if (!(min_ratio > 0.0 && min_ratio < 1.0)) fail(ErrorKind::invalid_argument, "min_ratio must lie in (0, 1)");
  const Standardization s = standardize_columns(X, w, standardize);
  const MatrixXd Xs = apply_standardization(X, s);
  const PathSolver solver(Xs, y, offset, alpha, w, s.excluded, ElasticNetOptions{});
  // Inflated by one part in 1e9 so roundoff cannot leave a coefficient nonzero at the first point.
  const double lmax = lambda_max_of(alpha, w, solver) * (1.0 + 1e-9);
  if (!(lmax > 0.0)) fail(ErrorKind::data, "lambda_max is zero: penalized columns are constant or uninformative");
  std::vector<double> grid(static_cast<std::size_t>(n_lambda));
  const double log_step = std::log(min_ratio) / (n_lambda - 1);
  for (int k = 0; k < n_lambda; ++k) grid[static_cast<std::size_t>(k)] = lmax * std::exp(log_step * k);
  grid.back() = lmax * min_ratio;
  return grid;
}

PenalizedPath fit_elastic_net(const MatrixXd& X, const VectorXi& y, const VectorXd& offset, double alpha,
                              const std::vector<double>& w, const std::vector<double>& lambdas,
                              const ElasticNetOptions& options) {
  check_inputs(X, y, offset, alpha, w);
  if (lambdas.empty()) fail(ErrorKind::invalid_argument, "lambda grid is empty");
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    if (!(lambdas[k] >= 0.0) || !std::isfinite(lambdas[k]))
      fail(ErrorKind::invalid_argument, "lambda values must be finite and >= 0");
    if (k > 0 && !(lambdas[k] < lambdas[k - 1]))
      fail(ErrorKind::invalid_argument, "lambda grid must be strictly decreasing");
  }
  PenalizedPath path;
  path.alpha = alpha;
  path.penalty_factors = w;
  path.lambdas = lambdas;
  path.standardization = standardize_columns(X, w, options.standardize);
  const MatrixXd Xs = apply_standardization(X, path.standardization);
  const auto intercept = find_intercept(X);
  const PathSolver solver(Xs, y, offset, alpha, w, path.standardization.excluded, options);
  VectorXd theta = solver.null_start();
  for (double lambda : lambdas) {
    std::vector<double> trace;
    double deviance = 0.0;
    const int outer = solver.solve(theta, lambda, trace, deviance);
    path.coefficients.push_back(to_original(theta, path.standardization, intercept));
    path.deviances.push_back(deviance);
    path.kkt_residuals.push_back(solver.kkt_residual(theta, lambda));
    path.outer_iterations.push_back(outer);
    path.objective_traces.push_back(std::move(trace));
  }
  return path;
}

double logistic_deviance(const MatrixXd& X, const VectorXi& y, const VectorXd& offset, const VectorXd& theta) {
  return -2.0 * loglik_of(X * theta + offset, y);
}

std::vector<int> stratified_folds(const VectorXi& y, int folds, std::uint64_t seed) {
  std::vector<int> fold_of(static_cast<std::size_t>(y.size()), 0);
  CounterRng rng(seed, streams::folds);
  std::size_t position = 0;
  for (int cls : {1, 0}) {
    std::vector<std::size_t> members;
    for (Index i = 0; i < y.size(); ++i)
      if ((y(i) != 0 ? 1 : 0) == cls) members.push_back(static_cast<std::size_t>(i));
    for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[rng.below(i)]);
    for (std::size_t idx : members) fold_of[idx] = static_cast<int>(position++ % static_cast<std::size_t>(folds));
  }
  return fold_of;
}

CvResult cv_elastic_net(const MatrixXd& X, const VectorXi& y, const VectorXd& offset, double alpha,
                        const std::vector<double>& w, std::vector<double> lambdas, int folds, std::uint64_t seed,
                        const ElasticNetOptions& options, int n_lambda, double min_ratio) {
  check_inputs(X, y, offset, alpha, w);
  if (folds < 2) fail(ErrorKind::invalid_argument, "cross-validation needs at least 2 folds");
  if (folds > X.rows()) fail(ErrorKind::invalid_argument, "more folds than rows");
  if (lambdas.empty()) lambdas = lambda_path(X, y, offset, alpha, w, n_lambda, min_ratio, options.standardize);

  CvResult cv;
  cv.lambdas = lambdas;
  cv.fold_of = stratified_folds(y, folds, seed);
  const auto K = static_cast<std::size_t>(folds);
  for (std::size_t k = 0; k < K; ++k) {
    bool has_event = false;
    for (Index i = 0; i < y.size(); ++i)
      if (cv.fold_of[static_cast<std::size_t>(i)] != static_cast<int>(k) && y(i) == 1) has_event = true;
    if (!has_event) fail(ErrorKind::data, "cross-validation fold " + std::to_string(k + 1) + " leaves no events for training");
  }

  std::vector<std::vector<double>> fold_dev(K);
  parallel_for(K, [&](std::size_t k) {
    std::vector<Index> train, test;
    for (Index i = 0; i < y.size(); ++i)
      (cv.fold_of[static_cast<std::size_t>(i)] == static_cast<int>(k) ? test : train).push_back(i);
    auto rows = [&](const std::vector<Index>& idx, MatrixXd& Xo, VectorXi& yo, VectorXd& oo) {
      Xo.resize(static_cast<Index>(idx.size()), X.cols());
      yo.resize(static_cast<Index>(idx.size()));
      oo.resize(static_cast<Index>(idx.size()));
      for (std::size_t r = 0; r < idx.size(); ++r) {
        Xo.row(static_cast<Index>(r)) = X.row(idx[r]);
        yo(static_cast<Index>(r)) = y(idx[r]);
        oo(static_cast<Index>(r)) = offset(idx[r]);
      }
    };
    MatrixXd Xtr, Xte;
    VectorXi ytr, yte;
    VectorXd otr, ote;
    rows(train, Xtr, ytr, otr);
    rows(test, Xte, yte, ote);
    const PenalizedPath path = fit_elastic_net(Xtr, ytr, otr, alpha, w, lambdas, options);
    auto& out = fold_dev[k];
    for (const auto& theta : path.coefficients)
      out.push_back(logistic_deviance(Xte, yte, ote, theta) / static_cast<double>(test.size()));
  });

  const std::size_t L = lambdas.size();
  cv.cv_deviance.assign(L, 0.0);
  cv.cv_se.assign(L, 0.0);
  for (std::size_t l = 0; l < L; ++l) {
    double mean = 0.0;
    for (std::size_t k = 0; k < K; ++k) mean += fold_dev[k][l];
    mean /= static_cast<double>(K);
    double ss = 0.0;
    for (std::size_t k = 0; k < K; ++k) ss += (fold_dev[k][l] - mean) * (fold_dev[k][l] - mean);
    cv.cv_deviance[l] = mean;
    cv.cv_se[l] = std::sqrt(ss / static_cast<double>(K - 1)) / std::sqrt(static_cast<double>(K));
    if (!std::isfinite(mean)) fail(ErrorKind::numerical, "cross-validated deviance is not finite");
  }
  cv.index_min = static_cast<std::size_t>(
      std::min_element(cv.cv_deviance.begin(), cv.cv_deviance.end()) - cv.cv_deviance.begin());
  const double limit = cv.cv_deviance[cv.index_min] + cv.cv_se[cv.index_min];
  cv.index_1se = cv.index_min;
  for (std::size_t l = 0; l < cv.index_min; ++l)
    if (cv.cv_deviance[l] <= limit) {
      cv.index_1se = l;
      break;
    }
  cv.lambda_min = lambdas[cv.index_min];
  cv.lambda_1se = lambdas[cv.index_1se];
  return cv;
}

PenalizedHazardFit fit_penalized_hazard(const PersonMomentTable& table, const ModelSpec& requested,
                                        const PenaltyOptions& options) {
  const ModelSpec spec = resolve_spec(requested, table);
  const DesignMatrix dm = build_design_matrix(table, spec);
  if (table.n_causes > 1 || (dm.y.size() > 0 && dm.y.maxCoeff() > 1))
    fail(ErrorKind::invalid_argument, "penalized fitting supports single-event data only");

  PenalizedHazardFit out;
  out.column_names = dm.column_names;
  const auto p = dm.column_names.size();
  out.penalty_factors.assign(p, 1.0);
  out.penalty_factors[0] = 0.0;
  if (!options.penalize_time)
    for (std::size_t c : dm.time_columns) out.penalty_factors[c] = 0.0;
  for (const auto& [name, value] : options.penalty_overrides) {
    const auto it = std::find(dm.column_names.begin(), dm.column_names.end(), name);
    if (it == dm.column_names.end()) fail(ErrorKind::invalid_argument, "penalty factor for unknown column '" + name + "'");
    const auto c = static_cast<std::size_t>(it - dm.column_names.begin());
    if (c == 0 && value != 0.0) fail(ErrorKind::invalid_argument, "the intercept cannot be penalized");
    out.penalty_factors[c] = value;
  }

  std::vector<double> lambdas = options.lambdas;
  if (lambdas.empty())
    lambdas = lambda_path(dm.X, dm.y, dm.offset, options.alpha, out.penalty_factors, options.n_lambda,
                          options.min_ratio, options.solver.standardize);
  out.path = fit_elastic_net(dm.X, dm.y, dm.offset, options.alpha, out.penalty_factors, lambdas, options.solver);
  if (options.cv_folds >= 2) {
    out.cv = cv_elastic_net(dm.X, dm.y, dm.offset, options.alpha, out.penalty_factors, lambdas, options.cv_folds,
                            options.seed, options.solver);
    out.selected = out.cv->index_min;
  } else {
    out.selected = lambdas.size() - 1;
  }

  const VectorXd& theta = out.path.coefficients[out.selected];
  HazardModel& model = out.model;
  model.causes = 1;
  model.spec = spec;
  model.column_names = dm.column_names;
  model.coefficients = theta.transpose();
  model.covariance = MatrixXd::Constant(static_cast<Index>(p), static_cast<Index>(p),
                                        std::numeric_limits<double>::quiet_NaN());
  model.offset_value = table.offsets.front();
  model.fit.deviance = out.path.deviances[out.selected];
  const double events = static_cast<double>(dm.y.sum());
  const double n = static_cast<double>(dm.y.size());
  model.fit.null_deviance = -2.0 * (events * std::log(events / n) + (n - events) * std::log((n - events) / n));
  const auto nonzero = static_cast<double>((theta.array() != 0.0).count());
  model.fit.aic = model.fit.deviance + 2.0 * nonzero;
  model.fit.iterations = out.path.outer_iterations[out.selected];
  model.fit.converged = true;
  model.fit.gradient_norm = out.path.kkt_residuals[out.selected];
  model.fit.n_obs = dm.y.size();
  model.data_fingerprint = data_fingerprint(table);
  model.penalty = PenaltyInfo{options.alpha, lambdas[out.selected], out.penalty_factors};
  return out;
}

Table path_table(const PenalizedHazardFit& fit) {
  const auto& path = fit.path;
  Table t;
  std::vector<long long> nonzero;
  for (const auto& c : path.coefficients) {
    long long count = 0;
    for (std::size_t j = 0; j < fit.penalty_factors.size(); ++j)
      if (fit.penalty_factors[j] > 0.0 && c(static_cast<Index>(j)) != 0.0) ++count;
    nonzero.push_back(count);
  }
  t.add_column("lambda", path.lambdas);
  t.add_column("deviance", path.deviances);
  t.add_column("n_nonzero", nonzero);
  t.add_column("kkt_residual", path.kkt_residuals);
  if (fit.cv) {
    t.add_column("cv_deviance", fit.cv->cv_deviance);
    t.add_column("cv_se", fit.cv->cv_se);
  }
  for (std::size_t j = 0; j < fit.column_names.size(); ++j) {
    std::vector<double> col;
    for (const auto& c : path.coefficients) col.push_back(c(static_cast<Index>(j)));
    t.add_column(fit.column_names[j], std::move(col));
  }
  return t;
}

}  // namespace casebase
