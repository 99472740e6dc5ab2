#include "casebase/glm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "casebase/error.hpp"
#include "casebase/stats.hpp"
#include "casebase/table.hpp"

namespace casebase {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;

inline double log1pexp(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logistic_loglik(const VectorXd& eta, const VectorXi& y) {
  long double total = 0.0L;
  for (Index i = 0; i < eta.size(); ++i) total += (y(i) ? eta(i) : 0.0) - log1pexp(eta(i));
  return static_cast<double>(total);
}

std::optional<Index> intercept_column(const MatrixXd& X) {
  for (Index c = 0; c < X.cols(); ++c)
    if ((X.col(c).array() == 1.0).all()) return c;
  return std::nullopt;
}

/// Cholesky of a symmetric positive (semi)definite matrix, adding a diagonal
/// jitter scaled to the mean diagonal when the plain factorization fails.
Eigen::LLT<MatrixXd> factor_spd(const MatrixXd& A, double jitter) {
  Eigen::LLT<MatrixXd> llt(A);
  if (llt.info() == Eigen::Success && (llt.matrixLLT().diagonal().array() > 0.0).all()) return llt;
  const double scale = std::max(A.diagonal().mean(), 1e-300);
  for (double j = jitter; j <= 1e-4; j *= 100.0) {
    MatrixXd B = A;
    B.diagonal().array() += j * scale;
    llt.compute(B);
    if (llt.info() == Eigen::Success) return llt;
  }
  fail(ErrorKind::numerical, "information matrix is not positive definite");
}

/// X^T diag(w) X.
MatrixXd weighted_gram(const MatrixXd& X, const VectorXd& w) {
  const MatrixXd Xw = X.array().colwise() * w.array().sqrt();
  MatrixXd G = MatrixXd::Zero(X.cols(), X.cols());
  G.selfadjointView<Eigen::Lower>().rankUpdate(Xw.transpose());
  return G.selfadjointView<Eigen::Lower>();
}

MatrixXd weighted_cross(const MatrixXd& X, const VectorXd& w) {
  return X.transpose() * (X.array().colwise() * w.array()).matrix();
}

void require_shapes(const MatrixXd& X, const VectorXi& y, const VectorXd& offset) {
  if (y.size() != X.rows() || offset.size() != X.rows())
    fail(ErrorKind::invalid_argument, "design, response, and offset lengths differ");
  if (X.rows() < X.cols()) fail(ErrorKind::data, "fewer rows than columns");
  if (X.cols() == 0) fail(ErrorKind::invalid_argument, "design matrix has no columns");
  if (!X.allFinite() || !offset.allFinite()) fail(ErrorKind::data, "design or offset contains non-finite values");
}

bool deviance_settled(double previous, double current, double tolerance) {
  return std::fabs(previous - current) / (std::fabs(current) + 0.1) <= tolerance;
}

double null_deviance(const VectorXi& y, int n_causes) {
  std::vector<double> counts(static_cast<std::size_t>(n_causes) + 1, 0.0);
  for (Index i = 0; i < y.size(); ++i) counts[static_cast<std::size_t>(y(i))] += 1.0;
  const double n = static_cast<double>(y.size());
  double ll = 0.0;
  for (double c : counts)
    if (c > 0) ll += c * std::log(c / n);
  return -2.0 * ll;
}

struct RowProbabilities {
  MatrixXd pi;   // n x J
  double loglik;
};

RowProbabilities multinomial_probabilities(const MatrixXd& X, const VectorXi& y, const VectorXd& offset,
                                           const MatrixXd& theta /* J x p */) {
  const Index n = X.rows();
  const Index J = theta.rows();
  MatrixXd eta = (X * theta.transpose()).colwise() + offset;  // n x J
  MatrixXd pi(n, J);
  long double ll = 0.0L;
  for (Index i = 0; i < n; ++i) {
    double m = 0.0;
    for (Index j = 0; j < J; ++j) m = std::max(m, eta(i, j));
    double denom = std::exp(-m);
    for (Index j = 0; j < J; ++j) denom += std::exp(eta(i, j) - m);
    for (Index j = 0; j < J; ++j) pi(i, j) = std::exp(eta(i, j) - m) / denom;
    const double log_norm = m + std::log(denom);
    ll += (y(i) > 0 ? eta(i, y(i) - 1) : 0.0) - log_norm;
  }
  return {std::move(pi), static_cast<double>(ll)};
}

MatrixXd unstack(const VectorXd& theta, Index J, Index p) {
  MatrixXd out(J, p);
  for (Index j = 0; j < J; ++j) out.row(j) = theta.segment(j * p, p).transpose();
  return out;
}

VectorXd stack(const MatrixXd& theta) {
  const Index J = theta.rows(), p = theta.cols();
  VectorXd out(J * p);
  for (Index j = 0; j < J; ++j) out.segment(j * p, p) = theta.row(j).transpose();
  return out;
}

VectorXd score_from(const MatrixXd& X, const VectorXi& y, const MatrixXd& pi) {
  const Index J = pi.cols(), p = X.cols();
  VectorXd score(J * p);
  for (Index j = 0; j < J; ++j) {
    VectorXd resid = -pi.col(j);
    for (Index i = 0; i < y.size(); ++i)
      if (y(i) == j + 1) resid(i) += 1.0;
    score.segment(j * p, p) = X.transpose() * resid;
  }
  return score;
}

MatrixXd information_from(const MatrixXd& X, const MatrixXd& pi) {
  const Index J = pi.cols(), p = X.cols();
  MatrixXd info(J * p, J * p);
  for (Index j = 0; j < J; ++j) {
    info.block(j * p, j * p, p, p) = weighted_gram(X, (pi.col(j).array() * (1.0 - pi.col(j).array())).matrix());
    for (Index k = 0; k < j; ++k) {
      const MatrixXd block = -weighted_cross(X, (pi.col(j).array() * pi.col(k).array()).matrix());
      info.block(j * p, k * p, p, p) = block;
      info.block(k * p, j * p, p, p) = block.transpose();
    }
  }
  return info;
}

// At a genuine optimum the next Newton step vanishes; along a separating direction it stays O(1).
void check_separation(const VectorXd& next_step, const VectorXd& theta, const FitOptions& options) {
  const double scale = std::max(1.0, theta.cwiseAbs().maxCoeff());
  if (next_step.cwiseAbs().maxCoeff() > options.separation_step * scale)
    fail(ErrorKind::numerical, "complete separation: fitted probabilities collapse to 0 or 1 and the MLE does not exist");
}

}  // namespace

std::vector<std::size_t> rank_deficient_columns(const MatrixXd& X) {
  const Index p = X.cols();
  VectorXd norms = X.colwise().norm().transpose();
  for (Index c = 0; c < p; ++c)
    if (norms(c) == 0.0) norms(c) = 1.0;
  const MatrixXd Xn = X * norms.cwiseInverse().asDiagonal();
  MatrixXd gram = MatrixXd::Zero(p, p);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(Xn.transpose());
  gram = gram.selfadjointView<Eigen::Lower>();
  Eigen::ColPivHouseholderQR<MatrixXd> qr(gram);
  qr.setThreshold(1e-11);
  std::vector<std::size_t> offending;
  for (Index k = qr.rank(); k < p; ++k) offending.push_back(static_cast<std::size_t>(qr.colsPermutation().indices()(k)));
  std::sort(offending.begin(), offending.end());
  return offending;
}

GlmFit fit_logistic_offset(const MatrixXd& X, const VectorXi& y, const VectorXd& offset, const FitOptions& options) {
  require_shapes(X, y, offset);
  Index events = 0;
  for (Index i = 0; i < y.size(); ++i) {
    if (y(i) != 0 && y(i) != 1) fail(ErrorKind::data, "logistic response must be 0/1");
    events += y(i);
  }
  if (events == 0 || events == y.size()) fail(ErrorKind::data, "logistic response needs both classes");
  const Index p = X.cols();
  const double n = static_cast<double>(X.rows());

  VectorXd theta = VectorXd::Zero(p);
  if (const auto ic = intercept_column(X)) {
    const double frac = static_cast<double>(events) / n;
    theta(*ic) = std::log(frac / (1.0 - frac)) - offset.mean();
  }
  VectorXd eta = X * theta + offset;
  double ll = logistic_loglik(eta, y);

  GlmFit fit;
  fit.loglik_trace.push_back(ll);
  VectorXd prob(X.rows()), weight(X.rows());
  auto refresh = [&] {
    for (Index i = 0; i < X.rows(); ++i) {
      prob(i) = sigmoid(eta(i));
      weight(i) = prob(i) * (1.0 - prob(i));
    }
  };
  refresh();
  VectorXd score = X.transpose() * (y.cast<double>() - prob);
  bool converged = false;
  int iteration = 0;
  while (iteration < options.max_iterations) {
    ++iteration;
    const VectorXd delta = factor_spd(weighted_gram(X, weight), options.jitter).solve(score);
    double step = 1.0;
    bool accepted = false;
    for (int h = 0; h <= options.max_halvings; ++h, step *= 0.5) {
      const VectorXd candidate = theta + step * delta;
      const VectorXd eta_c = X * candidate + offset;
      const double ll_c = logistic_loglik(eta_c, y);
      if (std::isfinite(ll_c) && ll_c >= ll) {
        theta = candidate;
        eta = eta_c;
        accepted = true;
        break;
      }
    }
    const double previous = ll;
    if (accepted) {
      ll = logistic_loglik(eta, y);
      fit.loglik_trace.push_back(ll);
      refresh();
      score = X.transpose() * (y.cast<double>() - prob);
    }
    const double gmax = score.cwiseAbs().maxCoeff();
    if (theta.norm() >= options.separation_norm && gmax > options.score_tolerance)
      fail(ErrorKind::numerical, "complete separation: coefficient norm diverged with a nonzero gradient");
    if (gmax <= options.score_tolerance && deviance_settled(-2.0 * previous, -2.0 * ll, options.deviance_tolerance)) {
      const VectorXd next = factor_spd(weighted_gram(X, weight), options.jitter).solve(score);
      check_separation(next, theta, options);
      converged = true;
      break;
    }
    if (!accepted) break;  // no ascent possible from here
  }

  fit.coefficients = theta.transpose();
  fit.covariance = factor_spd(weighted_gram(X, weight), options.jitter).solve(MatrixXd::Identity(p, p));
  fit.covariance = (0.5 * (fit.covariance + fit.covariance.transpose())).eval();
  fit.stats.deviance = -2.0 * ll;
  fit.stats.null_deviance = null_deviance(y, 1);
  fit.stats.aic = fit.stats.deviance + 2.0 * static_cast<double>(p);
  fit.stats.iterations = iteration;
  fit.stats.converged = converged;
  fit.stats.gradient_norm = score.cwiseAbs().maxCoeff();
  fit.stats.n_obs = static_cast<std::size_t>(X.rows());
  return fit;
}

double multinomial_loglik(const MatrixXd& X, const VectorXi& y, const VectorXd& offset, const VectorXd& theta,
                          int n_causes) {
  return multinomial_probabilities(X, y, offset, unstack(theta, n_causes, X.cols())).loglik;
}

VectorXd multinomial_score(const MatrixXd& X, const VectorXi& y, const VectorXd& offset, const VectorXd& theta,
                           int n_causes) {
  const auto probs = multinomial_probabilities(X, y, offset, unstack(theta, n_causes, X.cols()));
  return score_from(X, y, probs.pi);
}

MatrixXd multinomial_information(const MatrixXd& X, const VectorXd& offset, const VectorXd& theta, int n_causes) {
  const VectorXi dummy = VectorXi::Zero(X.rows());
  const auto probs = multinomial_probabilities(X, dummy, offset, unstack(theta, n_causes, X.cols()));
  return information_from(X, probs.pi);
}

GlmFit fit_multinomial_offset(const MatrixXd& X, const VectorXi& y, const VectorXd& offset, int n_causes,
                              const FitOptions& options) {
  require_shapes(X, y, offset);
  if (n_causes < 1) fail(ErrorKind::invalid_argument, "multinomial fit needs at least one cause");
  std::vector<Index> counts(static_cast<std::size_t>(n_causes) + 1, 0);
  for (Index i = 0; i < y.size(); ++i) {
    if (y(i) < 0 || y(i) > n_causes) fail(ErrorKind::data, "response outside 0..J");
    ++counts[static_cast<std::size_t>(y(i))];
  }
  for (std::size_t j = 0; j < counts.size(); ++j)
    if (counts[j] == 0) fail(ErrorKind::data, "class " + std::to_string(j) + " has no observations");

  const Index p = X.cols();
  const Index J = n_causes;
  MatrixXd theta = MatrixXd::Zero(J, p);
  if (const auto ic = intercept_column(X))
    for (Index j = 0; j < J; ++j)
      theta(j, *ic) = std::log(static_cast<double>(counts[static_cast<std::size_t>(j + 1)]) /
                               static_cast<double>(counts[0])) - offset.mean();

  auto probs = multinomial_probabilities(X, y, offset, theta);
  double ll = probs.loglik;
  GlmFit fit;
  fit.loglik_trace.push_back(ll);
  VectorXd score = score_from(X, y, probs.pi);
  bool converged = false;
  int iteration = 0;
  while (iteration < options.max_iterations) {
    ++iteration;
    const VectorXd delta = factor_spd(information_from(X, probs.pi), options.jitter).solve(score);
    const VectorXd base = stack(theta);
    double step = 1.0;
    bool accepted = false;
    for (int h = 0; h <= options.max_halvings; ++h, step *= 0.5) {
      const MatrixXd candidate = unstack(base + step * delta, J, p);
      auto cand = multinomial_probabilities(X, y, offset, candidate);
      if (std::isfinite(cand.loglik) && cand.loglik >= ll) {
        theta = candidate;
        probs = std::move(cand);
        accepted = true;
        break;
      }
    }
    const double previous = ll;
    if (accepted) {
      ll = probs.loglik;
      fit.loglik_trace.push_back(ll);
      score = score_from(X, y, probs.pi);
    }
    const double gmax = score.cwiseAbs().maxCoeff();
    if (theta.norm() >= options.separation_norm && gmax > options.score_tolerance)
      fail(ErrorKind::numerical, "complete separation: coefficient norm diverged with a nonzero gradient");
    if (gmax <= options.score_tolerance && deviance_settled(-2.0 * previous, -2.0 * ll, options.deviance_tolerance)) {
      const VectorXd next = factor_spd(information_from(X, probs.pi), options.jitter).solve(score);
      check_separation(next, stack(theta), options);
      converged = true;
      break;
    }
    if (!accepted) break;
  }

  const Index k = J * p;
  fit.coefficients = theta;
  fit.covariance = factor_spd(information_from(X, probs.pi), options.jitter).solve(MatrixXd::Identity(k, k));
  fit.covariance = (0.5 * (fit.covariance + fit.covariance.transpose())).eval();
  fit.stats.deviance = -2.0 * ll;
  fit.stats.null_deviance = null_deviance(y, n_causes);
  fit.stats.aic = fit.stats.deviance + 2.0 * static_cast<double>(k);
  fit.stats.iterations = iteration;
  fit.stats.converged = converged;
  fit.stats.gradient_norm = score.cwiseAbs().maxCoeff();
  fit.stats.n_obs = static_cast<std::size_t>(X.rows());
  return fit;
}

double HazardModel::std_error(int cause, std::size_t column) const {
  const auto k = static_cast<Index>(static_cast<std::size_t>(cause - 1) * n_columns() + column);
  if (covariance.rows() <= k) return 0.0;
  return std::sqrt(std::max(covariance(k, k), 0.0));
}

std::uint64_t data_fingerprint(const PersonMomentTable& table) {
  std::uint64_t h = fingerprint_bytes(nullptr, 0);
  const std::uint64_t n = table.size();
  h = fingerprint_bytes(&n, sizeof n, h);
  h = fingerprint_bytes(table.moment_times.data(), table.moment_times.size() * sizeof(double), h);
  h = fingerprint_bytes(table.event_indicators.data(), table.event_indicators.size() * sizeof(int), h);
  h = fingerprint_bytes(table.offsets.data(), table.offsets.size() * sizeof(double), h);
  for (const auto& id : table.subject_ids) h = fingerprint_bytes(id.data(), id.size() + 1, h);
  return h;
}

HazardModel fit_hazard(const PersonMomentTable& table, const ModelSpec& requested, const FitOptions& options) {
  if (table.size() == 0) fail(ErrorKind::data, "person-moment table is empty");
  const ModelSpec spec = resolve_spec(requested, table);
  const DesignMatrix dm = build_design_matrix(table, spec);
  const auto bad = rank_deficient_columns(dm.X);
  if (!bad.empty()) {
    std::string names;
    for (auto c : bad) names += (names.empty() ? "" : ", ") + dm.column_names[c];
    fail(ErrorKind::data, "design matrix is rank deficient; offending columns: " + names);
  }
  int J = 0;
  for (Index i = 0; i < dm.y.size(); ++i) J = std::max(J, dm.y(i));
  J = std::max(J, table.n_causes);
  const GlmFit fit = J == 1 ? fit_logistic_offset(dm.X, dm.y, dm.offset, options)
                            : fit_multinomial_offset(dm.X, dm.y, dm.offset, J, options);
  HazardModel model;
  model.causes = J;
  model.spec = spec;
  model.column_names = dm.column_names;
  model.coefficients = fit.coefficients;
  model.covariance = fit.covariance;
  model.offset_value = table.offsets.front();
  model.fit = fit.stats;
  model.data_fingerprint = data_fingerprint(table);
  return model;
}

HazardModel make_model(const ModelSpec& resolved, const MatrixXd& coefficients) {
  HazardModel model;
  model.spec = resolved;
  model.column_names = design_column_names(resolved);
  if (coefficients.cols() != static_cast<Index>(model.column_names.size()))
    fail(ErrorKind::invalid_argument, "coefficient matrix width does not match the model spec");
  model.causes = static_cast<int>(coefficients.rows());
  model.coefficients = coefficients;
  const auto k = static_cast<Index>(model.n_parameters());
  model.covariance = MatrixXd::Zero(k, k);
  model.fit.converged = true;
  return model;
}

std::vector<CoefficientRow> wald_ci(const HazardModel& model, double level) {
  if (!(level > 0.0 && level < 1.0)) fail(ErrorKind::invalid_argument, "confidence level must lie in (0, 1)");
  const double z = normal_quantile(0.5 * (1.0 + level));
  std::vector<CoefficientRow> rows;
  for (int j = 1; j <= model.causes; ++j) {
    for (std::size_t c = 0; c < model.n_columns(); ++c) {
      CoefficientRow row;
      row.name = model.column_names[c];
      row.cause = j;
      row.estimate = model.coefficients(j - 1, static_cast<Index>(c));
      row.std_error = model.std_error(j, c);
      row.z = row.std_error > 0.0 ? row.estimate / row.std_error : NAN;
      row.p_value = row.std_error > 0.0 ? two_sided_normal_p(row.z) : NAN;
      row.lower = row.estimate - z * row.std_error;
      row.upper = row.estimate + z * row.std_error;
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<HazardRatioPoint> hazard_ratio_curve(const HazardModel& model, const Profile& a, const Profile& b,
                                                 std::span<const double> grid, int cause, double level) {
  if (cause < 1 || cause > model.causes) fail(ErrorKind::invalid_argument, "cause index out of range");
  if (!(level > 0.0 && level < 1.0)) fail(ErrorKind::invalid_argument, "confidence level must lie in (0, 1)");
  const double z = normal_quantile(0.5 * (1.0 + level));
  const auto p = static_cast<Index>(model.n_columns());
  const VectorXd theta = model.coefficients.row(cause - 1).transpose();
  const MatrixXd sigma = model.covariance.rows() >= cause * p
                             ? MatrixXd(model.covariance.block((cause - 1) * p, (cause - 1) * p, p, p))
                             : MatrixXd::Zero(p, p);
  std::vector<HazardRatioPoint> out;
  out.reserve(grid.size());
  for (double t : grid) {
    if (!(t >= 0.0) || !std::isfinite(t)) fail(ErrorKind::invalid_argument, "hazard-ratio time outside [0, inf)");
    const VectorXd c = design_row(model.spec, t, a) - design_row(model.spec, t, b);
    const double log_hr = c.dot(theta);
    const double sd = std::sqrt(std::max(c.dot(sigma * c), 0.0));
    out.push_back({t, std::exp(log_hr), std::exp(log_hr - z * sd), std::exp(log_hr + z * sd)});
  }
  return out;
}

LrtResult lrt(const HazardModel& nested, const HazardModel& full) {
  if (nested.causes != full.causes) fail(ErrorKind::invalid_argument, "models have different numbers of causes");
  if (nested.data_fingerprint != full.data_fingerprint)
    fail(ErrorKind::invalid_argument, "models were fitted to different person-moment tables (data fingerprints differ)");
  const std::set<std::string> full_cols(full.column_names.begin(), full.column_names.end());
  for (const auto& c : nested.column_names)
    if (!full_cols.count(c)) fail(ErrorKind::invalid_argument, "models are not nested: '" + c + "' missing from the full model");
  LrtResult r;
  r.df = static_cast<int>(full.n_parameters()) - static_cast<int>(nested.n_parameters());
  r.statistic = std::max(0.0, nested.fit.deviance - full.fit.deviance);
  r.p_value = r.df > 0 ? chi_square_upper_tail(r.statistic, r.df) : 1.0;
  return r;
}

double aic(const HazardModel& model) {
  return model.fit.deviance + 2.0 * static_cast<double>(model.n_parameters());
}

namespace {

std::string format_p(double p) {
  char buf[32];
  if (std::isnan(p)) return "NA";
  if (p < 2e-16) return "< 2e-16";
  std::snprintf(buf, sizeof buf, p < 1e-4 ? "%.1e" : "%.4f", p);
  return buf;
}

}  // namespace

std::string summary_text(const HazardModel& model) {
  std::ostringstream out;
  const auto rows = wald_ci(model, 0.95);
  std::size_t width = 12;
  for (const auto& r : rows) {
    const std::string name = model.causes > 1 ? "cause" + std::to_string(r.cause) + ":" + r.name : r.name;
    width = std::max(width, name.size() + 2);
  }
  char line[256];
  out << "Coefficients:\n";
  std::snprintf(line, sizeof line, "%-*s %10s %10s %8s %9s\n", static_cast<int>(width), "", "Estimate",
                "Std. Error", "z value", "Pr(>|z|)");
  out << line;
  for (const auto& r : rows) {
    const std::string name = model.causes > 1 ? "cause" + std::to_string(r.cause) + ":" + r.name : r.name;
    std::snprintf(line, sizeof line, "%-*s %10.4f %10.4f %8.2f %9s\n", static_cast<int>(width), name.c_str(),
                  r.estimate, r.std_error, r.z, format_p(r.p_value).c_str());
    out << line;
  }
  const auto n = static_cast<long long>(model.fit.n_obs);
  const auto k = static_cast<long long>(model.n_parameters());
  out << "\n";
  if (model.penalty) {
    std::snprintf(line, sizeof line, "Elastic net: alpha = %g, lambda = %.6g\n", model.penalty->alpha,
                  model.penalty->lambda);
    out << line;
  }
  std::snprintf(line, sizeof line, "    Null deviance: %.1f  on %lld  degrees of freedom\n", model.fit.null_deviance,
                n - model.causes);
  out << line;
  std::snprintf(line, sizeof line, "Residual deviance: %.1f  on %lld  degrees of freedom\n", model.fit.deviance, n - k);
  out << line;
  std::snprintf(line, sizeof line, "AIC: %.2f\n\n", aic(model));
  out << line;
  std::snprintf(line, sizeof line, "Number of Newton iterations: %d%s\n", model.fit.iterations,
                model.fit.converged ? "" : " (not converged)");
  out << line;
  return out.str();
}

}  // namespace casebase
