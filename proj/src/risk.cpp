#include "casebase/risk.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "casebase/error.hpp"
#include "casebase/parallel.hpp"
#include "casebase/random.hpp"

namespace casebase {

using Eigen::Index;
using Eigen::VectorXd;

const char* to_string(IntegrationMethod method) noexcept {
  return method == IntegrationMethod::trapezoid ? "trapezoid" : "monte_carlo";
}

IntegrationMethod parse_integration_method(std::string_view text) {
  if (text == "trapezoid" || text == "trap") return IntegrationMethod::trapezoid;
  if (text == "monte_carlo" || text == "montecarlo" || text == "mc" || text == "mont")
    return IntegrationMethod::monte_carlo;
  fail(ErrorKind::invalid_argument, "unknown integration method '" + std::string(text) + "'");
}

VectorXd hazard_at(const HazardModel& model, double t, const Profile& profile) {
  if (!(t >= 0.0) || !std::isfinite(t)) fail(ErrorKind::invalid_argument, "hazard time must be finite and >= 0");
  const VectorXd x = design_row(model.spec, t, profile);
  return (model.coefficients * x).array().exp();
}

void validate_grid(std::span<const double> grid) {
  if (grid.empty()) fail(ErrorKind::invalid_argument, "time grid is empty");
  if (grid.front() != 0.0) fail(ErrorKind::invalid_argument, "time grid must start at 0");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i])) fail(ErrorKind::invalid_argument, "time grid values must be finite");
    if (i > 0 && !(grid[i] > grid[i - 1])) fail(ErrorKind::invalid_argument, "time grid must be strictly increasing");
  }
}

std::vector<double> parse_grid(std::string_view text) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(':', start);
    parts.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  double lo = 0.0, hi = 0.0, count = 0.0;
  if (parts.size() != 3 || !parse_real(parts[0], lo) || !parse_real(parts[1], hi) || !parse_real(parts[2], count))
    fail(ErrorKind::invalid_argument, "grid must look like start:stop:count");
  if (count < 2.0 || count != std::floor(count)) fail(ErrorKind::invalid_argument, "grid count must be an integer >= 2");
  if (!(hi > lo)) fail(ErrorKind::invalid_argument, "grid stop must exceed start");
  const auto n = static_cast<std::size_t>(count);
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  grid.back() = hi;
  return grid;
}

namespace {

struct ProfileRisk {
  std::vector<double> survival;      // per grid point
  std::vector<double> cumhaz;        // per grid point
  std::vector<double> cumhaz_se;     // per grid point
  std::vector<double> cif;           // per grid point x cause
};

void check_options(const RiskOptions& options) {
  if (options.method == IntegrationMethod::trapezoid && options.refinement < 1)
    fail(ErrorKind::invalid_argument, "refinement must be at least 1");
  if (options.method == IntegrationMethod::monte_carlo && options.n_samples < 100)
    fail(ErrorKind::invalid_argument, "Monte Carlo integration needs at least 100 samples");
}

// Cause j receives the share lambda_j / lambda of each step's survival drop,
// so sum_j CI_j + S = 1 holds to roundoff and constant hazards are exact.
ProfileRisk trapezoid_profile(const HazardModel& model, const Profile& profile, std::span<const double> grid,
                              int refinement) {
  const auto J = static_cast<std::size_t>(model.causes);
  const std::size_t T = grid.size();
  ProfileRisk out;
  out.survival.assign(T, 1.0);
  out.cumhaz.assign(T, 0.0);
  out.cumhaz_se.assign(T, 0.0);
  out.cif.assign(T * J, 0.0);
  VectorXd lam_prev = hazard_at(model, grid[0], profile);
  double Lambda = 0.0;
  std::vector<double> ci(J, 0.0);
  for (std::size_t i = 1; i < T; ++i) {
    const double a = grid[i - 1];
    const double h = (grid[i] - a) / refinement;
    for (int k = 1; k <= refinement; ++k) {
      const double t = k == refinement ? grid[i] : a + h * k;
      const VectorXd lam = hazard_at(model, t, profile);
      const VectorXd step = 0.5 * h * (lam_prev + lam);
      const double total = step.sum();
      const double s_before = std::exp(-Lambda);
      Lambda += total;
      const double drop = s_before - std::exp(-Lambda);
      if (total > 0.0)
        for (std::size_t j = 0; j < J; ++j) ci[j] += step(static_cast<Index>(j)) / total * drop;
      lam_prev = lam;
    }
    out.cumhaz[i] = Lambda;
    out.survival[i] = std::exp(-Lambda);
    for (std::size_t j = 0; j < J; ++j) out.cif[i * J + j] = J == 1 ? -std::expm1(-Lambda) : ci[j];
  }
  return out;
}

// One shared sample U_k ~ Uniform(0, t_max] per profile; the cumulative hazard
// at t is t_max * mean(lambda(U) 1{U <= t}), which is monotone in t.
ProfileRisk monte_carlo_profile(const HazardModel& model, const Profile& profile, std::span<const double> grid,
                                const RiskOptions& options, std::size_t profile_index) {
  const auto J = static_cast<std::size_t>(model.causes);
  const std::size_t T = grid.size();
  const std::size_t n = options.n_samples;
  const double t_max = grid.back();
  CounterRng rng(options.seed, streams::monte_carlo);
  rng.seek(static_cast<std::uint64_t>(profile_index) * n);
  std::vector<double> u(n);
  for (auto& v : u) v = t_max * rng.uniform_open_low();
  std::sort(u.begin(), u.end());

  ProfileRisk out;
  out.survival.assign(T, 1.0);
  out.cumhaz.assign(T, 0.0);
  out.cumhaz_se.assign(T, 0.0);
  out.cif.assign(T * J, 0.0);
  const double dn = static_cast<double>(n);
  double sum = 0.0, sum_sq = 0.0, Lambda = 0.0;
  std::vector<double> ci(J, 0.0);
  std::size_t k = 0;
  for (std::size_t i = 1; i < T; ++i) {
    for (; k < n && u[k] <= grid[i]; ++k) {
      const VectorXd lam = hazard_at(model, u[k], profile);
      const double total = lam.sum();
      sum += total;
      sum_sq += total * total;
      const double s_before = std::exp(-Lambda);
      Lambda = t_max * sum / dn;
      const double drop = s_before - std::exp(-Lambda);
      if (total > 0.0)
        for (std::size_t j = 0; j < J; ++j) ci[j] += lam(static_cast<Index>(j)) / total * drop;
    }
    const double mean = sum / dn;
    const double var = std::max(0.0, (sum_sq / dn - mean * mean) * dn / (dn - 1.0));
    out.cumhaz[i] = Lambda;
    out.cumhaz_se[i] = t_max * std::sqrt(var / dn);
    out.survival[i] = std::exp(-Lambda);
    for (std::size_t j = 0; j < J; ++j) out.cif[i * J + j] = J == 1 ? -std::expm1(-Lambda) : ci[j];
  }
  return out;
}

ProfileRisk integrate(const HazardModel& model, const Profile& profile, std::span<const double> grid,
                      const RiskOptions& options, std::size_t profile_index) {
  return options.method == IntegrationMethod::trapezoid
             ? trapezoid_profile(model, profile, grid, options.refinement)
             : monte_carlo_profile(model, profile, grid, options, profile_index);
}

RiskCurve assemble(const HazardModel& model, const std::vector<NamedProfile>& profiles,
                   std::span<const double> grid, const RiskOptions& options) {
  validate_grid(grid);
  check_options(options);
  if (profiles.empty()) fail(ErrorKind::invalid_argument, "no profiles given");
  const std::size_t P = profiles.size();
  const std::size_t T = grid.size();
  const auto J = static_cast<std::size_t>(model.causes);
  std::vector<ProfileRisk> parts(P);
  parallel_for(P, [&](std::size_t p) { parts[p] = integrate(model, profiles[p].values, grid, options, p); });

  RiskCurve curve;
  curve.times.assign(grid.begin(), grid.end());
  curve.causes = model.causes;
  curve.options = options;
  for (const auto& prof : profiles) curve.labels.push_back(prof.label);
  curve.cif.assign(T * P * J, 0.0);
  curve.survival.assign(T * P, 1.0);
  if (options.method == IntegrationMethod::monte_carlo) {
    curve.cumhaz_se.assign(T * P, 0.0);
    curve.survival_se.assign(T * P, 0.0);
  }
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t p = 0; p < P; ++p) {
      curve.survival[t * P + p] = parts[p].survival[t];
      for (std::size_t j = 0; j < J; ++j) curve.cif[(t * P + p) * J + j] = parts[p].cif[t * J + j];
      if (options.method == IntegrationMethod::monte_carlo) {
        curve.cumhaz_se[t * P + p] = parts[p].cumhaz_se[t];
        curve.survival_se[t * P + p] = parts[p].survival[t] * parts[p].cumhaz_se[t];
      }
    }
  return curve;
}

}  // namespace

SurvivalEstimate survival_curve(const HazardModel& model, const Profile& profile, std::span<const double> grid,
                                const RiskOptions& options) {
  validate_grid(grid);
  check_options(options);
  ProfileRisk r = integrate(model, profile, grid, options, 0);
  return SurvivalEstimate{std::move(r.survival), std::move(r.cumhaz), std::move(r.cumhaz_se)};
}

RiskCurve cif_single(const HazardModel& model, const std::vector<NamedProfile>& profiles,
                     std::span<const double> grid, const RiskOptions& options) {
  if (model.causes != 1) fail(ErrorKind::invalid_argument, "single-event CIF needs a one-cause model");
  return assemble(model, profiles, grid, options);
}

RiskCurve cif_competing(const HazardModel& model, const std::vector<NamedProfile>& profiles,
                        std::span<const double> grid, const RiskOptions& options) {
  if (model.causes < 2) fail(ErrorKind::invalid_argument, "competing-risk CIF needs a model with two or more causes");
  return assemble(model, profiles, grid, options);
}

RiskCurve absolute_risk(const HazardModel& model, const std::vector<NamedProfile>& profiles,
                        std::span<const double> grid, const RiskOptions& options) {
  return model.causes == 1 ? cif_single(model, profiles, grid, options)
                           : cif_competing(model, profiles, grid, options);
}

std::vector<NamedProfile> profiles_from_raw(const RawTable& raw) {
  const auto label_col = raw.find("label");
  std::vector<NamedProfile> out;
  for (std::size_t r = 0; r < raw.rows.size(); ++r) {
    NamedProfile prof;
    prof.label = label_col >= 0 ? raw.rows[r][static_cast<std::size_t>(label_col)] : "p" + std::to_string(r + 1);
    for (std::size_t c = 0; c < raw.header.size(); ++c) {
      if (static_cast<std::ptrdiff_t>(c) == label_col) continue;
      const std::string& cell = raw.rows[r][c];
      double v = 0.0;
      if (parse_real(cell, v))
        prof.values.emplace(raw.header[c], v);
      else
        prof.values.emplace(raw.header[c], cell);
    }
    out.push_back(std::move(prof));
  }
  if (out.empty()) fail(ErrorKind::data, "profile file has no rows");
  return out;
}

std::vector<NamedProfile> load_profiles(const std::string& path) { return profiles_from_raw(read_table(path)); }

Table risk_table(const RiskCurve& curve) {
  Table t;
  t.add_column("time", curve.times);
  const std::size_t P = curve.n_profiles();
  const std::size_t T = curve.times.size();
  for (std::size_t p = 0; p < P; ++p) {
    const std::string& label = curve.labels[p];
    for (int j = 1; j <= curve.causes; ++j) {
      std::vector<double> col(T);
      for (std::size_t i = 0; i < T; ++i) col[i] = curve.ci(i, p, j);
      t.add_column(curve.causes == 1 ? "cif_" + label : "cif" + std::to_string(j) + "_" + label, std::move(col));
    }
    std::vector<double> s(T);
    for (std::size_t i = 0; i < T; ++i) s[i] = curve.surv(i, p);
    t.add_column("surv_" + label, std::move(s));
    if (!curve.survival_se.empty()) {
      std::vector<double> se(T);
      for (std::size_t i = 0; i < T; ++i) se[i] = curve.survival_se[i * P + p];
      t.add_column("se_" + label, std::move(se));
    }
  }
  return t;
}

}  // namespace casebase
