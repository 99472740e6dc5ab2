#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "casebase/dataset.hpp"
#include "casebase/glm.hpp"
#include "casebase/table.hpp"

namespace casebase {

enum class IntegrationMethod { trapezoid, monte_carlo };

const char* to_string(IntegrationMethod method) noexcept;
IntegrationMethod parse_integration_method(std::string_view text);

struct RiskOptions {
  IntegrationMethod method = IntegrationMethod::trapezoid;
  int refinement = 100;  // trapezoid subintervals per user grid interval
  std::size_t n_samples = 10000;
  std::uint64_t seed = 1;
};

struct NamedProfile {
  std::string label;
  Profile values;
};

/// Cumulative incidence on a grid. Values are laid out [time][profile][cause].
struct RiskCurve {
  std::vector<double> times;
  std::vector<std::string> labels;
  int causes = 1;
  RiskOptions options;
  std::vector<double> cif;
  std::vector<double> survival;      // [time][profile]
  std::vector<double> cumhaz_se;     // monte_carlo only
  std::vector<double> survival_se;   // monte_carlo only

  std::size_t n_profiles() const noexcept { return labels.size(); }
  double ci(std::size_t t, std::size_t profile, int cause = 1) const {
    return cif[(t * n_profiles() + profile) * static_cast<std::size_t>(causes) + static_cast<std::size_t>(cause - 1)];
  }
  double surv(std::size_t t, std::size_t profile) const { return survival[t * n_profiles() + profile]; }
};

/// Cause-specific hazards at t, without the sampling offset.
Eigen::VectorXd hazard_at(const HazardModel& model, double t, const Profile& profile);

/// Grid must start at 0, be finite, and strictly increase.
void validate_grid(std::span<const double> grid);

/// "start:stop:count" evenly spaced, count >= 2.
std::vector<double> parse_grid(std::string_view text);

struct SurvivalEstimate {
  std::vector<double> survival;
  std::vector<double> cumulative_hazard;
  std::vector<double> cumhaz_se;  // zeros for trapezoid
};

/// S(t) = exp(-integral of the summed hazard).
SurvivalEstimate survival_curve(const HazardModel& model, const Profile& profile, std::span<const double> grid,
                                const RiskOptions& options = {});

/// CI(t) = 1 - S(t); single-event models.
RiskCurve cif_single(const HazardModel& model, const std::vector<NamedProfile>& profiles,
                     std::span<const double> grid, const RiskOptions& options = {});

/// CI_j(t) = integral of lambda_j S; models with two or more causes.
RiskCurve cif_competing(const HazardModel& model, const std::vector<NamedProfile>& profiles,
                        std::span<const double> grid, const RiskOptions& options = {});

/// Dispatches on the number of causes.
RiskCurve absolute_risk(const HazardModel& model, const std::vector<NamedProfile>& profiles,
                        std::span<const double> grid, const RiskOptions& options = {});

/// One profile per row; an optional "label" column names the profiles.
std::vector<NamedProfile> profiles_from_raw(const RawTable& raw);
std::vector<NamedProfile> load_profiles(const std::string& path);

Table risk_table(const RiskCurve& curve);

}  // namespace casebase
