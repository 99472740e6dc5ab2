#include "casebase/simulate.hpp"

#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include "json.hpp"

#include "casebase/error.hpp"
#include "casebase/random.hpp"

namespace casebase {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

HazardFamily parse_family(const std::string& text) {
  if (text == "exponential") return HazardFamily::exponential;
  if (text == "gompertz") return HazardFamily::gompertz;
  if (text == "weibull") return HazardFamily::weibull;
  fail(ErrorKind::invalid_argument, "unknown hazard family '" + text + "'");
}

SamplerKind parse_sampler(const std::string& text) {
  if (text == "bernoulli") return SamplerKind::bernoulli;
  if (text == "normal") return SamplerKind::normal;
  if (text == "uniform") return SamplerKind::uniform;
  fail(ErrorKind::invalid_argument, "unknown covariate distribution '" + text + "'");
}

const char* sampler_name(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::bernoulli: return "bernoulli";
    case SamplerKind::normal: return "normal";
    case SamplerKind::uniform: return "uniform";
  }
  return "bernoulli";
}

double number_or(const json& j, const char* key, double fallback) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  if (!it->is_number()) fail(ErrorKind::invalid_argument, std::string("truth field '") + key + "' must be a number");
  return it->get<double>();
}

}  // namespace

const char* to_string(HazardFamily family) noexcept {
  switch (family) {
    case HazardFamily::exponential: return "exponential";
    case HazardFamily::gompertz: return "gompertz";
    case HazardFamily::weibull: return "weibull";
  }
  return "exponential";
}

double CauseTruth::baseline_hazard(double t) const {
  switch (family) {
    case HazardFamily::exponential: return rate;
    case HazardFamily::gompertz: return std::exp(a + b * t);
    case HazardFamily::weibull: return shape / scale * std::pow(t / scale, shape - 1.0);
  }
  return 0.0;
}

double CauseTruth::baseline_cumulative_hazard(double t) const {
  switch (family) {
    case HazardFamily::exponential: return rate * t;
    case HazardFamily::gompertz: return b == 0.0 ? std::exp(a) * t : std::exp(a) * std::expm1(b * t) / b;
    case HazardFamily::weibull: return std::pow(t / scale, shape);
  }
  return 0.0;
}

double CauseTruth::inverse_cumulative_hazard(double h) const {
  switch (family) {
    case HazardFamily::exponential: return h / rate;
    case HazardFamily::gompertz: {
      const double z = h * std::exp(-a);
      if (b == 0.0) return z;
      const double arg = b * z;
      if (arg <= -1.0) return kInf;
      return std::log1p(arg) / b;
    }
    case HazardFamily::weibull: return scale * std::pow(h, 1.0 / shape);
  }
  return kInf;
}

double CauseTruth::linear_predictor(const Profile& x) const {
  double eta = 0.0;
  for (const auto& [name, beta] : log_hr) {
    const auto it = x.find(name);
    if (it == x.end()) fail(ErrorKind::invalid_argument, "profile lacks covariate '" + name + "'");
    const auto* v = std::get_if<double>(&it->second);
    if (!v) fail(ErrorKind::invalid_argument, "covariate '" + name + "' must be numeric");
    eta += beta * *v;
  }
  return eta;
}

void TruthSpec::validate() const {
  if (causes.empty()) fail(ErrorKind::invalid_argument, "truth needs at least one cause");
  if (n == 0) fail(ErrorKind::invalid_argument, "truth needs n >= 1");
  if (tau && !(*tau > 0.0)) fail(ErrorKind::invalid_argument, "tau must be positive");
  if (censoring_rate && !(*censoring_rate > 0.0)) fail(ErrorKind::invalid_argument, "censoring rate must be positive");
  for (const auto& c : causes) {
    switch (c.family) {
      case HazardFamily::exponential:
        if (!(c.rate > 0.0)) fail(ErrorKind::invalid_argument, "exponential rate must be positive");
        break;
      case HazardFamily::gompertz:
        if (!std::isfinite(c.a) || !std::isfinite(c.b)) fail(ErrorKind::invalid_argument, "gompertz a, b must be finite");
        break;
      case HazardFamily::weibull:
        if (!(c.shape > 0.0) || !(c.scale > 0.0))
          fail(ErrorKind::invalid_argument, "weibull shape and scale must be positive");
        break;
    }
    for (const auto& [name, beta] : c.log_hr) {
      bool known = false;
      for (const auto& s : covariates) known = known || s.name == name;
      if (!known) fail(ErrorKind::invalid_argument, "log_hr refers to unknown covariate '" + name + "'");
      if (!std::isfinite(beta)) fail(ErrorKind::invalid_argument, "log_hr values must be finite");
    }
  }
  for (std::size_t k = 0; k < covariates.size(); ++k) {
    const auto& s = covariates[k];
    if (s.name.empty()) fail(ErrorKind::invalid_argument, "covariate sampler needs a name");
    for (std::size_t m = 0; m < k; ++m)
      if (covariates[m].name == s.name) fail(ErrorKind::invalid_argument, "duplicate covariate '" + s.name + "'");
    if (s.kind == SamplerKind::bernoulli && !(s.p >= 0.0 && s.p <= 1.0))
      fail(ErrorKind::invalid_argument, "bernoulli p must lie in [0, 1]");
    if (s.kind == SamplerKind::normal && !(s.sd > 0.0)) fail(ErrorKind::invalid_argument, "normal sd must be positive");
    if (s.kind == SamplerKind::uniform && !(s.max > s.min))
      fail(ErrorKind::invalid_argument, "uniform max must exceed min");
  }
}

TruthSpec truth_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::invalid_argument, std::string("truth spec is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorKind::invalid_argument, "truth spec must be a JSON object");
  TruthSpec spec;
  try {
    spec.n = j.value("n", std::size_t{1000});
    spec.seed = j.value("seed", std::uint64_t{1});
    if (j.contains("tau") && !j["tau"].is_null()) spec.tau = j["tau"].get<double>();
    if (j.contains("censoring_rate") && !j["censoring_rate"].is_null())
      spec.censoring_rate = j["censoring_rate"].get<double>();
    for (const auto& c : j.at("causes")) {
      CauseTruth cause;
      cause.family = parse_family(c.at("family").get<std::string>());
      cause.rate = number_or(c, "rate", 1.0);
      cause.a = number_or(c, "a", 0.0);
      cause.b = number_or(c, "b", 0.0);
      cause.shape = number_or(c, "shape", 1.0);
      cause.scale = number_or(c, "scale", 1.0);
      if (c.contains("log_hr")) cause.log_hr = c["log_hr"].get<std::map<std::string, double>>();
      spec.causes.push_back(std::move(cause));
    }
    if (j.contains("covariates"))
      for (const auto& c : j["covariates"]) {
        CovariateSampler s;
        s.name = c.at("name").get<std::string>();
        s.kind = parse_sampler(c.value("dist", std::string("bernoulli")));
        s.p = number_or(c, "p", 0.5);
        s.mean = number_or(c, "mean", 0.0);
        s.sd = number_or(c, "sd", 1.0);
        s.min = number_or(c, "min", 0.0);
        s.max = number_or(c, "max", 1.0);
        spec.covariates.push_back(std::move(s));
      }
  } catch (const json::exception& e) {
    fail(ErrorKind::invalid_argument, std::string("malformed truth spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

std::string truth_to_json(const TruthSpec& spec) {
  json j;
  j["n"] = spec.n;
  j["seed"] = spec.seed;
  j["tau"] = spec.tau ? json(*spec.tau) : json(nullptr);
  j["censoring_rate"] = spec.censoring_rate ? json(*spec.censoring_rate) : json(nullptr);
  j["causes"] = json::array();
  for (const auto& c : spec.causes) {
    json e;
    e["family"] = to_string(c.family);
    switch (c.family) {
      case HazardFamily::exponential: e["rate"] = c.rate; break;
      case HazardFamily::gompertz: e["a"] = c.a; e["b"] = c.b; break;
      case HazardFamily::weibull: e["shape"] = c.shape; e["scale"] = c.scale; break;
    }
    e["log_hr"] = c.log_hr;
    j["causes"].push_back(std::move(e));
  }
  j["covariates"] = json::array();
  for (const auto& s : spec.covariates) {
    json e;
    e["name"] = s.name;
    e["dist"] = sampler_name(s.kind);
    switch (s.kind) {
      case SamplerKind::bernoulli: e["p"] = s.p; break;
      case SamplerKind::normal: e["mean"] = s.mean; e["sd"] = s.sd; break;
      case SamplerKind::uniform: e["min"] = s.min; e["max"] = s.max; break;
    }
    j["covariates"].push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

SurvivalDataset simulate_dataset(const TruthSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n;
  const std::size_t K = spec.covariates.size();
  SurvivalDataset data;
  data.subject_ids.resize(n);
  data.followup_times.resize(n);
  data.event_types.resize(n);
  data.n_causes = static_cast<int>(spec.causes.size());
  std::vector<std::vector<double>> cov(K, std::vector<double>(n));

  for (std::size_t i = 0; i < n; ++i) {
    CounterRng rng(spec.seed, mix64(streams::simulation ^ mix64(i)));
    Profile x;
    for (std::size_t k = 0; k < K; ++k) {
      const auto& s = spec.covariates[k];
      double v = 0.0;
      switch (s.kind) {
        case SamplerKind::bernoulli: v = rng.bernoulli(s.p) ? 1.0 : 0.0; break;
        case SamplerKind::normal: v = s.mean + s.sd * rng.normal(); break;
        case SamplerKind::uniform: v = s.min + (s.max - s.min) * rng.uniform(); break;
      }
      cov[k][i] = v;
      x.emplace(s.name, v);
    }
    double best = kInf;
    int cause = 0;
    for (std::size_t j = 0; j < spec.causes.size(); ++j) {
      const auto& c = spec.causes[j];
      const double h = rng.exponential() * std::exp(-c.linear_predictor(x));
      const double t = c.inverse_cumulative_hazard(h);
      if (t < best) {
        best = t;
        cause = static_cast<int>(j) + 1;
      }
    }
    double end = spec.tau.value_or(kInf);
    if (spec.censoring_rate) end = std::min(end, rng.exponential() / *spec.censoring_rate);
    if (best <= end) {
      data.followup_times[i] = best;
      data.event_types[i] = cause;
    } else {
      data.followup_times[i] = end;
      data.event_types[i] = 0;
    }
    if (!std::isfinite(data.followup_times[i]))
      fail(ErrorKind::invalid_argument, "simulated follow-up is unbounded; set tau or a censoring rate");
    data.subject_ids[i] = std::to_string(i + 1);
  }
  for (std::size_t k = 0; k < K; ++k)
    data.covariates.columns.push_back(CovariateColumn::numeric(spec.covariates[k].name, std::move(cov[k])));
  double max_time = 0.0;
  for (double t : data.followup_times) max_time = std::max(max_time, t);
  data.tau = spec.tau.value_or(max_time);
  data.validate(false);
  return data;
}

RateEstimate exponential_mle(const SurvivalDataset& data) {
  const auto events = static_cast<double>(data.total_events());
  if (events == 0.0) fail(ErrorKind::data, "exponential MLE needs at least one event");
  double person_time = 0.0;
  for (double t : data.followup_times) person_time += t;
  return RateEstimate{events / person_time, 1.0 / std::sqrt(events)};
}

WeibullCoefficients weibull_truth_coefficients(double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0)) fail(ErrorKind::invalid_argument, "weibull shape and scale must be positive");
  return WeibullCoefficients{std::log(shape / scale) - (shape - 1.0) * std::log(scale), shape - 1.0};
}

double truth_survival(const TruthSpec& spec, double t, const Profile& x) {
  double H = 0.0;
  for (const auto& c : spec.causes) H += std::exp(c.linear_predictor(x)) * c.baseline_cumulative_hazard(t);
  return std::exp(-H);
}

double truth_cif(const TruthSpec& spec, int cause, double t, const Profile& x) {
  if (cause < 1 || cause > static_cast<int>(spec.causes.size()))
    fail(ErrorKind::invalid_argument, "cause out of range");
  if (t <= 0.0) return 0.0;
  const auto& c = spec.causes[static_cast<std::size_t>(cause - 1)];
  const double scale = std::exp(c.linear_predictor(x));
  auto f = [&](double u) { return scale * c.baseline_hazard(u) * truth_survival(spec, u, x); };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, t, 15, 1e-14);
}

}  // namespace casebase
