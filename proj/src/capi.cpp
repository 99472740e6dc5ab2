#include "casebase/casebase.h"

#include <cstring>
#include <new>
#include <sstream>
#include <string>

#include "casebase/error.hpp"
#include "casebase/glm.hpp"
#include "casebase/io.hpp"
#include "casebase/model_io.hpp"
#include "casebase/parallel.hpp"
#include "casebase/penalized.hpp"
#include "casebase/poptime.hpp"
#include "casebase/risk.hpp"
#include "casebase/simulate.hpp"
#include "casebase/table.hpp"

namespace cb = casebase;

struct cb_schema {
  cb::ColumnSchema value;
};
struct cb_dataset {
  cb::SurvivalDataset value;
};
struct cb_moments {
  cb::PersonMomentTable value;
};
struct cb_model {
  cb::HazardModel value;
};
struct cb_penalized {
  cb::PenalizedHazardFit value;
};
struct cb_curve {
  cb::RiskCurve value;
};
struct cb_layout {
  cb::PopTimeLayout value;
};

namespace {

thread_local std::string last_error;

cb_status status_of(cb::ErrorKind kind) {
  switch (kind) {
    case cb::ErrorKind::invalid_argument: return CB_ERR_INVALID_ARGUMENT;
    case cb::ErrorKind::data: return CB_ERR_DATA;
    case cb::ErrorKind::numerical: return CB_ERR_NUMERICAL;
    case cb::ErrorKind::io: return CB_ERR_IO;
    case cb::ErrorKind::version: return CB_ERR_VERSION;
  }
  return CB_ERR_INTERNAL;
}

std::string one_line(std::string text) {
  for (char& c : text)
    if (c == '\n' || c == '\r') c = ' ';
  return text;
}

template <class F>
cb_status guard(F&& body) {
  try {
    body();
    last_error.clear();
    return CB_OK;
  } catch (const cb::Error& e) {
    last_error = one_line(e.what());
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return CB_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = one_line(std::string("internal error: ") + e.what());
    return CB_ERR_INTERNAL;
  } catch (...) {
    last_error = "internal error";
    return CB_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) cb::fail(cb::ErrorKind::invalid_argument, std::string(what) + " must not be NULL");
}

template <class T>
void reset(T** out) {
  if (out) *out = nullptr;
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    const auto a = item.find_first_not_of(" \t");
    const auto b = item.find_last_not_of(" \t");
    if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
  }
  return out;
}

double parse_number(const std::string& text, const char* what) {
  double v = 0.0;
  if (!cb::parse_real(text, v)) cb::fail(cb::ErrorKind::invalid_argument, std::string("invalid ") + what + " '" + text + "'");
  return v;
}

}  // namespace

extern "C" {

const char* cb_version(void) { return "0.1.0"; }

const char* cb_last_error(void) { return last_error.c_str(); }

const char* cb_status_name(cb_status status) {
  switch (status) {
    case CB_OK: return "ok";
    case CB_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case CB_ERR_DATA: return "data";
    case CB_ERR_NUMERICAL: return "numerical";
    case CB_ERR_IO: return "io";
    case CB_ERR_VERSION: return "version";
    case CB_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

void cb_string_free(char* text) { delete[] text; }

void cb_set_threads(int threads) { cb::set_thread_count(threads); }

int cb_get_threads(void) { return cb::thread_count(); }

cb_status cb_file_fingerprint(const char* path, uint64_t* out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = cb::fingerprint_file(path);
  });
}

cb_status cb_schema_new(cb_schema** out) {
  reset(out);
  return guard([&] {
    require(out, "out");
    *out = new cb_schema{};
  });
}

cb_status cb_schema_set(cb_schema* schema, const char* key, const char* value) {
  return guard([&] {
    require(schema, "schema");
    require(key, "key");
    require(value, "value");
    const std::string k = key, v = value;
    auto& s = schema->value;
    if (k == "time") {
      s.time_column = v;
    } else if (k == "event") {
      s.event_column = v;
    } else if (k == "id") {
      s.id_column = v;
    } else if (k == "categorical") {
      for (auto& name : split(v, ',')) s.categorical_columns.insert(name);
    } else if (k == "ref") {
      for (auto& entry : split(v, ',')) {
        const auto colon = entry.find(':');
        if (colon == std::string::npos || colon == 0 || colon + 1 == entry.size())
          cb::fail(cb::ErrorKind::invalid_argument, "reference level must look like column:level");
        s.reference_levels[entry.substr(0, colon)] = entry.substr(colon + 1);
      }
    } else if (k == "tau") {
      s.tau = parse_number(v, "tau");
    } else if (k == "causes") {
      const double c = parse_number(v, "cause count");
      if (c < 1 || c != static_cast<int>(c)) cb::fail(cb::ErrorKind::invalid_argument, "cause count must be a positive integer");
      s.n_causes = static_cast<int>(c);
    } else if (k == "delimiter") {
      if (v == "tab" || v == "\\t") s.delimiter = '\t';
      else if (v.size() == 1) s.delimiter = v[0];
      else cb::fail(cb::ErrorKind::invalid_argument, "delimiter must be one character");
    } else {
      cb::fail(cb::ErrorKind::invalid_argument, "unknown schema key '" + k + "'");
    }
    s.validate();
  });
}

void cb_schema_free(cb_schema* schema) { delete schema; }

cb_status cb_dataset_load(const char* path, const cb_schema* schema, cb_dataset** out) {
  reset(out);
  return guard([&] {
    require(path, "path");
    require(out, "out");
    const cb::ColumnSchema s = schema ? schema->value : cb::ColumnSchema{};
    *out = new cb_dataset{cb::load_dataset(path, s)};
  });
}

cb_status cb_dataset_save(const cb_dataset* data, const char* path) {
  return guard([&] {
    require(data, "dataset");
    require(path, "path");
    cb::save_dataset(data->value, path);
  });
}

size_t cb_dataset_size(const cb_dataset* data) { return data ? data->value.size() : 0; }
size_t cb_dataset_events(const cb_dataset* data) { return data ? data->value.total_events() : 0; }
int cb_dataset_causes(const cb_dataset* data) { return data ? data->value.n_causes : 0; }
void cb_dataset_free(cb_dataset* data) { delete data; }

cb_status cb_simulate(const char* truth_json, cb_dataset** out, char** normalized_json) {
  reset(out);
  reset(normalized_json);
  return guard([&] {
    require(truth_json, "truth_json");
    require(out, "out");
    const cb::TruthSpec spec = cb::truth_from_json(truth_json);
    auto* data = new cb_dataset{cb::simulate_dataset(spec)};
    if (normalized_json) *normalized_json = dup_string(cb::truth_to_json(spec));
    *out = data;
  });
}

cb_status cb_sample(const cb_dataset* data, double ratio, uint64_t seed, cb_moments** out) {
  reset(out);
  return guard([&] {
    require(data, "dataset");
    require(out, "out");
    if (!(ratio > 0.0)) cb::fail(cb::ErrorKind::invalid_argument, "ratio must be positive");
    cb::SamplingOptions options;
    options.ratio = ratio;
    options.seed = seed;
    *out = new cb_moments{cb::sample_base_series(data->value, options)};
  });
}

cb_status cb_moments_load(const char* path, cb_moments** out) {
  reset(out);
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new cb_moments{cb::load_moments(path)};
  });
}

cb_status cb_moments_save(const cb_moments* moments, const char* path) {
  return guard([&] {
    require(moments, "moments");
    require(path, "path");
    cb::save_moments(moments->value, path);
  });
}

int cb_is_moment_table(const char* path) {
  int result = -1;
  const cb_status s = guard([&] {
    require(path, "path");
    result = cb::is_moment_table(std::filesystem::path(path)) ? 1 : 0;
  });
  return s == CB_OK ? result : -1;
}

size_t cb_moments_size(const cb_moments* moments) { return moments ? moments->value.size() : 0; }
size_t cb_moments_count(const cb_moments* moments, int indicator) {
  return moments ? moments->value.count(indicator) : 0;
}
double cb_moments_offset(const cb_moments* moments) {
  return moments && moments->value.size() ? moments->value.offsets.front() : 0.0;
}
double cb_moments_time(const cb_moments* moments, size_t row) { return moments->value.moment_times.at(row); }
int cb_moments_indicator(const cb_moments* moments, size_t row) { return moments->value.event_indicators.at(row); }

cb_status cb_moments_annotate(const cb_moments* moments, const char* name, cb_moment_rule rule, void* user,
                              cb_moments** out) {
  reset(out);
  return guard([&] {
    require(moments, "moments");
    require(name, "name");
    require(out, "out");
    if (!rule) cb::fail(cb::ErrorKind::invalid_argument, "rule must not be NULL");
    auto wrapped = [&](const cb::MomentRow& row) {
      double value = 0.0;
      if (rule(user, row.subject_id().c_str(), row.moment_time(), row.event_indicator(), &value) != 0)
        cb::fail(cb::ErrorKind::data, "annotation callback reported failure");
      return value;
    };
    *out = new cb_moments{cb::annotate_moments(moments->value, name, wrapped)};
  });
}

cb_status cb_moments_annotate_threshold(const cb_moments* moments, const char* name, const char* column,
                                        const char* op, cb_moments** out) {
  reset(out);
  return guard([&] {
    require(moments, "moments");
    require(name, "name");
    require(column, "column");
    require(op, "op");
    require(out, "out");
    *out = new cb_moments{cb::annotate_moments(moments->value, name, cb::threshold_rule(column, op))};
  });
}

void cb_moments_free(cb_moments* moments) { delete moments; }

cb_status cb_fit(const cb_moments* moments, const char* model_spec, cb_model** out) {
  reset(out);
  return guard([&] {
    require(moments, "moments");
    require(model_spec, "model_spec");
    require(out, "out");
    *out = new cb_model{cb::fit_hazard(moments->value, cb::parse_model_spec(model_spec))};
  });
}

cb_status cb_model_save(const cb_model* model, const char* path) {
  return guard([&] {
    require(model, "model");
    require(path, "path");
    cb::save_model(model->value, path);
  });
}

cb_status cb_model_load(const char* path, cb_model** out) {
  reset(out);
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new cb_model{cb::load_model(path)};
  });
}

cb_status cb_model_summary(const cb_model* model, char** text) {
  reset(text);
  return guard([&] {
    require(model, "model");
    require(text, "text");
    *text = dup_string(cb::summary_text(model->value));
  });
}

int cb_model_causes(const cb_model* model) { return model ? model->value.causes : 0; }
size_t cb_model_n_columns(const cb_model* model) { return model ? model->value.n_columns() : 0; }
const char* cb_model_column_name(const cb_model* model, size_t column) {
  return model && column < model->value.n_columns() ? model->value.column_names[column].c_str() : nullptr;
}
double cb_model_coefficient(const cb_model* model, int cause, size_t column) {
  return model->value.coefficients(cause - 1, static_cast<Eigen::Index>(column));
}
double cb_model_std_error(const cb_model* model, int cause, size_t column) {
  return model->value.std_error(cause, column);
}
double cb_model_deviance(const cb_model* model) { return model ? model->value.fit.deviance : 0.0; }
double cb_model_aic(const cb_model* model) { return model ? cb::aic(model->value) : 0.0; }

cb_status cb_model_write_coefficients(const cb_model* model, double level, const char* path) {
  return guard([&] {
    require(model, "model");
    require(path, "path");
    const auto rows = cb::wald_ci(model->value, level);
    std::vector<std::string> names;
    std::vector<long long> cause;
    std::vector<double> est, se, z, p, lo, hi;
    for (const auto& r : rows) {
      names.push_back(r.name);
      cause.push_back(r.cause);
      est.push_back(r.estimate);
      se.push_back(r.std_error);
      z.push_back(r.z);
      p.push_back(r.p_value);
      lo.push_back(r.lower);
      hi.push_back(r.upper);
    }
    cb::Table t;
    t.add_column("term", std::move(names));
    t.add_column("cause", std::move(cause));
    t.add_column("estimate", std::move(est));
    t.add_column("std_error", std::move(se));
    t.add_column("z", std::move(z));
    t.add_column("p_value", std::move(p));
    t.add_column("lower", std::move(lo));
    t.add_column("upper", std::move(hi));
    cb::write_table(t, path);
  });
}

cb_status cb_compare(const cb_model* nested, const cb_model* full, double* statistic, int* df, double* p_value) {
  return guard([&] {
    require(nested, "nested");
    require(full, "full");
    const cb::LrtResult r = cb::lrt(nested->value, full->value);
    if (statistic) *statistic = r.statistic;
    if (df) *df = r.df;
    if (p_value) *p_value = r.p_value;
  });
}

cb_status cb_hazard_ratio(const cb_model* model, const char* profiles_path, const char* grid, int cause,
                          double level, const char* out_path) {
  return guard([&] {
    require(model, "model");
    require(profiles_path, "profiles_path");
    require(grid, "grid");
    require(out_path, "out_path");
    const auto profiles = cb::load_profiles(profiles_path);
    if (profiles.size() != 2)
      cb::fail(cb::ErrorKind::invalid_argument, "hazard ratio needs exactly two profile rows");
    const auto times = cb::parse_grid(grid);
    const auto points = cb::hazard_ratio_curve(model->value, profiles[0].values, profiles[1].values, times, cause, level);
    std::vector<double> t, hr, lo, hi;
    for (const auto& pt : points) {
      t.push_back(pt.t);
      hr.push_back(pt.hr);
      lo.push_back(pt.lower);
      hi.push_back(pt.upper);
    }
    cb::Table table;
    table.add_column("time", std::move(t));
    table.add_column("hazard_ratio", std::move(hr));
    table.add_column("lower", std::move(lo));
    table.add_column("upper", std::move(hi));
    cb::write_table(table, out_path);
  });
}

void cb_model_free(cb_model* model) { delete model; }

void cb_penalty_options_init(cb_penalty_options* options) {
  if (!options) return;
  options->alpha = 1.0;
  options->n_lambda = 100;
  options->min_ratio = 1e-4;
  options->cv_folds = 5;
  options->seed = 1;
  options->penalize_time = 0;
  options->standardize = 1;
  options->penalty_factors = nullptr;
  options->lambdas = nullptr;
}

cb_status cb_fit_penalized(const cb_moments* moments, const char* model_spec, const cb_penalty_options* options,
                           cb_penalized** out) {
  reset(out);
  return guard([&] {
    require(moments, "moments");
    require(model_spec, "model_spec");
    require(out, "out");
    cb_penalty_options defaults;
    cb_penalty_options_init(&defaults);
    const cb_penalty_options& o = options ? *options : defaults;
    cb::PenaltyOptions po;
    po.alpha = o.alpha;
    po.n_lambda = o.n_lambda;
    po.min_ratio = o.min_ratio;
    po.cv_folds = o.cv_folds;
    po.seed = o.seed;
    po.penalize_time = o.penalize_time != 0;
    po.solver.standardize = o.standardize != 0;
    if (o.penalty_factors)
      for (const auto& entry : split(o.penalty_factors, ',')) {
        const auto eq = entry.rfind('=');
        if (eq == std::string::npos || eq == 0)
          cb::fail(cb::ErrorKind::invalid_argument, "penalty factor must look like column=value");
        po.penalty_overrides[entry.substr(0, eq)] = parse_number(entry.substr(eq + 1), "penalty factor");
      }
    if (o.lambdas)
      for (const auto& entry : split(o.lambdas, ',')) po.lambdas.push_back(parse_number(entry, "lambda"));
    *out = new cb_penalized{cb::fit_penalized_hazard(moments->value, cb::parse_model_spec(model_spec), po)};
  });
}

cb_status cb_penalized_save_path(const cb_penalized* fit, const char* path) {
  return guard([&] {
    require(fit, "fit");
    require(path, "path");
    cb::write_table(cb::path_table(fit->value), path);
  });
}

size_t cb_penalized_n_lambda(const cb_penalized* fit) { return fit ? fit->value.path.lambdas.size() : 0; }
double cb_penalized_lambda(const cb_penalized* fit, size_t index) { return fit->value.path.lambdas.at(index); }
size_t cb_penalized_selected(const cb_penalized* fit) { return fit ? fit->value.selected : 0; }
double cb_penalized_kkt(const cb_penalized* fit, size_t index) { return fit->value.path.kkt_residuals.at(index); }

cb_status cb_penalized_model(const cb_penalized* fit, cb_model** out) {
  reset(out);
  return guard([&] {
    require(fit, "fit");
    require(out, "out");
    *out = new cb_model{fit->value.model};
  });
}

void cb_penalized_free(cb_penalized* fit) { delete fit; }

void cb_risk_options_init(cb_risk_options* options) {
  if (!options) return;
  const cb::RiskOptions d;
  options->method = CB_TRAPEZOID;
  options->refinement = d.refinement;
  options->n_samples = d.n_samples;
  options->seed = d.seed;
}

cb_status cb_risk(const cb_model* model, const char* profiles_path, const char* grid, const cb_risk_options* options,
                  cb_curve** out) {
  reset(out);
  return guard([&] {
    require(model, "model");
    require(profiles_path, "profiles_path");
    require(grid, "grid");
    require(out, "out");
    cb::RiskOptions ro;
    if (options) {
      if (options->method != CB_TRAPEZOID && options->method != CB_MONTE_CARLO)
        cb::fail(cb::ErrorKind::invalid_argument, "unknown integration method");
      ro.method = options->method == CB_TRAPEZOID ? cb::IntegrationMethod::trapezoid : cb::IntegrationMethod::monte_carlo;
      ro.refinement = options->refinement;
      ro.n_samples = options->n_samples;
      ro.seed = options->seed;
    }
    const auto profiles = cb::load_profiles(profiles_path);
    const auto times = cb::parse_grid(grid);
    *out = new cb_curve{cb::absolute_risk(model->value, profiles, times, ro)};
  });
}

cb_status cb_curve_save(const cb_curve* curve, const char* path) {
  return guard([&] {
    require(curve, "curve");
    require(path, "path");
    cb::write_table(cb::risk_table(curve->value), path);
  });
}

size_t cb_curve_n_times(const cb_curve* curve) { return curve ? curve->value.times.size() : 0; }
size_t cb_curve_n_profiles(const cb_curve* curve) { return curve ? curve->value.n_profiles() : 0; }
double cb_curve_time(const cb_curve* curve, size_t index) { return curve->value.times.at(index); }
double cb_curve_cif(const cb_curve* curve, size_t time_index, size_t profile, int cause) {
  return curve->value.ci(time_index, profile, cause);
}
double cb_curve_survival(const cb_curve* curve, size_t time_index, size_t profile) {
  return curve->value.surv(time_index, profile);
}
void cb_curve_free(cb_curve* curve) { delete curve; }

cb_status cb_poptime(const cb_dataset* data, const char* exposure, const cb_moments* base, uint64_t seed,
                     cb_layout** out) {
  reset(out);
  return guard([&] {
    require(data, "dataset");
    require(out, "out");
    cb::PopTimeOptions options;
    if (exposure && *exposure) options.exposure = exposure;
    options.seed = seed;
    *out = new cb_layout{cb::poptime_layout(data->value, options, base ? &base->value : nullptr)};
  });
}

cb_status cb_layout_save_svg(const cb_layout* layout, const char* path) {
  return guard([&] {
    require(layout, "layout");
    require(path, "path");
    cb::write_file(path, cb::render_svg(layout->value));
  });
}

cb_status cb_layout_save_csv(const cb_layout* layout, const char* path) {
  return guard([&] {
    require(layout, "layout");
    require(path, "path");
    cb::write_table(cb::layout_table(layout->value), path);
  });
}

void cb_layout_free(cb_layout* layout) { delete layout; }

}  // extern "C"
