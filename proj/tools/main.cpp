#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "casebase/casebase.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliFailure {
  int exit_code;
  std::string kind;
  std::string message;
};

int exit_code_for(cb_status s) {
  switch (s) {
    case CB_OK: return 0;
    case CB_ERR_INVALID_ARGUMENT: return 2;
    case CB_ERR_DATA:
    case CB_ERR_IO:
    case CB_ERR_VERSION: return 3;
    case CB_ERR_NUMERICAL: return 4;
    case CB_ERR_INTERNAL: return 1;
  }
  return 1;
}

void check(cb_status s) {
  if (s != CB_OK) throw CliFailure{exit_code_for(s), cb_status_name(s), cb_last_error()};
}

[[noreturn]] void usage_error(const std::string& message) { throw CliFailure{2, "usage", message}; }

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Schema = std::unique_ptr<cb_schema, Deleter<cb_schema, cb_schema_free>>;
using Dataset = std::unique_ptr<cb_dataset, Deleter<cb_dataset, cb_dataset_free>>;
using Moments = std::unique_ptr<cb_moments, Deleter<cb_moments, cb_moments_free>>;
using Model = std::unique_ptr<cb_model, Deleter<cb_model, cb_model_free>>;
using Penalized = std::unique_ptr<cb_penalized, Deleter<cb_penalized, cb_penalized_free>>;
using Curve = std::unique_ptr<cb_curve, Deleter<cb_curve, cb_curve_free>>;
using Layout = std::unique_ptr<cb_layout, Deleter<cb_layout, cb_layout_free>>;

std::string take_string(char* s) {
  std::string out = s ? s : "";
  cb_string_free(s);
  return out;
}

std::string hex64(uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Sidecar describing how an artifact was produced. The timestamp lives only here.
class RunRecord {
 public:
  explicit RunRecord(std::string command) : command_(std::move(command)) {}

  void input(const std::string& path) {
    uint64_t fp = 0;
    check(cb_file_fingerprint(path.c_str(), &fp));
    inputs_[path] = hex64(fp);
  }
  void output(const std::string& path) { outputs_.push_back(path); }
  void param(const std::string& key, json value) { params_[key] = std::move(value); }
  void seed(uint64_t s) { seed_ = s; }

  void write(const std::string& primary) const {
    json j;
    j["command"] = command_;
    j["version"] = cb_version();
    if (seed_) j["seed"] = *seed_;
    j["inputs"] = inputs_;
    j["outputs"] = outputs_;
    j["parameters"] = params_;
    j["threads"] = cb_get_threads();
    j["timestamp"] = utc_timestamp();
    std::ofstream out(primary + ".run.json", std::ios::binary);
    if (!out) throw CliFailure{3, "io", "cannot write run metadata for " + primary};
    out << j.dump(2) << '\n';
  }

 private:
  std::string command_;
  std::map<std::string, std::string> inputs_;
  std::vector<std::string> outputs_;
  json params_ = json::object();
  std::optional<uint64_t> seed_;
};

struct SchemaFlags {
  std::string time = "time";
  std::string event = "event";
  std::string id;
  std::string categorical;
  std::string ref;
  std::string delimiter;
  double tau = 0.0;
  int causes = 0;

  void attach(CLI::App* app) {
    app->add_option("--time-col", time, "Follow-up time column")->capture_default_str();
    app->add_option("--event-col", event, "Event code column (0 = censored)")->capture_default_str();
    app->add_option("--id-col", id, "Subject id column");
    app->add_option("--categorical", categorical, "Comma list of categorical columns");
    app->add_option("--ref", ref, "Reference levels, column:level[,column:level]");
    app->add_option("--tau", tau, "Administrative end of follow-up");
    app->add_option("--causes", causes, "Number of event types");
    app->add_option("--delimiter", delimiter, "Field delimiter (one character or 'tab')");
  }

  Schema build() const {
    cb_schema* raw = nullptr;
    check(cb_schema_new(&raw));
    Schema s(raw);
    check(cb_schema_set(raw, "time", time.c_str()));
    check(cb_schema_set(raw, "event", event.c_str()));
    if (!id.empty()) check(cb_schema_set(raw, "id", id.c_str()));
    if (!categorical.empty()) check(cb_schema_set(raw, "categorical", categorical.c_str()));
    if (!ref.empty()) check(cb_schema_set(raw, "ref", ref.c_str()));
    if (tau > 0.0) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", tau);
      check(cb_schema_set(raw, "tau", buf));
    }
    if (causes > 0) check(cb_schema_set(raw, "causes", std::to_string(causes).c_str()));
    if (!delimiter.empty()) check(cb_schema_set(raw, "delimiter", delimiter.c_str()));
    return s;
  }
};

Dataset load_dataset(const std::string& path, const SchemaFlags& flags) {
  const Schema schema = flags.build();
  cb_dataset* raw = nullptr;
  check(cb_dataset_load(path.c_str(), schema.get(), &raw));
  return Dataset(raw);
}

std::string default_sidecar(const std::string& primary, const std::string& suffix) {
  fs::path p(primary);
  const std::string stem = (p.parent_path() / p.stem()).string();
  return stem + suffix;
}

// ---------- subcommands ----------

struct SimulateArgs {
  std::string truth;
  std::string out;
  std::optional<uint64_t> seed;
  std::optional<std::size_t> n;
};

void run_simulate(const SimulateArgs& a, bool quiet) {
  std::ifstream in(a.truth, std::ios::binary);
  if (!in) throw CliFailure{3, "io", "cannot open truth file " + a.truth};
  std::stringstream buffer;
  buffer << in.rdbuf();
  json truth;
  try {
    truth = json::parse(buffer.str());
  } catch (const json::exception& e) {
    usage_error(std::string("truth file is not valid JSON: ") + e.what());
  }
  if (a.seed) truth["seed"] = *a.seed;
  if (a.n) truth["n"] = *a.n;
  cb_dataset* raw = nullptr;
  char* normalized = nullptr;
  check(cb_simulate(truth.dump().c_str(), &raw, &normalized));
  Dataset data(raw);
  const std::string spec = take_string(normalized);
  check(cb_dataset_save(data.get(), a.out.c_str()));
  const std::string truth_out = default_sidecar(a.out, ".truth.json");
  {
    std::ofstream t(truth_out, std::ios::binary);
    if (!t) throw CliFailure{3, "io", "cannot write " + truth_out};
    t << spec;
  }
  RunRecord rec("simulate");
  rec.input(a.truth);
  rec.seed(json::parse(spec).at("seed").get<uint64_t>());
  rec.output(a.out);
  rec.output(truth_out);
  rec.write(a.out);
  if (!quiet)
    std::cout << "simulated " << cb_dataset_size(data.get()) << " subjects, " << cb_dataset_events(data.get())
              << " events -> " << a.out << '\n';
}

struct SampleArgs {
  std::string input;
  std::string out;
  double ratio = 100.0;
  uint64_t seed = 1;
  SchemaFlags schema;
};

void run_sample(const SampleArgs& a, bool quiet) {
  const Dataset data = load_dataset(a.input, a.schema);
  cb_moments* raw = nullptr;
  check(cb_sample(data.get(), a.ratio, a.seed, &raw));
  Moments m(raw);
  check(cb_moments_save(m.get(), a.out.c_str()));
  RunRecord rec("sample");
  rec.input(a.input);
  rec.seed(a.seed);
  rec.param("ratio", a.ratio);
  rec.output(a.out);
  rec.write(a.out);
  if (!quiet)
    std::cout << "sampled " << cb_moments_count(m.get(), 0) << " base moments and "
              << cb_moments_size(m.get()) - cb_moments_count(m.get(), 0) << " cases (offset "
              << cb_moments_offset(m.get()) << ") -> " << a.out << '\n';
}

struct FitArgs {
  std::string input;
  std::string out;
  std::string model = "time=constant";
  std::string coef_out;
  std::string family = "auto";
  double ratio = 100.0;
  uint64_t seed = 1;
  double level = 0.95;
  std::vector<std::string> annotate;
  SchemaFlags schema;
  bool penalized = false;
  double alpha = 1.0;
  int n_lambda = 100;
  double min_ratio = 1e-4;
  int cv_folds = 5;
  std::vector<std::string> penalty_factors;
  std::string lambdas;
  bool penalize_time = false;
  bool no_standardize = false;
  std::string path_out;
};

Moments apply_annotation(Moments m, const std::string& rule) {
  // name=column<op>time
  const auto eq = rule.find('=');
  if (eq == std::string::npos || eq == 0) usage_error("annotation must look like name=column<op>time");
  const std::string name = rule.substr(0, eq);
  const std::string rest = rule.substr(eq + 1);
  for (const char* op : {"<=", ">=", "<", ">"}) {
    const auto pos = rest.find(op);
    if (pos == std::string::npos) continue;
    const std::string column = rest.substr(0, pos);
    const std::string rhs = rest.substr(pos + std::strlen(op));
    if (column.empty() || rhs != "time") usage_error("annotation must compare a column with 'time'");
    cb_moments* raw = nullptr;
    check(cb_moments_annotate_threshold(m.get(), name.c_str(), column.c_str(), op, &raw));
    return Moments(raw);
  }
  usage_error("annotation needs one of <, <=, >, >=");
}

void run_fit(const FitArgs& a, bool quiet) {
  RunRecord rec(a.penalized ? "fit --penalized" : "fit");
  rec.input(a.input);
  const int is_moments = cb_is_moment_table(a.input.c_str());
  if (is_moments < 0) check(CB_ERR_IO);
  Moments moments;
  if (is_moments == 1) {
    cb_moments* raw = nullptr;
    check(cb_moments_load(a.input.c_str(), &raw));
    moments.reset(raw);
  } else {
    const Dataset data = load_dataset(a.input, a.schema);
    cb_moments* raw = nullptr;
    check(cb_sample(data.get(), a.ratio, a.seed, &raw));
    moments.reset(raw);
    rec.param("sampled", true);
    rec.param("ratio", a.ratio);
    rec.seed(a.seed);
  }
  for (const auto& rule : a.annotate) moments = apply_annotation(std::move(moments), rule);
  rec.param("model", a.model);

  const bool penalized = a.penalized || a.family == "penalized";
  const std::string coef_out = a.coef_out.empty() ? default_sidecar(a.out, ".coef.csv") : a.coef_out;
  Model model;
  if (penalized) {
    cb_penalty_options po;
    cb_penalty_options_init(&po);
    po.alpha = a.alpha;
    po.n_lambda = a.n_lambda;
    po.min_ratio = a.min_ratio;
    po.cv_folds = a.cv_folds;
    po.seed = a.seed;
    po.penalize_time = a.penalize_time ? 1 : 0;
    po.standardize = a.no_standardize ? 0 : 1;
    std::string factors;
    for (const auto& f : a.penalty_factors) factors += (factors.empty() ? "" : ",") + f;
    po.penalty_factors = factors.empty() ? nullptr : factors.c_str();
    po.lambdas = a.lambdas.empty() ? nullptr : a.lambdas.c_str();
    cb_penalized* raw = nullptr;
    check(cb_fit_penalized(moments.get(), a.model.c_str(), &po, &raw));
    Penalized fit(raw);
    const std::string path_out = a.path_out.empty() ? default_sidecar(a.out, ".path.csv") : a.path_out;
    check(cb_penalized_save_path(fit.get(), path_out.c_str()));
    cb_model* m = nullptr;
    check(cb_penalized_model(fit.get(), &m));
    model.reset(m);
    rec.output(path_out);
    rec.seed(a.seed);
    rec.param("alpha", a.alpha);
    rec.param("cv_folds", a.cv_folds);
    rec.param("selected_lambda", cb_penalized_lambda(fit.get(), cb_penalized_selected(fit.get())));
  } else {
    cb_model* m = nullptr;
    check(cb_fit(moments.get(), a.model.c_str(), &m));
    model.reset(m);
  }
  const int causes = cb_model_causes(model.get());
  if (a.family == "binary" && causes != 1) usage_error("family binary needs single-event data");
  if (a.family == "multinomial" && causes < 2) usage_error("family multinomial needs two or more causes");
  check(cb_model_save(model.get(), a.out.c_str()));
  check(cb_model_write_coefficients(model.get(), a.level, coef_out.c_str()));
  rec.output(a.out);
  rec.output(coef_out);
  rec.write(a.out);
  if (!quiet) {
    char* text = nullptr;
    check(cb_model_summary(model.get(), &text));
    std::cout << take_string(text);
  }
}

struct RiskArgs {
  std::string model;
  std::string profiles;
  std::string grid = "0:10:11";
  std::string method = "trapezoid";
  std::string out;
  int refinement = 100;
  std::size_t n_samples = 10000;
  uint64_t seed = 1;
};

void run_risk(const RiskArgs& a, bool quiet) {
  cb_model* m = nullptr;
  check(cb_model_load(a.model.c_str(), &m));
  Model model(m);
  cb_risk_options ro;
  cb_risk_options_init(&ro);
  if (a.method == "trapezoid")
    ro.method = CB_TRAPEZOID;
  else if (a.method == "monte_carlo" || a.method == "mc")
    ro.method = CB_MONTE_CARLO;
  else
    usage_error("method must be trapezoid or monte_carlo");
  ro.refinement = a.refinement;
  ro.n_samples = a.n_samples;
  ro.seed = a.seed;
  cb_curve* c = nullptr;
  check(cb_risk(model.get(), a.profiles.c_str(), a.grid.c_str(), &ro, &c));
  Curve curve(c);
  check(cb_curve_save(curve.get(), a.out.c_str()));
  RunRecord rec("risk");
  rec.input(a.model);
  rec.input(a.profiles);
  rec.param("grid", a.grid);
  rec.param("method", a.method);
  if (ro.method == CB_MONTE_CARLO) {
    rec.seed(a.seed);
    rec.param("n_samples", a.n_samples);
  } else {
    rec.param("refinement", a.refinement);
  }
  rec.output(a.out);
  rec.write(a.out);
  if (!quiet) {
    const std::size_t last = cb_curve_n_times(curve.get()) - 1;
    std::cout << "risk at t = " << cb_curve_time(curve.get(), last) << ":";
    for (std::size_t p = 0; p < cb_curve_n_profiles(curve.get()); ++p)
      for (int j = 1; j <= cb_model_causes(model.get()); ++j)
        std::cout << ' ' << cb_curve_cif(curve.get(), last, p, j);
    std::cout << " -> " << a.out << '\n';
  }
}

struct PoptimeArgs {
  std::string input;
  std::string out;
  std::string exposure;
  std::string base;
  std::string layout_out;
  uint64_t seed = 1;
  SchemaFlags schema;
};

void run_poptime(const PoptimeArgs& a, bool quiet) {
  const Dataset data = load_dataset(a.input, a.schema);
  RunRecord rec("poptime");
  rec.input(a.input);
  Moments base;
  if (!a.base.empty()) {
    cb_moments* raw = nullptr;
    check(cb_moments_load(a.base.c_str(), &raw));
    base.reset(raw);
    rec.input(a.base);
  }
  cb_layout* raw = nullptr;
  check(cb_poptime(data.get(), a.exposure.empty() ? nullptr : a.exposure.c_str(), base.get(), a.seed, &raw));
  Layout layout(raw);
  const std::string ext = fs::path(a.out).extension().string();
  if (ext == ".csv")
    check(cb_layout_save_csv(layout.get(), a.out.c_str()));
  else
    check(cb_layout_save_svg(layout.get(), a.out.c_str()));
  rec.output(a.out);
  if (!a.layout_out.empty()) {
    check(cb_layout_save_csv(layout.get(), a.layout_out.c_str()));
    rec.output(a.layout_out);
  }
  rec.seed(a.seed);
  if (!a.exposure.empty()) rec.param("exposure", a.exposure);
  rec.write(a.out);
  if (!quiet) std::cout << "population-time plot -> " << a.out << '\n';
}

struct CompareArgs {
  std::string nested;
  std::string full;
  std::string out;
};

void run_compare(const CompareArgs& a, bool quiet) {
  cb_model* n = nullptr;
  check(cb_model_load(a.nested.c_str(), &n));
  Model nested(n);
  cb_model* f = nullptr;
  check(cb_model_load(a.full.c_str(), &f));
  Model full(f);
  double stat = 0.0, p = 1.0;
  int df = 0;
  check(cb_compare(nested.get(), full.get(), &stat, &df, &p));
  json result = {{"statistic", stat},
                 {"df", df},
                 {"p_value", p},
                 {"aic_nested", cb_model_aic(nested.get())},
                 {"aic_full", cb_model_aic(full.get())}};
  if (!a.out.empty()) {
    std::ofstream o(a.out, std::ios::binary);
    if (!o) throw CliFailure{3, "io", "cannot write " + a.out};
    o << result.dump(2) << '\n';
    RunRecord rec("compare");
    rec.input(a.nested);
    rec.input(a.full);
    rec.output(a.out);
    rec.write(a.out);
  }
  if (!quiet) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "LRT statistic %.4f on %d df, p = %.4g; AIC %.2f (nested) vs %.2f (full)\n", stat,
                  df, p, cb_model_aic(nested.get()), cb_model_aic(full.get()));
    std::cout << buf;
  }
}

struct HrArgs {
  std::string model;
  std::string profiles;
  std::string grid = "0:10:11";
  std::string out;
  int cause = 1;
  double level = 0.95;
};

void run_hr(const HrArgs& a, bool quiet) {
  cb_model* m = nullptr;
  check(cb_model_load(a.model.c_str(), &m));
  Model model(m);
  check(cb_hazard_ratio(model.get(), a.profiles.c_str(), a.grid.c_str(), a.cause, a.level, a.out.c_str()));
  RunRecord rec("hr");
  rec.input(a.model);
  rec.input(a.profiles);
  rec.param("grid", a.grid);
  rec.output(a.out);
  rec.write(a.out);
  if (!quiet) std::cout << "hazard ratio curve -> " << a.out << '\n';
}

// ---------- config files ----------

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliFailure{3, "io", "cannot open config file " + path};
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) usage_error("config line " + std::to_string(number) + " is not key = value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    for (char& c : key)
      if (c == '_') c = '-';
    out.emplace_back(key, value);
  }
  return out;
}

// Config entries are spliced in ahead of the user's own flags so that flags win.
std::vector<std::string> expand_config(std::vector<std::string> args, const std::vector<std::string>& subcommands) {
  std::string config;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config = args[i + 1];
      args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
      args.erase(args.begin() + static_cast<long>(i));
      break;
    }
  }
  if (config.empty()) return args;
  std::size_t sub = args.size();
  for (std::size_t i = 1; i < args.size(); ++i)
    if (std::find(subcommands.begin(), subcommands.end(), args[i]) != subcommands.end()) {
      sub = i;
      break;
    }
  std::vector<std::string> global, local;
  for (const auto& [key, value] : read_config(config)) {
    const std::string flag = "--" + key + "=" + value;
    (key == "threads" || key == "quiet" ? global : local).push_back(flag);
  }
  std::vector<std::string> out{args[0]};
  out.insert(out.end(), global.begin(), global.end());
  for (std::size_t i = 1; i < args.size(); ++i) {
    out.push_back(args[i]);
    if (i == sub) out.insert(out.end(), local.begin(), local.end());
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Case-base sampling for parametric survival analysis", "casebase"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_version_flag("--version", std::string(cb_version()));
  int threads = 0;
  bool quiet = false;
  std::string config_unused;
  app.add_option("--threads", threads, "Worker threads (default: CASEBASE_THREADS or 1)");
  app.add_flag("-q,--quiet", quiet, "Suppress progress output");
  app.add_option("--config", config_unused, "key = value file; command-line flags take precedence");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate survival data from a JSON truth file");
  sim_cmd->add_option("--truth", sim.truth, "Truth specification (JSON)")->required();
  sim_cmd->add_option("-o,--out", sim.out, "Dataset output (CSV)")->required();
  sim_cmd->add_option("--seed", sim.seed, "Override the truth file's seed");
  sim_cmd->add_option("-n,--n", sim.n, "Override the number of subjects");

  SampleArgs smp;
  auto* smp_cmd = app.add_subcommand("sample", "Case-base sampling of person-moments");
  smp_cmd->add_option("-i,--input", smp.input, "Survival dataset (CSV)")->required();
  smp_cmd->add_option("-o,--out", smp.out, "Person-moment table output")->required();
  smp_cmd->add_option("--ratio", smp.ratio, "Base-series size per event")->capture_default_str();
  smp_cmd->add_option("--seed", smp.seed, "Sampling seed")->capture_default_str();
  smp.schema.attach(smp_cmd);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a smooth-in-time hazard model");
  fit_cmd->add_option("-i,--input", fit.input, "Person-moment table or survival dataset")->required();
  fit_cmd->add_option("-o,--out", fit.out, "Model output (JSON)")->required();
  fit_cmd->add_option("-m,--model", fit.model, "Model spec, e.g. \"time=bspline(df=3); terms=trt\"")
      ->capture_default_str();
  fit_cmd->add_option("--family", fit.family, "auto | binary | multinomial | penalized")
      ->check(CLI::IsMember({"auto", "binary", "multinomial", "penalized"}))
      ->capture_default_str();
  fit_cmd->add_option("--coef-out", fit.coef_out, "Coefficient table (default <out>.coef.csv)");
  fit_cmd->add_option("--ratio", fit.ratio, "Ratio when sampling a raw dataset")->capture_default_str();
  fit_cmd->add_option("--seed", fit.seed, "Sampling and cross-validation seed")->capture_default_str();
  fit_cmd->add_option("--level", fit.level, "Confidence level")->capture_default_str();
  fit_cmd->add_option("--annotate", fit.annotate, "Derived covariate name=column<op>time (repeatable)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  fit_cmd->add_flag("--penalized", fit.penalized, "Elastic-net path with cross-validation");
  fit_cmd->add_option("--alpha", fit.alpha, "Elastic-net mixing")->capture_default_str();
  fit_cmd->add_option("--n-lambda", fit.n_lambda, "Path length")->capture_default_str();
  fit_cmd->add_option("--min-ratio", fit.min_ratio, "Smallest lambda / lambda_max")->capture_default_str();
  fit_cmd->add_option("--cv-folds", fit.cv_folds, "Cross-validation folds (< 2 disables)")->capture_default_str();
  fit_cmd->add_option("--penalty-factor", fit.penalty_factors, "column=value (repeatable)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  fit_cmd->add_option("--lambdas", fit.lambdas, "Explicit comma-separated lambda grid");
  fit_cmd->add_flag("--penalize-time", fit.penalize_time, "Penalize the time columns too");
  fit_cmd->add_flag("--no-standardize", fit.no_standardize, "Do not standardize penalized columns");
  fit_cmd->add_option("--path-out", fit.path_out, "Path table (default <out>.path.csv)");
  fit.schema.attach(fit_cmd);

  RiskArgs risk;
  auto* risk_cmd = app.add_subcommand("risk", "Cumulative incidence curves from a fitted model");
  risk_cmd->add_option("--model", risk.model, "Model file")->required();
  risk_cmd->add_option("--profiles", risk.profiles, "Covariate profiles, one per row")->required();
  risk_cmd->add_option("--grid", risk.grid, "start:stop:count")->capture_default_str();
  risk_cmd->add_option("--method", risk.method, "trapezoid | monte_carlo")->capture_default_str();
  risk_cmd->add_option("--refinement", risk.refinement, "Trapezoid steps per grid interval")->capture_default_str();
  risk_cmd->add_option("--n-samples", risk.n_samples, "Monte Carlo draws")->capture_default_str();
  risk_cmd->add_option("--seed", risk.seed, "Monte Carlo seed")->capture_default_str();
  risk_cmd->add_option("-o,--out", risk.out, "Risk table output")->required();

  PoptimeArgs pop;
  auto* pop_cmd = app.add_subcommand("poptime", "Population-time plot");
  pop_cmd->add_option("-i,--input", pop.input, "Survival dataset")->required();
  pop_cmd->add_option("-o,--out", pop.out, "Output (.svg, or .csv for the layout table)")->required();
  pop_cmd->add_option("--exposure", pop.exposure, "Categorical column to facet by");
  pop_cmd->add_option("--base", pop.base, "Person-moment table whose base series to overlay");
  pop_cmd->add_option("--layout-out", pop.layout_out, "Also write the layout table");
  pop_cmd->add_option("--seed", pop.seed, "Jitter seed")->capture_default_str();
  pop.schema.attach(pop_cmd);

  CompareArgs cmp;
  auto* cmp_cmd = app.add_subcommand("compare", "Likelihood-ratio test of nested models");
  cmp_cmd->add_option("--nested", cmp.nested, "Smaller model")->required();
  cmp_cmd->add_option("--full", cmp.full, "Larger model")->required();
  cmp_cmd->add_option("-o,--out", cmp.out, "Result (JSON)");

  HrArgs hr;
  auto* hr_cmd = app.add_subcommand("hr", "Time-varying hazard ratio with delta-method bands");
  hr_cmd->add_option("--model", hr.model, "Model file")->required();
  hr_cmd->add_option("--profiles", hr.profiles, "Two profile rows: numerator, denominator")->required();
  hr_cmd->add_option("--grid", hr.grid, "start:stop:count")->capture_default_str();
  hr_cmd->add_option("--cause", hr.cause, "Cause (1-based)")->capture_default_str();
  hr_cmd->add_option("--level", hr.level, "Confidence level")->capture_default_str();
  hr_cmd->add_option("-o,--out", hr.out, "Output table")->required();

  try {
    std::vector<std::string> args(argv, argv + argc);
    args = expand_config(std::move(args), {"simulate", "sample", "fit", "risk", "poptime", "compare", "hr"});
    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    try {
      app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      usage_error(e.what());
    }
    if (threads > 0) cb_set_threads(threads);

    if (sim_cmd->parsed()) run_simulate(sim, quiet);
    else if (smp_cmd->parsed()) run_sample(smp, quiet);
    else if (fit_cmd->parsed()) run_fit(fit, quiet);
    else if (risk_cmd->parsed()) run_risk(risk, quiet);
    else if (pop_cmd->parsed()) run_poptime(pop, quiet);
    else if (cmp_cmd->parsed()) run_compare(cmp, quiet);
    else if (hr_cmd->parsed()) run_hr(hr, quiet);
  } catch (const CliFailure& f) {
    std::string message = f.message;
    for (char& c : message)
      if (c == '\n') c = ' ';
    std::cerr << "casebase: error kind=" << f.kind << " exit=" << f.exit_code << " message=" << message << '\n';
    return f.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "casebase: error kind=internal exit=1 message=" << e.what() << '\n';
    return 1;
  }
  return 0;
}
