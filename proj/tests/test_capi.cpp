#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "casebase/casebase.h"
#include "doctest.h"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("casebase_capi_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

bool one_line(const char* text) { return text && *text && std::string(text).find('\n') == std::string::npos; }

const char* kTruth = R"({
  "n": 2000, "seed": 17, "tau": 6,
  "causes": [{"family": "exponential", "rate": 0.1, "log_hr": {"trt": -0.5}}],
  "covariates": [{"name": "trt", "dist": "bernoulli", "p": 0.5},
                 {"name": "z1", "dist": "normal", "mean": 0, "sd": 1},
                 {"name": "z2", "dist": "normal", "mean": 0, "sd": 1}]
})";

int rule_event_flag(void*, const char*, double, int event, double* value) {
  *value = event;
  return 0;
}

int rule_count_calls(void* user, const char* id, double t, int, double* value) {
  ++*static_cast<int*>(user);
  *value = t * 2.0 + (id ? 0.0 : 1.0);
  return 0;
}

int rule_abort(void*, const char*, double, int, double* value) {
  *value = 0.0;
  return 1;
}

}  // namespace

TEST_CASE("version, status names, threads") {
  CHECK(std::string(cb_version()) == "0.1.0");
  CHECK(std::string(cb_status_name(CB_OK)) == "ok");
  for (int s = CB_ERR_INVALID_ARGUMENT; s <= CB_ERR_INTERNAL; ++s)
    CHECK(one_line(cb_status_name(static_cast<cb_status>(s))));
  cb_set_threads(2);
  CHECK(cb_get_threads() == 2);
  cb_set_threads(1);
  CHECK(cb_get_threads() == 1);
}

TEST_CASE("NULL arguments are rejected with a one-line message") {
  cb_dataset* data = reinterpret_cast<cb_dataset*>(0x1);
  CHECK(cb_dataset_load(nullptr, nullptr, &data) == CB_ERR_INVALID_ARGUMENT);
  CHECK(data == nullptr);
  CHECK(one_line(cb_last_error()));
  cb_moments* m = nullptr;
  CHECK(cb_sample(nullptr, 10, 1, &m) == CB_ERR_INVALID_ARGUMENT);
  CHECK(cb_fit(nullptr, "time=constant", nullptr) == CB_ERR_INVALID_ARGUMENT);
  CHECK(cb_dataset_size(nullptr) == 0);
  cb_dataset_free(nullptr);
  cb_moments_free(nullptr);
  cb_model_free(nullptr);
  cb_curve_free(nullptr);
  cb_layout_free(nullptr);
  cb_penalized_free(nullptr);
  cb_schema_free(nullptr);
  cb_string_free(nullptr);
}

TEST_CASE("schema keys and custom column names") {
  const auto dir = scratch("schema");
  write_text(dir / "d.csv", "pid;ftime;Status;site\na;1.5;1;north\nb;2;0;south\nc;3;2;north\nd;0.5;1;south\n");
  cb_schema* schema = nullptr;
  REQUIRE(cb_schema_new(&schema) == CB_OK);
  CHECK(cb_schema_set(schema, "time", "ftime") == CB_OK);
  CHECK(cb_schema_set(schema, "event", "Status") == CB_OK);
  CHECK(cb_schema_set(schema, "id", "pid") == CB_OK);
  CHECK(cb_schema_set(schema, "categorical", "site") == CB_OK);
  CHECK(cb_schema_set(schema, "ref", "site:south") == CB_OK);
  CHECK(cb_schema_set(schema, "delimiter", ";") == CB_OK);
  CHECK(cb_schema_set(schema, "colour", "x") == CB_ERR_INVALID_ARGUMENT);
  CHECK(cb_schema_set(schema, "delimiter", "::") == CB_ERR_INVALID_ARGUMENT);
  cb_dataset* data = nullptr;
  REQUIRE(cb_dataset_load((dir / "d.csv").c_str(), schema, &data) == CB_OK);
  CHECK(cb_dataset_size(data) == 4);
  CHECK(cb_dataset_events(data) == 3);
  CHECK(cb_dataset_causes(data) == 2);
  cb_dataset_free(data);
  cb_schema_free(schema);
}

TEST_CASE("end-to-end through the C API") {
  const auto dir = scratch("flow");
  cb_dataset* data = nullptr;
  char* normalized = nullptr;
  REQUIRE(cb_simulate(kTruth, &data, &normalized) == CB_OK);
  REQUIRE(normalized);
  CHECK(std::string(normalized).find("\"censoring_rate\"") != std::string::npos);
  cb_string_free(normalized);
  CHECK(cb_dataset_size(data) == 2000);
  const size_t events = cb_dataset_events(data);
  CHECK(events > 0);
  REQUIRE(cb_dataset_save(data, (dir / "data.csv").c_str()) == CB_OK);
  CHECK(cb_is_moment_table((dir / "data.csv").c_str()) == 0);

  cb_moments* m = nullptr;
  REQUIRE(cb_sample(data, 20, 5, &m) == CB_OK);
  CHECK(cb_moments_size(m) == events + 20 * events);
  CHECK(cb_moments_count(m, 1) == events);
  CHECK(cb_moments_count(m, 0) == 20 * events);
  for (size_t r = 0; r < cb_moments_size(m); r += 97) {
    CHECK(cb_moments_time(m, r) > 0.0);
    CHECK(cb_moments_time(m, r) <= 6.0);
  }
  REQUIRE(cb_moments_save(m, (dir / "moments.csv").c_str()) == CB_OK);
  CHECK(cb_is_moment_table((dir / "moments.csv").c_str()) == 1);
  cb_moments* reloaded = nullptr;
  REQUIRE(cb_moments_load((dir / "moments.csv").c_str(), &reloaded) == CB_OK);
  CHECK(cb_moments_size(reloaded) == cb_moments_size(m));
  CHECK(cb_moments_offset(reloaded) == cb_moments_offset(m));
  cb_moments_free(reloaded);

  cb_model* model = nullptr;
  REQUIRE(cb_fit(m, "time=constant; terms=trt", &model) == CB_OK);
  CHECK(cb_model_causes(model) == 1);
  REQUIRE(cb_model_n_columns(model) == 2);
  CHECK(std::string(cb_model_column_name(model, 0)) == "(Intercept)");
  CHECK(std::string(cb_model_column_name(model, 1)) == "trt");
  CHECK(cb_model_column_name(model, 2) == nullptr);
  CHECK(std::abs(cb_model_coefficient(model, 1, 0) - std::log(0.1)) <= 4.0 * cb_model_std_error(model, 1, 0));
  CHECK(std::abs(cb_model_coefficient(model, 1, 1) + 0.5) <= 4.0 * cb_model_std_error(model, 1, 1));
  CHECK(cb_model_aic(model) == doctest::Approx(cb_model_deviance(model) + 4.0).epsilon(1e-14));
  char* summary = nullptr;
  REQUIRE(cb_model_summary(model, &summary) == CB_OK);
  CHECK(std::string(summary).find("trt") != std::string::npos);
  cb_string_free(summary);
  REQUIRE(cb_model_write_coefficients(model, 0.95, (dir / "coef.csv").c_str()) == CB_OK);
  CHECK(read_text(dir / "coef.csv").find("trt") != std::string::npos);

  REQUIRE(cb_model_save(model, (dir / "model.json").c_str()) == CB_OK);
  cb_model* loaded = nullptr;
  REQUIRE(cb_model_load((dir / "model.json").c_str(), &loaded) == CB_OK);
  for (size_t c = 0; c < 2; ++c) {
    CHECK(cb_model_coefficient(loaded, 1, c) == cb_model_coefficient(model, 1, c));
    CHECK(cb_model_std_error(loaded, 1, c) == cb_model_std_error(model, 1, c));
  }

  cb_model* nested = nullptr;
  REQUIRE(cb_fit(m, "time=constant", &nested) == CB_OK);
  double stat = 0.0, p = 0.0;
  int df = 0;
  REQUIRE(cb_compare(nested, model, &stat, &df, &p) == CB_OK);
  CHECK(df == 1);
  CHECK(stat == doctest::Approx(cb_model_deviance(nested) - cb_model_deviance(model)).epsilon(1e-12));
  CHECK(p >= 0.0);
  CHECK(p <= 1.0);
  CHECK(cb_compare(model, nested, &stat, &df, &p) != CB_OK);
  cb_model_free(nested);

  write_text(dir / "profiles.csv", "label,trt\ncontrol,0\ntreated,1\n");
  cb_risk_options ro;
  cb_risk_options_init(&ro);
  CHECK(ro.method == CB_TRAPEZOID);
  CHECK(ro.refinement == 100);
  cb_curve* curve = nullptr;
  REQUIRE(cb_risk(loaded, (dir / "profiles.csv").c_str(), "0:5:11", &ro, &curve) == CB_OK);
  CHECK(cb_curve_n_times(curve) == 11);
  CHECK(cb_curve_n_profiles(curve) == 2);
  CHECK(cb_curve_time(curve, 10) == 5.0);
  const double rate = std::exp(cb_model_coefficient(loaded, 1, 0));
  CHECK(cb_curve_cif(curve, 10, 0, 1) == doctest::Approx(-std::expm1(-5.0 * rate)).epsilon(1e-10));
  CHECK(cb_curve_cif(curve, 10, 1, 1) < cb_curve_cif(curve, 10, 0, 1));
  CHECK(cb_curve_cif(curve, 4, 0, 1) + cb_curve_survival(curve, 4, 0) == doctest::Approx(1.0).epsilon(1e-12));
  REQUIRE(cb_curve_save(curve, (dir / "risk.csv").c_str()) == CB_OK);
  CHECK(fs::file_size(dir / "risk.csv") > 0);
  cb_curve_free(curve);
  REQUIRE(cb_hazard_ratio(loaded, (dir / "profiles.csv").c_str(), "1:5:5", 1, 0.95, (dir / "hr.csv").c_str()) ==
          CB_OK);
  CHECK(read_text(dir / "hr.csv").find('\n') != std::string::npos);
  cb_model_free(loaded);
  cb_model_free(model);

  cb_penalty_options po;
  cb_penalty_options_init(&po);
  CHECK(po.alpha == 1.0);
  po.n_lambda = 20;
  po.cv_folds = 3;
  cb_penalized* pen = nullptr;
  REQUIRE(cb_fit_penalized(m, "time=log; terms=trt,z1,z2", &po, &pen) == CB_OK);
  CHECK(cb_penalized_n_lambda(pen) == 20);
  CHECK(cb_penalized_lambda(pen, 0) > cb_penalized_lambda(pen, 19));
  CHECK(cb_penalized_selected(pen) < 20);
  for (size_t k = 0; k < 20; ++k) CHECK(cb_penalized_kkt(pen, k) <= 1e-6);
  cb_model* chosen = nullptr;
  REQUIRE(cb_penalized_model(pen, &chosen) == CB_OK);
  CHECK(cb_model_n_columns(chosen) == 5);
  REQUIRE(cb_penalized_save_path(pen, (dir / "path.csv").c_str()) == CB_OK);
  cb_model_free(chosen);
  cb_penalized_free(pen);
  po.penalty_factors = "nonsense";
  CHECK(cb_fit_penalized(m, "terms=trt,z1", &po, &pen) == CB_ERR_INVALID_ARGUMENT);
  CHECK(pen == nullptr);

  cb_layout* layout = nullptr;
  REQUIRE(cb_poptime(data, nullptr, m, 3, &layout) == CB_OK);
  REQUIRE(cb_layout_save_svg(layout, (dir / "poptime.svg").c_str()) == CB_OK);
  REQUIRE(cb_layout_save_csv(layout, (dir / "poptime.csv").c_str()) == CB_OK);
  CHECK(read_text(dir / "poptime.svg").find("<svg") != std::string::npos);
  CHECK(read_text(dir / "poptime.svg").find("class=\"base\"") != std::string::npos);
  cb_layout_free(layout);
  CHECK(cb_poptime(data, "trt", nullptr, 3, &layout) == CB_ERR_INVALID_ARGUMENT);

  uint64_t f1 = 0, f2 = 0;
  REQUIRE(cb_file_fingerprint((dir / "moments.csv").c_str(), &f1) == CB_OK);
  REQUIRE(cb_file_fingerprint((dir / "moments.csv").c_str(), &f2) == CB_OK);
  CHECK(f1 == f2);

  cb_moments_free(m);
  cb_dataset_free(data);
}

TEST_CASE("error codes by category") {
  const auto dir = scratch("errors");
  cb_dataset* data = nullptr;
  write_text(dir / "bad.csv", "id,time,event\n1,-2,1\n");
  CHECK(cb_dataset_load((dir / "bad.csv").c_str(), nullptr, &data) == CB_ERR_DATA);
  CHECK(one_line(cb_last_error()));
  CHECK(cb_dataset_load((dir / "missing.csv").c_str(), nullptr, &data) == CB_ERR_IO);
  CHECK(cb_is_moment_table((dir / "missing.csv").c_str()) == -1);
  CHECK(cb_simulate("{\"causes\": []}", &data, nullptr) == CB_ERR_INVALID_ARGUMENT);

  REQUIRE(cb_simulate(kTruth, &data, nullptr) == CB_OK);
  cb_moments* m = nullptr;
  REQUIRE(cb_sample(data, 10, 1, &m) == CB_OK);
  cb_model* model = nullptr;
  CHECK(cb_fit(m, "time=cubic", &model) == CB_ERR_INVALID_ARGUMENT);
  CHECK(model == nullptr);
  CHECK(cb_sample(data, -1, 1, &m) == CB_ERR_INVALID_ARGUMENT);
  CHECK(m == nullptr);
  REQUIRE(cb_sample(data, 10, 1, &m) == CB_OK);

  cb_moments* flagged = nullptr;
  REQUIRE(cb_moments_annotate(m, "flag", rule_event_flag, nullptr, &flagged) == CB_OK);
  CHECK(cb_fit(flagged, "time=constant; terms=flag", &model) == CB_ERR_NUMERICAL);
  CHECK(std::string(cb_last_error()).find("separation") != std::string::npos);
  cb_moments_free(flagged);

  REQUIRE(cb_fit(m, "time=constant", &model) == CB_OK);
  REQUIRE(cb_model_save(model, (dir / "model.json").c_str()) == CB_OK);
  cb_model_free(model);
  std::string text = read_text(dir / "model.json");
  const auto pos = text.find("\"version\"");
  REQUIRE(pos != std::string::npos);
  const auto colon = text.find(':', pos);
  const auto end = text.find_first_of(",}", colon);
  text.replace(colon + 1, end - colon - 1, " 999");
  write_text(dir / "future.json", text);
  CHECK(cb_model_load((dir / "future.json").c_str(), &model) == CB_ERR_VERSION);
  CHECK(model == nullptr);
  CHECK(cb_model_load((dir / "nope.json").c_str(), &model) == CB_ERR_IO);

  cb_moments_free(m);
  cb_dataset_free(data);
}

TEST_CASE("annotation callbacks and thresholds") {
  const auto dir = scratch("annotate");
  write_text(dir / "d.csv", "id,time,event,transplant\n1,10,1,4\n2,8,0,20\n3,5,1,20\n4,12,0,1\n");
  cb_dataset* data = nullptr;
  REQUIRE(cb_dataset_load((dir / "d.csv").c_str(), nullptr, &data) == CB_OK);
  cb_moments* m = nullptr;
  REQUIRE(cb_sample(data, 50, 2, &m) == CB_OK);

  int calls = 0;
  cb_moments* annotated = nullptr;
  REQUIRE(cb_moments_annotate(m, "twice", rule_count_calls, &calls, &annotated) == CB_OK);
  CHECK(static_cast<size_t>(calls) == cb_moments_size(m));
  REQUIRE(cb_moments_save(annotated, (dir / "a.csv").c_str()) == CB_OK);
  CHECK(read_text(dir / "a.csv").find("twice") != std::string::npos);
  cb_moments_free(annotated);

  CHECK(cb_moments_annotate(m, "bad", rule_abort, nullptr, &annotated) == CB_ERR_DATA);
  CHECK(annotated == nullptr);
  CHECK(cb_moments_annotate(m, "bad", nullptr, nullptr, &annotated) == CB_ERR_INVALID_ARGUMENT);

  cb_moments* post = nullptr;
  REQUIRE(cb_moments_annotate_threshold(m, "post", "transplant", "<=", &post) == CB_OK);
  REQUIRE(cb_moments_save(post, (dir / "post.csv").c_str()) == CB_OK);
  std::istringstream rows(read_text(dir / "post.csv"));
  std::string header;
  std::getline(rows, header);
  CHECK(header.find("post") != std::string::npos);
  cb_moments_free(post);
  CHECK(cb_moments_annotate_threshold(m, "post", "transplant", "==", &post) == CB_ERR_INVALID_ARGUMENT);
  CHECK(cb_moments_annotate_threshold(m, "post", "absent", "<", &post) != CB_OK);

  cb_moments_free(m);
  cb_dataset_free(data);
}
