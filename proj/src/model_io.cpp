#include "casebase/model_io.hpp"

#include <limits>

#include "casebase/error.hpp"
#include "casebase/table.hpp"
#include "json.hpp"

namespace casebase {

namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
    fail(ErrorKind::data, std::string("corrupted model file: bad shape for ") + what);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      fail(ErrorKind::data, std::string("corrupted model file: bad shape for ") + what);
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto& cell = row[static_cast<std::size_t>(c)];
      // Non-finite values (unavailable standard errors) are stored as null.
      m(r, c) = cell.is_null() ? std::numeric_limits<double>::quiet_NaN() : cell.get<double>();
    }
  }
  return m;
}

TimeKind kind_from_string(const std::string& s) {
  for (auto k : {TimeKind::constant, TimeKind::linear, TimeKind::log, TimeKind::bspline})
    if (s == to_string(k)) return k;
  fail(ErrorKind::data, "corrupted model file: unknown time basis '" + s + "'");
}

}  // namespace

std::string serialize_model(const HazardModel& model) {
  const auto& b = model.spec.time;
  json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  j["basis"] = {{"kind", to_string(b.kind)}, {"degree", b.degree},       {"df", b.df},
                {"interior_knots", b.interior_knots}, {"lower", b.lower}, {"upper", b.upper},
                {"epsilon", b.epsilon}};
  j["spec"] = {{"time_name", model.spec.time_name},
               {"terms", model.spec.terms},
               {"interactions", model.spec.interactions},
               {"reference_levels", model.spec.reference_levels},
               {"levels", model.spec.levels}};
  j["causes"] = model.causes;
  j["column_names"] = model.column_names;
  j["coefficients"] = matrix_to_json(model.coefficients);
  j["covariance"] = matrix_to_json(model.covariance);
  j["offset_value"] = model.offset_value;
  const auto& f = model.fit;
  j["fit_stats"] = {{"deviance", f.deviance},           {"null_deviance", f.null_deviance},
                    {"aic", f.aic},                     {"iterations", f.iterations},
                    {"converged", f.converged},         {"gradient_norm", f.gradient_norm},
                    {"n_obs", f.n_obs}};
  j["data_fingerprint"] = model.data_fingerprint;
  if (model.penalty)
    j["penalty"] = {{"alpha", model.penalty->alpha},
                    {"lambda", model.penalty->lambda},
                    {"penalty_factors", model.penalty->penalty_factors}};
  return j.dump(2) + "\n";
}

HazardModel deserialize_model(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::data, std::string("corrupted model file: ") + e.what());
  }
  if (!j.is_object() || j.value("format", "") != kModelFormat)
    fail(ErrorKind::data, "corrupted model file: not a casebase model document");
  if (!j.contains("version") || !j["version"].is_number_integer() || j["version"].get<int>() != kModelVersion)
    fail(ErrorKind::version, "unsupported model file version " + (j.contains("version") ? j["version"].dump() : "<missing>") +
                                 " (expected " + std::to_string(kModelVersion) + ")");
  try {
    HazardModel m;
    const auto& b = j.at("basis");
    m.spec.time.kind = kind_from_string(b.at("kind").get<std::string>());
    m.spec.time.degree = b.at("degree").get<int>();
    m.spec.time.df = b.at("df").get<int>();
    m.spec.time.interior_knots = b.at("interior_knots").get<std::vector<double>>();
    m.spec.time.lower = b.at("lower").get<double>();
    m.spec.time.upper = b.at("upper").get<double>();
    m.spec.time.epsilon = b.at("epsilon").get<double>();
    m.spec.time.knots_given = true;
    m.spec.time.boundary_given = true;
    m.spec.time.resolved = true;
    const auto& s = j.at("spec");
    m.spec.time_name = s.at("time_name").get<std::string>();
    m.spec.terms = s.at("terms").get<std::vector<std::string>>();
    m.spec.interactions = s.at("interactions").get<std::vector<std::string>>();
    m.spec.reference_levels = s.at("reference_levels").get<std::map<std::string, std::string>>();
    m.spec.levels = s.at("levels").get<std::map<std::string, std::vector<std::string>>>();
    m.causes = j.at("causes").get<int>();
    m.column_names = j.at("column_names").get<std::vector<std::string>>();
    if (m.causes < 1) fail(ErrorKind::data, "corrupted model file: causes must be >= 1");
    const auto p = static_cast<Eigen::Index>(m.column_names.size());
    m.coefficients = matrix_from_json(j.at("coefficients"), m.causes, p, "coefficients");
    m.covariance = matrix_from_json(j.at("covariance"), m.causes * p, m.causes * p, "covariance");
    m.offset_value = j.at("offset_value").get<double>();
    const auto& f = j.at("fit_stats");
    m.fit.deviance = f.at("deviance").get<double>();
    m.fit.null_deviance = f.at("null_deviance").get<double>();
    m.fit.aic = f.at("aic").get<double>();
    m.fit.iterations = f.at("iterations").get<int>();
    m.fit.converged = f.at("converged").get<bool>();
    m.fit.gradient_norm = f.at("gradient_norm").get<double>();
    m.fit.n_obs = f.at("n_obs").get<std::size_t>();
    m.data_fingerprint = j.at("data_fingerprint").get<std::uint64_t>();
    if (j.contains("penalty")) {
      const auto& pe = j["penalty"];
      m.penalty = PenaltyInfo{pe.at("alpha").get<double>(), pe.at("lambda").get<double>(),
                              pe.at("penalty_factors").get<std::vector<double>>()};
    }
    m.spec.time.validate();
    if (design_column_names(m.spec) != m.column_names)
      fail(ErrorKind::data, "corrupted model file: column names do not match the model spec");
    return m;
  } catch (const json::exception& e) {
    fail(ErrorKind::data, std::string("corrupted model file: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::invalid_argument) fail(ErrorKind::data, std::string("corrupted model file: ") + e.what());
    throw;
  }
}

void save_model(const HazardModel& model, const std::filesystem::path& path) {
  write_file(path, serialize_model(model));
}

HazardModel load_model(const std::filesystem::path& path) { return deserialize_model(read_file(path)); }

}  // namespace casebase
