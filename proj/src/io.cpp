#include "casebase/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "casebase/error.hpp"
#include "json.hpp"

namespace casebase {

namespace {

using nlohmann::json;

bool is_missing(const std::string& cell) {
  std::string_view v = cell;
  while (!v.empty() && v.front() == ' ') v.remove_prefix(1);
  while (!v.empty() && v.back() == ' ') v.remove_suffix(1);
  return v.empty() || v == "NA" || v == "NaN";
}

int parse_event_code(const std::string& cell, std::size_t row) {
  double v = 0.0;
  if (!parse_real(cell, v) || v != std::floor(v) || std::fabs(v) > 1e6)
    fail(ErrorKind::data, "row " + std::to_string(row + 1) + ": event code '" + cell + "' is not an integer");
  return static_cast<int>(v);
}

/// Sorted level set: numeric order when every level parses as a number.
std::vector<std::string> sorted_levels(const std::vector<std::string>& cells) {
  std::vector<std::string> levels(cells);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  std::vector<double> numbers(levels.size());
  bool all_numeric = true;
  for (std::size_t i = 0; i < levels.size() && all_numeric; ++i)
    all_numeric = parse_real(levels[i], numbers[i]);
  if (all_numeric) {
    std::vector<std::size_t> order(levels.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return numbers[a] < numbers[b]; });
    std::vector<std::string> out;
    for (auto i : order) out.push_back(levels[i]);
    return out;
  }
  return levels;
}

CovariateColumn make_factor(const std::string& name, const std::vector<std::string>& cells,
                            std::vector<std::string> levels, const std::string* reference) {
  std::vector<int> codes(cells.size());
  for (std::size_t r = 0; r < cells.size(); ++r) {
    const auto it = std::find(levels.begin(), levels.end(), cells[r]);
    if (it == levels.end())
      fail(ErrorKind::data, "row " + std::to_string(r + 1) + ": level '" + cells[r] +
                                "' not among declared levels of '" + name + "'");
    codes[r] = static_cast<int>(it - levels.begin());
  }
  std::string ref = levels.empty() ? std::string{} : levels.front();
  if (reference) {
    if (std::find(levels.begin(), levels.end(), *reference) == levels.end())
      fail(ErrorKind::data, "reference level '" + *reference + "' not observed in column '" + name + "'");
    ref = *reference;
  }
  return CovariateColumn::factor(name, std::move(codes), std::move(levels), std::move(ref));
}

/// Parse every column not in `skip` as a covariate.
Covariates parse_covariates(const RawTable& raw, const std::vector<std::string>& skip,
                            const std::set<std::string>& categorical,
                            const std::map<std::string, std::string>& references,
                            const std::map<std::string, std::vector<std::string>>* declared_levels) {
  Covariates out;
  for (std::size_t c = 0; c < raw.header.size(); ++c) {
    const std::string& name = raw.header[c];
    if (std::find(skip.begin(), skip.end(), name) != skip.end()) continue;
    if (out.find(name)) fail(ErrorKind::data, "duplicate column '" + name + "'");
    std::vector<std::string> cells(raw.rows.size());
    std::vector<double> numbers(raw.rows.size());
    bool numeric = !categorical.count(name) && !references.count(name);
    for (std::size_t r = 0; r < raw.rows.size(); ++r) {
      cells[r] = raw.rows[r][c];
      if (is_missing(cells[r]))
        fail(ErrorKind::data, "row " + std::to_string(r + 1) + ": missing value in column '" + name + "'");
      if (numeric && !parse_real(cells[r], numbers[r])) numeric = false;
    }
    if (numeric && declared_levels && declared_levels->count(name)) numeric = false;
    const auto ref = references.find(name);
    if (numeric) {
      for (double v : numbers)
        if (!std::isfinite(v)) fail(ErrorKind::data, "non-finite value in column '" + name + "'");
      out.columns.push_back(CovariateColumn::numeric(name, std::move(numbers)));
    } else {
      std::vector<std::string> levels;
      if (declared_levels && declared_levels->count(name)) levels = declared_levels->at(name);
      else levels = sorted_levels(cells);
      out.columns.push_back(
          make_factor(name, cells, std::move(levels), ref == references.end() ? nullptr : &ref->second));
    }
  }
  for (const auto& [name, level] : references)
    if (!out.find(name) && std::find(skip.begin(), skip.end(), name) == skip.end())
      fail(ErrorKind::data, "reference level given for missing column '" + name + "'");
  return out;
}

std::size_t require_column(const RawTable& raw, const std::string& name) {
  const auto idx = raw.find(name);
  if (idx < 0) fail(ErrorKind::data, "missing column '" + name + "'");
  return static_cast<std::size_t>(idx);
}

void covariate_columns_to_table(const Covariates& cov, Table& table) {
  for (const auto& c : cov.columns) {
    if (c.categorical) {
      std::vector<std::string> text(c.size());
      for (std::size_t r = 0; r < c.size(); ++r) text[r] = c.levels[static_cast<std::size_t>(c.codes[r])];
      table.add_column(c.name, std::move(text));
    } else {
      table.add_column(c.name, c.values);
    }
  }
}

}  // namespace

SurvivalDataset parse_dataset(const RawTable& raw, const ColumnSchema& schema) {
  schema.validate();
  const std::size_t time_idx = require_column(raw, schema.time_column);
  const std::size_t event_idx = require_column(raw, schema.event_column);
  // Without an explicit id column, a column literally named "id" is the id.
  std::optional<std::string> id_name = schema.id_column;
  if (!id_name && raw.find("id") >= 0) id_name = "id";
  std::optional<std::size_t> id_idx;
  if (id_name) id_idx = require_column(raw, *id_name);
  for (const auto& name : schema.categorical_columns) require_column(raw, name);
  if (raw.rows.empty()) fail(ErrorKind::data, "dataset has no rows");

  SurvivalDataset data;
  data.time_name = schema.time_column;
  data.event_name = schema.event_column;
  data.id_name = id_name.value_or("id");
  const std::size_t n = raw.rows.size();
  data.followup_times.resize(n);
  data.event_types.resize(n);
  data.subject_ids.resize(n);
  int max_code = 0;
  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = raw.rows[r];
    if (is_missing(row[time_idx]))
      fail(ErrorKind::data, "row " + std::to_string(r + 1) + ": missing follow-up time");
    if (!parse_real(row[time_idx], data.followup_times[r]))
      fail(ErrorKind::data, "row " + std::to_string(r + 1) + ": non-numeric time '" + row[time_idx] + "'");
    if (!std::isfinite(data.followup_times[r]))
      fail(ErrorKind::data, "row " + std::to_string(r + 1) + ": non-finite follow-up time");
    if (!(data.followup_times[r] > 0.0))
      fail(ErrorKind::data, "row " + std::to_string(r + 1) + ": non-positive follow-up time");
    if (is_missing(row[event_idx]))
      fail(ErrorKind::data, "row " + std::to_string(r + 1) + ": missing event code");
    const int code = parse_event_code(row[event_idx], r);
    if (code < 0)
      fail(ErrorKind::data, "row " + std::to_string(r + 1) + ": event code " + std::to_string(code) + " is negative");
    max_code = std::max(max_code, code);
    data.event_types[r] = code;
    data.subject_ids[r] = id_idx ? row[*id_idx] : std::to_string(r + 1);
    if (id_idx && is_missing(data.subject_ids[r]))
      fail(ErrorKind::data, "row " + std::to_string(r + 1) + ": missing subject id");
  }
  data.n_causes = schema.n_causes.value_or(std::max(max_code, 1));
  if (max_code > data.n_causes)
    fail(ErrorKind::data, "event code " + std::to_string(max_code) + " outside 0.." + std::to_string(data.n_causes));
  data.tau = schema.tau.value_or(*std::max_element(data.followup_times.begin(), data.followup_times.end()));

  std::vector<std::string> skip = {schema.time_column, schema.event_column};
  if (id_name) skip.push_back(*id_name);
  data.covariates = parse_covariates(raw, skip, schema.categorical_columns, schema.reference_levels, nullptr);
  data.validate(true);
  return data;
}

SurvivalDataset load_dataset(const std::filesystem::path& path, const ColumnSchema& schema) {
  return parse_dataset(read_table(path, schema.delimiter), schema);
}

Table dataset_table(const SurvivalDataset& data) {
  Table t;
  t.add_column(data.id_name, data.subject_ids);
  t.add_column(data.time_name, data.followup_times);
  t.add_column(data.event_name, std::vector<long long>(data.event_types.begin(), data.event_types.end()));
  covariate_columns_to_table(data.covariates, t);
  return t;
}

void save_dataset(const SurvivalDataset& data, const std::filesystem::path& path, char delimiter) {
  write_table(dataset_table(data), path, delimiter);
}

bool is_moment_table(const RawTable& raw) {
  for (const char* name : kMomentColumns)
    if (raw.find(name) < 0) return false;
  return true;
}

bool is_moment_table(const std::filesystem::path& path, char delimiter) {
  const std::string text = read_file(path);
  const auto eol = text.find('\n');
  return is_moment_table(parse_table(std::string_view(text).substr(0, eol), delimiter));
}

std::filesystem::path meta_sidecar(const std::filesystem::path& path) {
  return path.string() + ".meta.json";
}

Table moments_table(const PersonMomentTable& table) {
  Table t;
  t.add_column("subject_id", table.subject_ids);
  t.add_column("moment_time", table.moment_times);
  t.add_column("event_indicator",
               std::vector<long long>(table.event_indicators.begin(), table.event_indicators.end()));
  t.add_column("offset", table.offsets);
  covariate_columns_to_table(table.covariates, t);
  return t;
}

void save_moments(const PersonMomentTable& table, const std::filesystem::path& path, char delimiter) {
  write_table(moments_table(table), path, delimiter);
  json meta;
  meta["format"] = "casebase-moments";
  meta["version"] = 1;
  meta["person_time"] = table.meta.person_time;
  meta["base_size"] = table.meta.base_size;
  meta["ratio"] = table.meta.ratio;
  meta["seed"] = table.meta.seed;
  meta["tau"] = table.tau;
  meta["n_causes"] = table.n_causes;
  json cats = json::object();
  for (const auto& c : table.covariates.columns)
    if (c.categorical) cats[c.name] = {{"levels", c.levels}, {"reference", c.reference}};
  meta["categorical"] = cats;
  write_file(meta_sidecar(path), meta.dump(2) + "\n");
}

PersonMomentTable load_moments(const std::filesystem::path& path, char delimiter) {
  const RawTable raw = read_table(path, delimiter);
  if (!is_moment_table(raw)) fail(ErrorKind::data, "'" + path.string() + "' is not a person-moment table");

  std::optional<json> meta;
  if (std::filesystem::exists(meta_sidecar(path))) {
    try {
      meta = json::parse(read_file(meta_sidecar(path)));
    } catch (const json::exception& e) {
      fail(ErrorKind::data, "corrupted moments sidecar: " + std::string(e.what()));
    }
    if (meta->value("format", "") != "casebase-moments" || meta->value("version", 0) != 1)
      fail(ErrorKind::version, "unsupported moments sidecar version");
  }

  PersonMomentTable t;
  const std::size_t n = raw.rows.size();
  const auto id = static_cast<std::size_t>(raw.find("subject_id"));
  const auto time = static_cast<std::size_t>(raw.find("moment_time"));
  const auto ind = static_cast<std::size_t>(raw.find("event_indicator"));
  const auto off = static_cast<std::size_t>(raw.find("offset"));
  t.subject_ids.resize(n);
  t.moment_times.resize(n);
  t.event_indicators.resize(n);
  t.offsets.resize(n);
  int max_code = 0;
  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = raw.rows[r];
    t.subject_ids[r] = row[id];
    if (!parse_real(row[time], t.moment_times[r]) || !(t.moment_times[r] > 0.0))
      fail(ErrorKind::data, "row " + std::to_string(r + 1) + ": invalid moment_time '" + row[time] + "'");
    t.event_indicators[r] = parse_event_code(row[ind], r);
    if (t.event_indicators[r] < 0) fail(ErrorKind::data, "row " + std::to_string(r + 1) + ": negative event indicator");
    max_code = std::max(max_code, t.event_indicators[r]);
    if (!parse_real(row[off], t.offsets[r]) || !std::isfinite(t.offsets[r]))
      fail(ErrorKind::data, "row " + std::to_string(r + 1) + ": invalid offset '" + row[off] + "'");
  }

  std::map<std::string, std::vector<std::string>> levels;
  std::map<std::string, std::string> references;
  std::set<std::string> categorical;
  if (meta) {
    for (const auto& [name, spec] : (*meta)["categorical"].items()) {
      levels[name] = spec.at("levels").get<std::vector<std::string>>();
      references[name] = spec.at("reference").get<std::string>();
      categorical.insert(name);
    }
  }
  std::vector<std::string> skip(std::begin(kMomentColumns), std::end(kMomentColumns));
  t.covariates = parse_covariates(raw, skip, categorical, references, &levels);

  const std::size_t base = t.count(0);
  if (meta) {
    t.meta.person_time = meta->at("person_time").get<double>();
    t.meta.base_size = meta->at("base_size").get<std::size_t>();
    t.meta.ratio = meta->at("ratio").get<double>();
    t.meta.seed = meta->at("seed").get<std::uint64_t>();
    t.tau = meta->at("tau").get<double>();
    t.n_causes = meta->at("n_causes").get<int>();
    if (max_code > t.n_causes) fail(ErrorKind::data, "event indicator exceeds declared number of causes");
  } else {
    t.n_causes = std::max(max_code, 1);
    t.tau = n ? *std::max_element(t.moment_times.begin(), t.moment_times.end()) : 0.0;
    t.meta.base_size = base;
    t.meta.person_time = n ? static_cast<double>(base) * std::exp(t.offsets.front()) : 0.0;
    const std::size_t cases = n - base;
    t.meta.ratio = cases ? static_cast<double>(base) / static_cast<double>(cases) : 0.0;
  }
  return t;
}

}  // namespace casebase
