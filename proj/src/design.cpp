#include "casebase/design.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "casebase/error.hpp"
#include "casebase/table.hpp"

namespace casebase {

const char* to_string(TimeKind kind) noexcept {
  switch (kind) {
    case TimeKind::constant: return "constant";
    case TimeKind::linear: return "linear";
    case TimeKind::log: return "log";
    case TimeKind::bspline: return "bspline";
  }
  return "unknown";
}

std::size_t TimeBasis::n_columns() const noexcept {
  switch (kind) {
    case TimeKind::constant: return 0;
    case TimeKind::linear:
    case TimeKind::log: return 1;
    case TimeKind::bspline:
      if (resolved || knots_given) return static_cast<std::size_t>(degree) + interior_knots.size();
      return static_cast<std::size_t>(df > 0 ? df : degree);
  }
  return 0;
}

std::vector<std::string> TimeBasis::column_names(const std::string& time_name) const {
  switch (kind) {
    case TimeKind::constant: return {};
    case TimeKind::linear: return {time_name};
    case TimeKind::log: return {"log(" + time_name + ")"};
    case TimeKind::bspline: {
      std::vector<std::string> names;
      for (std::size_t k = 1; k <= n_columns(); ++k) names.push_back("bs(" + time_name + ")" + std::to_string(k));
      return names;
    }
  }
  return {};
}

void TimeBasis::validate() const {
  if (kind == TimeKind::log && !(epsilon > 0.0))
    fail(ErrorKind::invalid_argument, "log time basis needs a positive epsilon guard");
  if (kind != TimeKind::bspline) return;
  if (degree < 1) fail(ErrorKind::invalid_argument, "spline degree must be >= 1");
  if (!(lower < upper) || !std::isfinite(lower) || !std::isfinite(upper))
    fail(ErrorKind::invalid_argument, "degenerate knot vector: boundary knots must satisfy lower < upper");
  for (std::size_t k = 0; k < interior_knots.size(); ++k) {
    const double knot = interior_knots[k];
    if (!(knot > lower && knot < upper))
      fail(ErrorKind::invalid_argument, "degenerate knot vector: interior knot " + format_real(knot) +
                                            " not strictly inside the boundary knots");
    if (k > 0 && !(knot > interior_knots[k - 1]))
      fail(ErrorKind::invalid_argument, "degenerate knot vector: interior knots must be strictly increasing");
  }
}

std::vector<double> bspline_basis(double x, int degree, std::span<const double> interior,
                                  double lower, double upper) {
  const auto p = static_cast<std::size_t>(degree);
  const std::size_t n_basis = interior.size() + p + 1;
  std::vector<double> knots;
  knots.reserve(n_basis + p + 1);
  knots.insert(knots.end(), p + 1, lower);
  knots.insert(knots.end(), interior.begin(), interior.end());
  knots.insert(knots.end(), p + 1, upper);

  x = std::clamp(x, lower, upper);
  // Knot span i with knots[i] <= x < knots[i+1]; the right end uses the last span.
  std::size_t span = n_basis - 1;
  if (x < upper) {
    const auto it = std::upper_bound(knots.begin() + static_cast<std::ptrdiff_t>(p),
                                     knots.begin() + static_cast<std::ptrdiff_t>(n_basis + 1), x);
    span = static_cast<std::size_t>(it - knots.begin()) - 1;
  }

  // Triangular de Boor scheme; N[r] ends up holding B_{span-p+r}.
  std::vector<double> N(p + 1, 0.0), left(p + 1, 0.0), right(p + 1, 0.0);
  N[0] = 1.0;
  for (std::size_t j = 1; j <= p; ++j) {
    left[j] = x - knots[span + 1 - j];
    right[j] = knots[span + j] - x;
    double saved = 0.0;
    for (std::size_t r = 0; r < j; ++r) {
      const double temp = N[r] / (right[r + 1] + left[j - r]);
      N[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    N[j] = saved;
  }
  std::vector<double> out(n_basis, 0.0);
  for (std::size_t r = 0; r <= p; ++r) out[span - p + r] = N[r];
  return out;
}

void time_basis_row(const TimeBasis& basis, double t, std::span<double> out) {
  if (!std::isfinite(t)) fail(ErrorKind::data, "non-finite time passed to the time basis");
  switch (basis.kind) {
    case TimeKind::constant: return;
    case TimeKind::linear: out[0] = t; return;
    case TimeKind::log: out[0] = std::log(std::max(t, basis.epsilon)); return;
    case TimeKind::bspline: {
      const auto all = bspline_basis(t, basis.degree, basis.interior_knots, basis.lower, basis.upper);
      // Drop the first function: the intercept lives in the model.
      std::copy(all.begin() + 1, all.end(), out.begin());
      return;
    }
  }
}

Eigen::MatrixXd build_time_basis(const TimeBasis& basis, std::span<const double> times) {
  if (!basis.resolved) fail(ErrorKind::invalid_argument, "time basis must be resolved before evaluation");
  basis.validate();
  const std::size_t k = basis.n_columns();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(times.size()), static_cast<Eigen::Index>(k));
  std::vector<double> row(k);
  for (std::size_t i = 0; i < times.size(); ++i) {
    time_basis_row(basis, times[i], row);
    for (std::size_t c = 0; c < k; ++c) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = row[c];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Term language

namespace {

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t depth = 0, start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i < s.size() && s[i] == '(') ++depth;
    if (i < s.size() && s[i] == ')' && depth) --depth;
    if (i == s.size() || (s[i] == sep && depth == 0)) {
      auto piece = trim(s.substr(start, i - start));
      if (!piece.empty()) out.push_back(std::move(piece));
      start = i + 1;
    }
  }
  return out;
}

double parse_number(const std::string& text, const std::string& what) {
  double v = 0.0;
  if (!parse_real(text, v)) fail(ErrorKind::invalid_argument, "invalid number '" + text + "' for " + what);
  return v;
}

int parse_int(const std::string& text, const std::string& what) {
  const double v = parse_number(text, what);
  if (v != std::floor(v)) fail(ErrorKind::invalid_argument, what + " must be an integer");
  return static_cast<int>(v);
}

TimeBasis parse_time(const std::string& text) {
  TimeBasis basis;
  const auto open = text.find('(');
  const std::string head = trim(text.substr(0, open));
  std::string args;
  if (open != std::string::npos) {
    if (text.back() != ')') fail(ErrorKind::invalid_argument, "unbalanced parentheses in '" + text + "'");
    args = text.substr(open + 1, text.size() - open - 2);
  }
  if (head == "constant" || head == "none" || head == "exponential") basis.kind = TimeKind::constant;
  else if (head == "linear" || head == "gompertz") basis.kind = TimeKind::linear;
  else if (head == "log" || head == "weibull") basis.kind = TimeKind::log;
  else if (head == "bspline" || head == "bs") basis.kind = TimeKind::bspline;
  else fail(ErrorKind::invalid_argument, "unknown time basis '" + head + "'");
  if (!args.empty() && basis.kind != TimeKind::bspline)
    fail(ErrorKind::invalid_argument, "time basis '" + head + "' takes no arguments");
  for (const auto& arg : split(args, ',')) {
    const auto eq = arg.find('=');
    if (eq == std::string::npos) fail(ErrorKind::invalid_argument, "expected key=value in '" + arg + "'");
    const std::string key = trim(arg.substr(0, eq));
    const std::string value = trim(arg.substr(eq + 1));
    if (key == "df") {
      basis.df = parse_int(value, "df");
    } else if (key == "degree") {
      basis.degree = parse_int(value, "degree");
    } else if (key == "knots") {
      basis.knots_given = true;
      for (const auto& k : split(value, '|')) {
        const double knot = parse_number(k, "knots");
        if (!basis.interior_knots.empty() && !(knot > basis.interior_knots.back()))
          fail(ErrorKind::invalid_argument, "interior knots must be strictly increasing");
        basis.interior_knots.push_back(knot);
      }
    } else if (key == "boundary") {
      const auto b = split(value, '|');
      if (b.size() != 2) fail(ErrorKind::invalid_argument, "boundary expects lower|upper");
      basis.lower = parse_number(b[0], "boundary");
      basis.upper = parse_number(b[1], "boundary");
      basis.boundary_given = true;
    } else {
      fail(ErrorKind::invalid_argument, "unknown spline argument '" + key + "'");
    }
  }
  if (basis.kind == TimeKind::bspline) {
    if (basis.degree < 1) fail(ErrorKind::invalid_argument, "spline degree must be >= 1");
    if (basis.df == 0) basis.df = basis.knots_given ? basis.degree + static_cast<int>(basis.interior_knots.size())
                                                    : basis.degree;
    if (basis.df < basis.degree) fail(ErrorKind::invalid_argument, "spline df must be >= degree");
    if (basis.knots_given && basis.df != basis.degree + static_cast<int>(basis.interior_knots.size()))
      fail(ErrorKind::invalid_argument, "spline df must equal degree + number of knots");
  }
  return basis;
}

}  // namespace

ModelSpec parse_model_spec(std::string_view text) {
  ModelSpec spec;
  for (const auto& part : split(text, ';')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos) fail(ErrorKind::invalid_argument, "expected key=value in model spec part '" + part + "'");
    const std::string key = trim(part.substr(0, eq));
    const std::string value = trim(part.substr(eq + 1));
    if (key == "time") {
      spec.time = parse_time(value);
    } else if (key == "terms") {
      for (auto& t : split(value, ',')) spec.terms.push_back(std::move(t));
    } else if (key == "interactions") {
      for (const auto& item : split(value, ',')) {
        auto pieces = split(item, ':');
        std::erase(pieces, "time");
        std::erase(pieces, spec.time_name);
        if (pieces.size() != 1)
          fail(ErrorKind::invalid_argument, "interaction '" + item + "' must pair one covariate with time");
        spec.interactions.push_back(pieces[0]);
      }
    } else if (key == "ref") {
      for (const auto& item : split(value, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) fail(ErrorKind::invalid_argument, "ref expects column:level, got '" + item + "'");
        spec.reference_levels[trim(item.substr(0, colon))] = trim(item.substr(colon + 1));
      }
    } else {
      fail(ErrorKind::invalid_argument, "unknown model spec key '" + key + "'");
    }
  }
  for (std::size_t i = 0; i < spec.terms.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (spec.terms[i] == spec.terms[j]) fail(ErrorKind::invalid_argument, "duplicate term '" + spec.terms[i] + "'");
  for (std::size_t i = 0; i < spec.interactions.size(); ++i) {
    const auto& name = spec.interactions[i];
    if (std::find(spec.terms.begin(), spec.terms.end(), name) == spec.terms.end())
      fail(ErrorKind::invalid_argument, "interaction covariate '" + name + "' must also be listed in terms");
    for (std::size_t j = 0; j < i; ++j)
      if (spec.interactions[j] == name) fail(ErrorKind::invalid_argument, "duplicate interaction '" + name + "'");
  }
  return spec;
}

std::string format_model_spec(const ModelSpec& spec) {
  std::ostringstream out;
  out << "time=" << to_string(spec.time.kind);
  if (spec.time.kind == TimeKind::bspline) {
    out << "(df=" << spec.time.n_columns() << ",degree=" << spec.time.degree;
    if (spec.time.resolved || spec.time.knots_given) {
      out << ",knots=";
      for (std::size_t k = 0; k < spec.time.interior_knots.size(); ++k)
        out << (k ? "|" : "") << format_real(spec.time.interior_knots[k]);
    }
    if (spec.time.resolved || spec.time.boundary_given)
      out << ",boundary=" << format_real(spec.time.lower) << "|" << format_real(spec.time.upper);
    out << ")";
  }
  if (!spec.terms.empty()) {
    out << ";terms=";
    for (std::size_t i = 0; i < spec.terms.size(); ++i) out << (i ? "," : "") << spec.terms[i];
  }
  if (!spec.interactions.empty()) {
    out << ";interactions=";
    for (std::size_t i = 0; i < spec.interactions.size(); ++i) out << (i ? "," : "") << spec.interactions[i] << ":time";
  }
  if (!spec.reference_levels.empty()) {
    out << ";ref=";
    bool first = true;
    for (const auto& [k, v] : spec.reference_levels) {
      out << (first ? "" : ",") << k << ":" << v;
      first = false;
    }
  }
  return out.str();
}

double quantile_sorted(std::span<const double> sorted, double probability) {
  if (sorted.empty()) fail(ErrorKind::invalid_argument, "quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * probability;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

ModelSpec resolve_spec(const ModelSpec& requested, const PersonMomentTable& table) {
  ModelSpec spec = requested;
  spec.levels.clear();
  for (const auto& name : spec.terms) {
    const auto* column = table.covariates.find(name);
    if (!column) fail(ErrorKind::data, "model term '" + name + "' not found in the person-moment table");
    if (column->categorical) {
      spec.levels[name] = column->levels;
      auto ref = spec.reference_levels.find(name);
      if (ref == spec.reference_levels.end()) {
        spec.reference_levels[name] = column->reference;
      } else if (column->level_index(ref->second) < 0) {
        fail(ErrorKind::data, "reference level '" + ref->second + "' not observed in '" + name + "'");
      }
    }
  }
  for (auto it = spec.reference_levels.begin(); it != spec.reference_levels.end();) {
    if (!spec.levels.count(it->first)) {
      if (std::find(spec.terms.begin(), spec.terms.end(), it->first) != spec.terms.end())
        fail(ErrorKind::invalid_argument, "reference level given for numeric term '" + it->first + "'");
      it = spec.reference_levels.erase(it);
    } else {
      ++it;
    }
  }

  TimeBasis& basis = spec.time;
  double tau = table.tau;
  if (!(tau > 0.0) && table.size())
    tau = *std::max_element(table.moment_times.begin(), table.moment_times.end());
  basis.epsilon = 1e-8 * (tau > 0.0 ? tau : 1.0);
  if (basis.kind == TimeKind::bspline && !basis.resolved) {
    std::vector<double> case_times;
    for (std::size_t r = 0; r < table.size(); ++r)
      if (table.event_indicators[r] > 0) case_times.push_back(table.moment_times[r]);
    std::sort(case_times.begin(), case_times.end());
    if (!basis.boundary_given) {
      basis.lower = 0.0;
      if (!case_times.empty()) basis.upper = case_times.back();
      else if (table.size()) basis.upper = *std::max_element(table.moment_times.begin(), table.moment_times.end());
    }
    if (!basis.knots_given) {
      const int n_interior = basis.df - basis.degree;
      basis.interior_knots.clear();
      if (n_interior > 0) {
        if (case_times.empty()) fail(ErrorKind::data, "spline knots need at least one case-series moment");
        for (int k = 1; k <= n_interior; ++k)
          basis.interior_knots.push_back(quantile_sorted(case_times, static_cast<double>(k) / (n_interior + 1)));
      }
    }
  }
  basis.resolved = true;
  basis.validate();
  return spec;
}

// ---------------------------------------------------------------------------
// Design matrices

namespace {

struct EncodedTerm {
  std::string name;
  bool categorical = false;
  std::vector<std::string> levels;   // non-reference levels, in order
  std::vector<std::string> columns;  // column names
};

std::vector<EncodedTerm> encode_terms(const ModelSpec& spec) {
  std::vector<EncodedTerm> out;
  for (const auto& name : spec.terms) {
    EncodedTerm term;
    term.name = name;
    const auto lv = spec.levels.find(name);
    if (lv != spec.levels.end()) {
      term.categorical = true;
      const std::string& ref = spec.reference_levels.at(name);
      for (const auto& level : lv->second)
        if (level != ref) {
          term.levels.push_back(level);
          term.columns.push_back(name + level);
        }
    } else {
      term.columns.push_back(name);
    }
    out.push_back(std::move(term));
  }
  return out;
}

const EncodedTerm& find_term(const std::vector<EncodedTerm>& terms, const std::string& name) {
  for (const auto& t : terms)
    if (t.name == name) return t;
  fail(ErrorKind::invalid_argument, "interaction covariate '" + name + "' is not a model term");
}

void require_resolved(const ModelSpec& spec) {
  if (!spec.resolved()) fail(ErrorKind::invalid_argument, "model spec must be resolved against data first");
}

/// Fills one design row given time-basis values and encoded term values.
void assemble_row(const ModelSpec& spec, const std::vector<EncodedTerm>& terms, std::span<const double> tb,
                  const std::vector<std::vector<double>>& term_values, double* out) {
  std::size_t c = 0;
  out[c++] = 1.0;
  for (double v : tb) out[c++] = v;
  for (const auto& values : term_values)
    for (double v : values) out[c++] = v;
  for (const auto& name : spec.interactions) {
    std::size_t index = 0;
    while (terms[index].name != name) ++index;
    for (double e : term_values[index])
      for (double v : tb) out[c++] = v * e;
  }
}

}  // namespace

std::vector<std::string> design_column_names(const ModelSpec& spec) {
  require_resolved(spec);
  const auto terms = encode_terms(spec);
  const auto time_cols = spec.time.column_names(spec.time_name);
  std::vector<std::string> names = {"(Intercept)"};
  names.insert(names.end(), time_cols.begin(), time_cols.end());
  for (const auto& t : terms) names.insert(names.end(), t.columns.begin(), t.columns.end());
  for (const auto& name : spec.interactions) {
    const auto& term = find_term(terms, name);
    for (const auto& e : term.columns)
      for (const auto& tc : time_cols) names.push_back(tc + ":" + e);
  }
  return names;
}

std::size_t design_width(const ModelSpec& spec) { return design_column_names(spec).size(); }

std::vector<std::size_t> design_time_columns(const ModelSpec& spec) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < spec.time.n_columns(); ++k) out.push_back(1 + k);
  return out;
}

DesignMatrix build_design_matrix(const PersonMomentTable& table, const ModelSpec& spec) {
  require_resolved(spec);
  const auto terms = encode_terms(spec);
  DesignMatrix dm;
  dm.column_names = design_column_names(spec);
  dm.time_columns = design_time_columns(spec);
  const std::size_t n = table.size();
  const std::size_t p = dm.column_names.size();

  // Per-term accessor: numeric column or a code -> encoded-column map.
  struct Source {
    const CovariateColumn* column;
    std::vector<int> code_to_slot;  // -1 = reference level
  };
  std::vector<Source> sources;
  for (const auto& term : terms) {
    const auto* column = table.covariates.find(term.name);
    if (!column) fail(ErrorKind::data, "model term '" + term.name + "' not found in the person-moment table");
    Source src{column, {}};
    if (term.categorical != column->categorical)
      fail(ErrorKind::data, "term '" + term.name + "' changed type between fit and data");
    if (term.categorical) {
      const std::string& ref = spec.reference_levels.at(term.name);
      for (const auto& level : column->levels) {
        int slot = -1;
        if (level != ref) {
          const auto it = std::find(term.levels.begin(), term.levels.end(), level);
          if (it == term.levels.end())
            fail(ErrorKind::data, "unseen level '" + level + "' of categorical term '" + term.name + "'");
          slot = static_cast<int>(it - term.levels.begin());
        }
        src.code_to_slot.push_back(slot);
      }
    }
    sources.push_back(std::move(src));
  }

  // Row-major fill, then copy into the column-major Eigen matrix.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows(
      static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  std::vector<double> tb(spec.time.n_columns());
  std::vector<std::vector<double>> values(terms.size());
  for (std::size_t t = 0; t < terms.size(); ++t) values[t].resize(terms[t].columns.size());
  for (std::size_t r = 0; r < n; ++r) {
    time_basis_row(spec.time, table.moment_times[r], tb);
    for (std::size_t t = 0; t < terms.size(); ++t) {
      if (terms[t].categorical) {
        std::fill(values[t].begin(), values[t].end(), 0.0);
        const int slot = sources[t].code_to_slot[static_cast<std::size_t>(sources[t].column->codes[r])];
        if (slot >= 0) values[t][static_cast<std::size_t>(slot)] = 1.0;
      } else {
        values[t][0] = sources[t].column->values[r];
      }
    }
    assemble_row(spec, terms, tb, values, rows.row(static_cast<Eigen::Index>(r)).data());
  }
  dm.X = rows;
  dm.y.resize(static_cast<Eigen::Index>(n));
  dm.offset.resize(static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < n; ++r) {
    dm.y(static_cast<Eigen::Index>(r)) = table.event_indicators[r];
    dm.offset(static_cast<Eigen::Index>(r)) = table.offsets[r];
  }
  if (n > 0) {
    for (std::size_t c = 1; c < p; ++c) {
      const auto col = dm.X.col(static_cast<Eigen::Index>(c));
      if (col.maxCoeff() == col.minCoeff()) dm.constant_columns.push_back(dm.column_names[c]);
    }
  }
  return dm;
}

Eigen::VectorXd design_row(const ModelSpec& spec, double t, const Profile& profile) {
  require_resolved(spec);
  const auto terms = encode_terms(spec);
  std::vector<double> tb(spec.time.n_columns());
  time_basis_row(spec.time, t, tb);
  std::vector<std::vector<double>> values(terms.size());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const auto& term = terms[i];
    const auto it = profile.find(term.name);
    if (it == profile.end()) fail(ErrorKind::data, "profile is missing covariate '" + term.name + "'");
    values[i].assign(term.columns.size(), 0.0);
    if (term.categorical) {
      std::string level;
      if (const auto* s = std::get_if<std::string>(&it->second)) {
        level = *s;
      } else {
        // Numeric value for a categorical term: match a level with that numeric value.
        const double v = std::get<double>(it->second);
        const auto& all = spec.levels.at(term.name);
        level = format_real(v);
        for (const auto& l : all) {
          double lv = 0.0;
          if (parse_real(l, lv) && lv == v) level = l;
        }
      }
      const auto& all = spec.levels.at(term.name);
      if (std::find(all.begin(), all.end(), level) == all.end())
        fail(ErrorKind::data, "unseen level '" + level + "' of categorical term '" + term.name + "'");
      const auto slot = std::find(term.levels.begin(), term.levels.end(), level);
      if (slot != term.levels.end()) values[i][static_cast<std::size_t>(slot - term.levels.begin())] = 1.0;
    } else {
      if (const auto* d = std::get_if<double>(&it->second)) {
        values[i][0] = *d;
      } else {
        double v = 0.0;
        if (!parse_real(std::get<std::string>(it->second), v))
          fail(ErrorKind::data, "profile value for numeric covariate '" + term.name + "' is not a number");
        values[i][0] = v;
      }
    }
  }
  Eigen::VectorXd row(static_cast<Eigen::Index>(design_width(spec)));
  assemble_row(spec, terms, tb, values, row.data());
  return row;
}

}  // namespace casebase
