#include "casebase/poptime.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <unordered_map>

#include "casebase/error.hpp"
#include "casebase/random.hpp"

namespace casebase {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string escape_xml(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Round tick step: 1, 2, or 5 times a power of ten.
double nice_step(double range, int target) {
  const double raw = range / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) return m * mag;
  return 10.0 * mag;
}

}  // namespace

double polygon_area(const std::vector<Point>& polygon) {
  double twice = 0.0;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    const Point& a = polygon[i];
    const Point& b = polygon[(i + 1) % polygon.size()];
    twice += a.x * b.y - b.x * a.y;
  }
  return 0.5 * std::abs(twice);
}

PopTimeLayout poptime_layout(const SurvivalDataset& data, const PopTimeOptions& options,
                             const PersonMomentTable* base) {
  const std::size_t n = data.size();
  if (n == 0) fail(ErrorKind::data, "population-time plot needs at least one subject");
  std::vector<std::size_t> stratum_of(n, 0);
  std::vector<std::string> labels{"all"};
  if (options.exposure) {
    const CovariateColumn* col = data.covariates.find(*options.exposure);
    if (!col) fail(ErrorKind::invalid_argument, "exposure column '" + *options.exposure + "' not found");
    if (!col->categorical)
      fail(ErrorKind::invalid_argument, "exposure column '" + *options.exposure + "' is not categorical");
    labels = col->levels;
    for (std::size_t i = 0; i < n; ++i) stratum_of[i] = static_cast<std::size_t>(col->codes[i]);
  }

  PopTimeLayout layout;
  layout.seed = options.seed;
  layout.strata.resize(labels.size());
  std::vector<std::size_t> rank(n, 0);  // 1-based within stratum
  std::vector<std::vector<std::size_t>> members(labels.size());
  for (std::size_t i = 0; i < n; ++i) members[stratum_of[i]].push_back(i);
  for (std::size_t s = 0; s < labels.size(); ++s) {
    auto& m = members[s];
    std::stable_sort(m.begin(), m.end(),
                     [&](std::size_t a, std::size_t b) { return data.followup_times[a] > data.followup_times[b]; });
    StratumArea& area = layout.strata[s];
    area.label = labels[s];
    area.polygon.push_back({0.0, 0.0});
    for (std::size_t r = 0; r < m.size(); ++r) {
      const double t = data.followup_times[m[r]];
      rank[m[r]] = r + 1;
      area.boundary.push_back(t);
      area.subjects.push_back(data.subject_ids[m[r]]);
      area.person_time += t;
      area.polygon.push_back({t, static_cast<double>(r)});
      area.polygon.push_back({t, static_cast<double>(r + 1)});
    }
    if (!m.empty()) area.polygon.push_back({0.0, static_cast<double>(m.size())});
  }

  CounterRng rng(options.seed, streams::jitter);
  for (std::size_t i = 0; i < n; ++i) {
    if (data.event_types[i] <= 0) continue;
    const std::size_t s = stratum_of[i];
    const double t = data.followup_times[i];
    const auto& bound = layout.strata[s].boundary;
    // Subjects still at risk at t are exactly the ranks whose follow-up is >= t.
    const auto at_risk = static_cast<double>(
        std::upper_bound(bound.begin(), bound.end(), t, std::greater<double>()) - bound.begin());
    rng.seek(i);
    layout.cases.push_back({s, data.subject_ids[i], t, at_risk * rng.uniform_open_low(), data.event_types[i]});
  }

  if (base) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) index.emplace(data.subject_ids[i], i);
    for (std::size_t r = 0; r < base->size(); ++r) {
      if (base->event_indicators[r] != 0) continue;
      const auto it = index.find(base->subject_ids[r]);
      if (it == index.end())
        fail(ErrorKind::data, "base series subject '" + base->subject_ids[r] + "' is not in the dataset");
      const std::size_t i = it->second;
      if (base->moment_times[r] > data.followup_times[i])
        fail(ErrorKind::data, "base moment beyond follow-up for subject '" + base->subject_ids[r] + "'");
      layout.bases.push_back({stratum_of[i], base->subject_ids[r], base->moment_times[r],
                              static_cast<double>(rank[i]) - 0.5});
    }
  }
  return layout;
}

std::string render_svg(const PopTimeLayout& layout, const SvgStyle& style) {
  const double margin_left = 60.0, margin_right = 20.0, margin_top = 30.0, margin_bottom = 40.0;
  const double plot_w = style.width - margin_left - margin_right;
  const double plot_h = style.facet_height - margin_top - margin_bottom;
  double t_max = 0.0;
  for (const auto& s : layout.strata)
    if (!s.boundary.empty()) t_max = std::max(t_max, s.boundary.front());
  if (!(t_max > 0.0)) t_max = 1.0;
  const double x_step = nice_step(t_max, 5);

  std::string out;
  const int total_h = style.facet_height * static_cast<int>(layout.strata.size());
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(style.width) + "\" height=\"" +
         std::to_string(total_h) + "\" viewBox=\"0 0 " + std::to_string(style.width) + " " +
         std::to_string(total_h) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (std::size_t s = 0; s < layout.strata.size(); ++s) {
    const StratumArea& area = layout.strata[s];
    const double top = static_cast<double>(s) * style.facet_height + margin_top;
    const double n_sub = std::max<double>(1.0, static_cast<double>(area.boundary.size()));
    auto px = [&](double t) { return margin_left + plot_w * t / t_max; };
    auto py = [&](double y) { return top + plot_h * (1.0 - y / n_sub); };

    out += "<g class=\"stratum\" id=\"stratum-" + std::to_string(s + 1) + "\">\n";
    out += "<text x=\"" + fmt(margin_left) + "\" y=\"" + fmt(top - 10.0) + "\" font-weight=\"bold\">" +
           escape_xml(area.label) + "</text>\n";
    out += "<polygon class=\"area\" fill=\"" + style.area_fill + "\" stroke=\"none\" points=\"";
    for (std::size_t k = 0; k < area.polygon.size(); ++k) {
      if (k) out += ' ';
      out += fmt(px(area.polygon[k].x)) + "," + fmt(py(area.polygon[k].y));
    }
    out += "\"/>\n";
    for (const auto& b : layout.bases)
      if (b.stratum == s)
        out += "<circle class=\"base\" cx=\"" + fmt(px(b.t)) + "\" cy=\"" + fmt(py(b.y)) + "\" r=\"" +
               fmt(style.point_radius) + "\" fill=\"" + style.base_fill + "\"/>\n";
    for (const auto& c : layout.cases)
      if (c.stratum == s)
        out += "<circle class=\"case\" cx=\"" + fmt(px(c.t)) + "\" cy=\"" + fmt(py(c.y)) + "\" r=\"" +
               fmt(style.point_radius) + "\" fill=\"" + style.case_fill + "\"/>\n";

    const double x0 = margin_left, x1 = margin_left + plot_w, y0 = top + plot_h;
    out += "<line class=\"axis\" x1=\"" + fmt(x0) + "\" y1=\"" + fmt(y0) + "\" x2=\"" + fmt(x1) + "\" y2=\"" +
           fmt(y0) + "\" stroke=\"black\"/>\n";
    out += "<line class=\"axis\" x1=\"" + fmt(x0) + "\" y1=\"" + fmt(top) + "\" x2=\"" + fmt(x0) + "\" y2=\"" +
           fmt(y0) + "\" stroke=\"black\"/>\n";
    for (int k = 0; k * x_step <= t_max * (1.0 + 1e-12); ++k) {
      const double t = k * x_step;
      out += "<text x=\"" + fmt(px(t)) + "\" y=\"" + fmt(y0 + 15.0) + "\" text-anchor=\"middle\">" + fmt(t) +
             "</text>\n";
    }
    out += "<text x=\"" + fmt(x0 - 8.0) + "\" y=\"" + fmt(top + 4.0) + "\" text-anchor=\"end\">" +
           std::to_string(area.boundary.size()) + "</text>\n";
    out += "<text x=\"" + fmt(x0 - 8.0) + "\" y=\"" + fmt(y0) + "\" text-anchor=\"end\">0</text>\n";
    out += "<text x=\"" + fmt(margin_left + plot_w / 2) + "\" y=\"" + fmt(y0 + 32.0) +
           "\" text-anchor=\"middle\">Follow-up time</text>\n";
    out += "</g>\n";
  }
  out += "</svg>\n";
  return out;
}

Table layout_table(const PopTimeLayout& layout) {
  std::vector<std::string> kind, stratum, subject;
  std::vector<double> t, y;
  std::vector<long long> cause;
  auto add = [&](const char* k, std::size_t s, const std::string& id, double x, double yy, long long c) {
    kind.emplace_back(k);
    stratum.push_back(layout.strata[s].label);
    subject.push_back(id);
    t.push_back(x);
    y.push_back(yy);
    cause.push_back(c);
  };
  for (std::size_t s = 0; s < layout.strata.size(); ++s)
    for (const auto& p : layout.strata[s].polygon) add("area", s, "", p.x, p.y, 0);
  for (const auto& c : layout.cases) add("case", c.stratum, c.subject_id, c.t, c.y, c.cause);
  for (const auto& b : layout.bases) add("base", b.stratum, b.subject_id, b.t, b.y, 0);
  Table table;
  table.add_column("kind", std::move(kind));
  table.add_column("stratum", std::move(stratum));
  table.add_column("subject_id", std::move(subject));
  table.add_column("t", std::move(t));
  table.add_column("y", std::move(y));
  table.add_column("cause", std::move(cause));
  return table;
}

}  // namespace casebase
