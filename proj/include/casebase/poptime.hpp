#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "casebase/dataset.hpp"
#include "casebase/sampling.hpp"
#include "casebase/table.hpp"

namespace casebase {

struct PopTimeOptions {
  std::optional<std::string> exposure;  // categorical column to facet by
  std::uint64_t seed = 1;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// One facet. Subject rank 1 has the longest follow-up and occupies the band
/// y in [0, 1]; shorter follow-up stacks above, so the shortest is on top.
struct StratumArea {
  std::string label;
  std::vector<double> boundary;     // follow-up times, bottom to top
  std::vector<std::string> subjects; // subject ids, bottom to top
  std::vector<Point> polygon;       // closed step outline, counter-clockwise
  double person_time = 0.0;
};

struct CasePoint {
  std::size_t stratum = 0;
  std::string subject_id;
  double t = 0.0;
  double y = 0.0;
  int cause = 1;
};

struct BasePoint {
  std::size_t stratum = 0;
  std::string subject_id;
  double t = 0.0;
  double y = 0.0;
};

struct PopTimeLayout {
  std::vector<StratumArea> strata;
  std::vector<CasePoint> cases;
  std::vector<BasePoint> bases;
  std::uint64_t seed = 1;
};

/// Case points sit at (follow-up time, uniform height below the at-risk count);
/// base points at (sampled moment, their subject's band centre).
PopTimeLayout poptime_layout(const SurvivalDataset& data, const PopTimeOptions& options = {},
                             const PersonMomentTable* base = nullptr);

struct SvgStyle {
  int width = 720;
  int facet_height = 280;
  std::string area_fill = "#c8c8c8";
  std::string case_fill = "#d7301f";
  std::string base_fill = "#2b8cbe";
  double point_radius = 1.8;
};

std::string render_svg(const PopTimeLayout& layout, const SvgStyle& style = {});

/// Long format: kind (area | case | base), stratum, subject_id, t, y, cause.
Table layout_table(const PopTimeLayout& layout);

/// Shoelace area of a closed polygon.
double polygon_area(const std::vector<Point>& polygon);

}  // namespace casebase
