#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace plmm {

// One curve: metric value against cumulative SFO count.  Points must be
// strictly increasing in SFO.
struct Series {
  std::string label;
  std::vector<std::pair<std::int64_t, double>> points;
};

struct PlotOptions {
  std::string title;
  std::string x_label = "sfo";
  std::string y_label;
  bool log_y = true;
  int width = 880;
  int height = 560;
};

// Renders a self-contained SVG 1.1 document: one polyline per series, legend
// labels verbatim (XML-escaped), log-scale y axis by default.  Non-positive
// values cannot sit on a log axis; they are clamped to 1e-300 and the plot
// carries a note saying how many points were clamped.  Output is a pure
// function of the inputs, byte for byte.
std::string emit_plot(const std::vector<Series>& series, const PlotOptions& options);

}  // namespace plmm
