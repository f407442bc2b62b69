#include "plmm/svg_plot.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace plmm {

namespace {

constexpr double kLogFloor = 1e-300;

const char* kPalette[] = {
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
};
constexpr int kPaletteSize = 10;

// Shortest round-trip decimal; used for every number the SVG carries so the
// output never depends on locale or printf quirks.
void append_number(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

void append_int(std::string& out, std::int64_t v) {
  char buf[24];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

// Pixel coordinates rounded to 1/100 px keep the file compact and stable.
void append_pixel(std::string& out, double v) {
  append_number(out, std::round(v * 100.0) / 100.0);
}

std::string escape_xml(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (const char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Conventional "nice number" tick spacing for the linear x axis.
double nice_step(double span, int target_ticks) {
  if (span <= 0.0) return 1.0;
  const double raw = span / std::max(1, target_ticks);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double frac = raw / mag;
  double nice = 10.0;
  if (frac <= 1.0) nice = 1.0;
  else if (frac <= 2.0) nice = 2.0;
  else if (frac <= 5.0) nice = 5.0;
  return nice * mag;
}

}  // namespace

std::string emit_plot(const std::vector<Series>& series, const PlotOptions& options) {
  if (series.empty()) {
    throw std::invalid_argument("emit_plot: at least one series is required");
  }
  for (const Series& s : series) {
    for (std::size_t i = 1; i < s.points.size(); ++i) {
      if (s.points[i].first <= s.points[i - 1].first) {
        throw std::invalid_argument("emit_plot: series '" + s.label +
                                    "' is not strictly increasing in sfo");
      }
    }
  }

  const double width = options.width;
  const double height = options.height;
  const double ml = 78.0, mr = 24.0, mt = 46.0, mb = 58.0;
  const double pw = width - ml - mr;
  const double ph = height - mt - mb;

  // Data ranges; log-y clamps non-positive values to the floor.
  std::int64_t x_min = 0, x_max = 1;
  double y_min = 0.0, y_max = 1.0;
  bool have_pt = false;
  std::int64_t clamped = 0;
  for (const Series& s : series) {
    for (const auto& [sfo, raw] : s.points) {
      double v = raw;
      if (options.log_y && !(v > 0.0)) {
        v = kLogFloor;
        ++clamped;
      }
      if (!have_pt) {
        x_min = x_max = sfo;
        y_min = y_max = v;
        have_pt = true;
      } else {
        x_min = std::min(x_min, sfo);
        x_max = std::max(x_max, sfo);
        y_min = std::min(y_min, v);
        y_max = std::max(y_max, v);
      }
    }
  }
  if (!have_pt) {
    x_min = 0;
    x_max = 1;
    y_min = options.log_y ? 1e-1 : 0.0;
    y_max = 1.0;
  }
  if (x_max == x_min) x_max = x_min + 1;
  if (y_max == y_min) {
    if (options.log_y) {
      y_max *= 10.0;
      y_min /= 10.0;
    } else {
      y_max += 1.0;
      y_min -= 1.0;
    }
  }

  const double lx_min = options.log_y ? std::log10(y_min) : y_min;
  const double lx_max = options.log_y ? std::log10(y_max) : y_max;

  const auto x_px = [&](double sfo) {
    return ml + (sfo - static_cast<double>(x_min)) /
                    (static_cast<double>(x_max) - static_cast<double>(x_min)) * pw;
  };
  const auto y_px = [&](double v) {
    const double t = options.log_y ? std::log10(v) : v;
    return mt + (lx_max - t) / (lx_max - lx_min) * ph;
  };

  std::string svg;
  svg.reserve(4096);
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"";
  append_number(svg, width);
  svg += "\" height=\"";
  append_number(svg, height);
  svg += "\" viewBox=\"0 0 ";
  append_number(svg, width);
  svg += " ";
  append_number(svg, height);
  svg += "\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"";
  append_number(svg, width);
  svg += "\" height=\"";
  append_number(svg, height);
  svg += "\" fill=\"white\"/>\n";

  if (!options.title.empty()) {
    svg += "<text x=\"";
    append_pixel(svg, width / 2.0);
    svg += "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">";
    svg += escape_xml(options.title);
    svg += "</text>\n";
  }

  // Axes box.
  svg += "<rect x=\"";
  append_pixel(svg, ml);
  svg += "\" y=\"";
  append_pixel(svg, mt);
  svg += "\" width=\"";
  append_pixel(svg, pw);
  svg += "\" height=\"";
  append_pixel(svg, ph);
  svg += "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";

  // x ticks.
  const double step = nice_step(static_cast<double>(x_max - x_min), 5);
  const double tick0 = std::ceil(static_cast<double>(x_min) / step) * step;
  for (double t = tick0; t <= static_cast<double>(x_max) + 1e-9 * step; t += step) {
    const double px = x_px(t);
    svg += "<line x1=\"";
    append_pixel(svg, px);
    svg += "\" y1=\"";
    append_pixel(svg, mt + ph);
    svg += "\" x2=\"";
    append_pixel(svg, px);
    svg += "\" y2=\"";
    append_pixel(svg, mt + ph + 5.0);
    svg += "\" stroke=\"#333333\" stroke-width=\"1\"/>\n<text x=\"";
    append_pixel(svg, px);
    svg += "\" y=\"";
    append_pixel(svg, mt + ph + 19.0);
    svg += "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">";
    append_number(svg, t);
    svg += "</text>\n";
  }

  // y ticks: whole decades under log scale, else a nice linear grid.
  if (options.log_y) {
    const int dec_lo = static_cast<int>(std::ceil(lx_min - 1e-9));
    const int dec_hi = static_cast<int>(std::floor(lx_max + 1e-9));
    int stride = 1;
    if (dec_hi - dec_lo > 8) stride = (dec_hi - dec_lo + 7) / 8;
    for (int dec = dec_lo; dec <= dec_hi; dec += stride) {
      const double py = y_px(std::pow(10.0, dec));
      svg += "<line x1=\"";
      append_pixel(svg, ml - 5.0);
      svg += "\" y1=\"";
      append_pixel(svg, py);
      svg += "\" x2=\"";
      append_pixel(svg, ml);
      svg += "\" y2=\"";
      append_pixel(svg, py);
      svg += "\" stroke=\"#333333\" stroke-width=\"1\"/>\n<text x=\"";
      append_pixel(svg, ml - 9.0);
      svg += "\" y=\"";
      append_pixel(svg, py + 4.0);
      svg += "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1e";
      append_int(svg, dec);
      svg += "</text>\n";
    }
  } else {
    const double ystep = nice_step(y_max - y_min, 5);
    const double y0 = std::ceil(y_min / ystep) * ystep;
    for (double t = y0; t <= y_max + 1e-9 * ystep; t += ystep) {
      const double py = y_px(t);
      svg += "<line x1=\"";
      append_pixel(svg, ml - 5.0);
      svg += "\" y1=\"";
      append_pixel(svg, py);
      svg += "\" x2=\"";
      append_pixel(svg, ml);
      svg += "\" y2=\"";
      append_pixel(svg, py);
      svg += "\" stroke=\"#333333\" stroke-width=\"1\"/>\n<text x=\"";
      append_pixel(svg, ml - 9.0);
      svg += "\" y=\"";
      append_pixel(svg, py + 4.0);
      svg += "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">";
      append_number(svg, t);
      svg += "</text>\n";
    }
  }

  // Axis labels.
  svg += "<text x=\"";
  append_pixel(svg, ml + pw / 2.0);
  svg += "\" y=\"";
  append_pixel(svg, height - 14.0);
  svg += "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">";
  svg += escape_xml(options.x_label);
  svg += "</text>\n";
  if (!options.y_label.empty()) {
    svg += "<text x=\"18\" y=\"";
    append_pixel(svg, mt + ph / 2.0);
    svg += "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 ";
    append_pixel(svg, mt + ph / 2.0);
    svg += ")\">";
    svg += escape_xml(options.y_label);
    svg += "</text>\n";
  }

  // Data polylines.
  int color_idx = 0;
  for (const Series& s : series) {
    const char* color = kPalette[color_idx % kPaletteSize];
    ++color_idx;
    if (!s.points.empty()) {
      svg += "<polyline fill=\"none\" stroke=\"";
      svg += color;
      svg += "\" stroke-width=\"1.5\" points=\"";
      bool first = true;
      for (const auto& [sfo, raw] : s.points) {
        double v = raw;
        if (options.log_y && !(v > 0.0)) v = kLogFloor;
        if (!first) svg += " ";
        first = false;
        append_pixel(svg, x_px(static_cast<double>(sfo)));
        svg += ",";
        append_pixel(svg, y_px(v));
      }
      svg += "\"/>\n";
    }
  }

  // Legend, one row per series, labels verbatim.
  double ly = mt + 10.0;
  color_idx = 0;
  for (const Series& s : series) {
    const char* color = kPalette[color_idx % kPaletteSize];
    ++color_idx;
    svg += "<rect x=\"";
    append_pixel(svg, ml + pw - 180.0);
    svg += "\" y=\"";
    append_pixel(svg, ly - 9.0);
    svg += "\" width=\"18\" height=\"4\" fill=\"";
    svg += color;
    svg += "\"/>\n<text x=\"";
    append_pixel(svg, ml + pw - 156.0);
    svg += "\" y=\"";
    append_pixel(svg, ly - 3.0);
    svg += "\" font-family=\"sans-serif\" font-size=\"12\">";
    svg += escape_xml(s.label);
    svg += "</text>\n";
    ly += 18.0;
  }

  if (clamped > 0) {
    svg += "<text x=\"";
    append_pixel(svg, ml + 6.0);
    svg += "\" y=\"";
    append_pixel(svg, mt + ph - 8.0);
    svg += "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#a00000\">log scale: ";
    append_int(svg, clamped);
    svg += " non-positive value(s) clamped to 1e-300</text>\n";
  }

  svg += "</svg>\n";
  return svg;
}

}  // namespace plmm
