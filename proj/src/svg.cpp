#include "gemflow/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "gemflow/errors.hpp"

namespace gemflow {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string header(int w, int h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) + "\" height=\"" +
         std::to_string(h) + "\" viewBox=\"0 0 " + std::to_string(w) + " " + std::to_string(h) + "\">\n";
}

struct Range {
  double lo;
  double hi;
};

Range padded(double lo, double hi) {
  if (!(hi > lo)) return {lo - 1.0, hi + 1.0};
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

}  // namespace

std::string heat_color(double t) {
  t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0);
  // Three linear segments: black->red, red->yellow, yellow->white.
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
  if (t < 1.0 / 3.0) {
    r = 3.0 * t;
  } else if (t < 2.0 / 3.0) {
    r = 1.0;
    g = 3.0 * t - 1.0;
  } else {
    r = 1.0;
    g = 1.0;
    b = 3.0 * t - 2.0;
  }
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", static_cast<int>(std::lround(255 * r)),
                static_cast<int>(std::lround(255 * g)), static_cast<int>(std::lround(255 * b)));
  return buf;
}

std::string scatter_svg(const PointBatch& points, int size) {
  if (points.rows() == 0) throw InvalidArgument("scatter plot needs at least one point");
  if (points.cols() != 2) throw ShapeError("scatter plot needs 2D points");
  const Range xr = padded(points.col(0).minCoeff(), points.col(0).maxCoeff());
  const Range yr = padded(points.col(1).minCoeff(), points.col(1).maxCoeff());
  std::string out = header(size, size);
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double px = (points(i, 0) - xr.lo) / (xr.hi - xr.lo) * size;
    const double py = size - (points(i, 1) - yr.lo) / (yr.hi - yr.lo) * size;
    out += "<circle cx=\"" + num(px) + "\" cy=\"" + num(py) + "\" r=\"1.5\" fill=\"#1f4e9c\" fill-opacity=\"0.5\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

std::string heatmap_svg(const DensityGrid& grid, int size) {
  if (grid.values.rows() != grid.ny || grid.values.cols() != grid.nx || grid.nx < 1 || grid.ny < 1)
    throw ShapeError("heatmap grid values do not match its resolution");
  const double peak = grid.values.maxCoeff();
  const double cw = static_cast<double>(size) / grid.nx;
  const double ch = static_cast<double>(size) / grid.ny;
  std::string out = header(size, size);
  out += "<rect width=\"100%\" height=\"100%\" fill=\"black\"/>\n";
  for (int iy = 0; iy < grid.ny; ++iy) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      const double t = peak > 0.0 ? grid.values(iy, ix) / peak : 0.0;
      if (t <= 0.0) continue;
      // Row 0 is the lowest y, drawn at the bottom.
      out += "<rect x=\"" + num(ix * cw) + "\" y=\"" + num(size - (iy + 1) * ch) + "\" width=\"" + num(cw) +
             "\" height=\"" + num(ch) + "\" fill=\"" + heat_color(t) + "\"/>\n";
    }
  }
  out += "</svg>\n";
  return out;
}

std::string trace_svg(const RunRecord& record, int width, int panel_height) {
  if (record.empty()) throw InvalidArgument("trace plot needs at least one record row");
  const int margin = 50;
  const int height = 2 * panel_height;
  std::string out = header(width, height);
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  const double it_lo = record.rows().front().iter;
  const double it_hi = std::max(record.rows().back().iter, record.rows().front().iter + 1);

  auto panel = [&](int index, const char* label, auto getter, const char* colour) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& row : record.rows()) {
      const double v = getter(row);
      if (std::isfinite(v)) pts.emplace_back(row.iter, v);
    }
    const double top = index * panel_height;
    const double x0 = margin;
    const double x1 = width - 10;
    const double y0 = top + panel_height - 30;
    const double y1 = top + 15;
    out += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x1) + "\" y2=\"" + num(y0) +
           "\" stroke=\"black\"/>\n";
    out += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x0) + "\" y2=\"" + num(y1) +
           "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + num(x0 + 5) + "\" y=\"" + num(y1) + "\" font-size=\"12\">" + label + "</text>\n";
    out += "<text x=\"" + num(x0) + "\" y=\"" + num(y0 + 15) + "\" font-size=\"10\">" + num(it_lo) + "</text>\n";
    out += "<text x=\"" + num(x1 - 40) + "\" y=\"" + num(y0 + 15) + "\" font-size=\"10\">" + num(it_hi) + "</text>\n";
    if (pts.empty()) return;
    double lo = pts.front().second;
    double hi = lo;
    for (const auto& p : pts) {
      lo = std::min(lo, p.second);
      hi = std::max(hi, p.second);
    }
    const Range vr = padded(lo, hi);
    out += "<text x=\"2\" y=\"" + num(y0) + "\" font-size=\"10\">" + num(vr.lo) + "</text>\n";
    out += "<text x=\"2\" y=\"" + num(y1 + 10) + "\" font-size=\"10\">" + num(vr.hi) + "</text>\n";
    out += "<polyline fill=\"none\" stroke=\"" + std::string(colour) + "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double px = x0 + (pts[i].first - it_lo) / (it_hi - it_lo) * (x1 - x0);
      const double py = y0 - (pts[i].second - vr.lo) / (vr.hi - vr.lo) * (y0 - y1);
      out += (i ? " " : "") + num(px) + "," + num(py);
    }
    out += "\"/>\n";
  };
  panel(0, "LSDR fitting loss", [](const DiagRow& r) { return r.loss; }, "#c0392b");
  panel(1, "mean gradient norm", [](const DiagRow& r) { return r.grad_norm; }, "#1f4e9c");
  out += "</svg>\n";
  return out;
}

}  // namespace gemflow
