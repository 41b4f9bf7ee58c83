#pragma once

#include <string>

#include "gemflow/flow.hpp"
#include "gemflow/metrics.hpp"
#include "gemflow/types.hpp"

namespace gemflow {

/// One circle per point, mapped into a square canvas over the padded bounding box.
std::string scatter_svg(const PointBatch& points, int size = 400);

/// Cell rectangles coloured by a black -> red -> yellow -> white ramp on value / max.
std::string heatmap_svg(const DensityGrid& grid, int size = 400);

/// Colour of the heat ramp at t in [0,1] as "#rrggbb".
std::string heat_color(double t);

/// Two stacked panels (loss, gradient norm) against iteration, with axes.
std::string trace_svg(const RunRecord& record, int width = 600, int panel_height = 220);

}  // namespace gemflow
