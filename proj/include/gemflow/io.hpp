#pragma once

#include <filesystem>
#include <string>

#include "gemflow/flow.hpp"
#include "gemflow/metrics.hpp"
#include "gemflow/types.hpp"

namespace gemflow {

/// Shortest decimal that round-trips to the same double ("nan"/"inf" for non-finite).
std::string format_double(double value);

/// Write via a temporary file in the same directory, then rename.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Header "x,y" for 2D batches, "x1,...,xm" otherwise.
std::string points_to_csv(const PointBatch& batch);
void write_points_csv(const std::filesystem::path& path, const PointBatch& batch);
/// Skips one non-numeric header line; throws IoError naming the offending line.
PointBatch read_points_csv(const std::filesystem::path& path);
PointBatch parse_points_csv(const std::string& text, const std::string& source = "<csv>");

/// Columns iter,loss,grad_norm,w2,mmd.
std::string record_to_csv(const RunRecord& record);
RunRecord parse_record_csv(const std::string& text, const std::string& source = "<csv>");

/// First line "# kde x_min=.. x_max=.. y_min=.. y_max=.. nx=.. ny=..", then ny rows of nx values.
std::string grid_to_csv(const DensityGrid& grid);
DensityGrid parse_grid_csv(const std::string& text, const std::string& source = "<csv>");

}  // namespace gemflow
