#include "gemflow/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>
#include <vector>

#include "gemflow/errors.hpp"

namespace gemflow {

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_number(std::string_view text, double& out) {
  text = trim(text);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  return res.ec == std::errc() && res.ptr == text.data() + text.size();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

[[noreturn]] void fail(const std::string& source, std::size_t line_no, const std::string& what) {
  throw IoError(source + ":" + std::to_string(line_no) + ": " + what);
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string points_to_csv(const PointBatch& batch) {
  std::string out;
  if (batch.cols() == 2) {
    out = "x,y\n";
  } else {
    for (Eigen::Index c = 0; c < batch.cols(); ++c) out += (c ? ",x" : "x") + std::to_string(c + 1);
    out += '\n';
  }
  for (Eigen::Index i = 0; i < batch.rows(); ++i) {
    for (Eigen::Index c = 0; c < batch.cols(); ++c) {
      if (c) out += ',';
      out += format_double(batch(i, c));
    }
    out += '\n';
  }
  return out;
}

void write_points_csv(const std::filesystem::path& path, const PointBatch& batch) {
  write_text_atomic(path, points_to_csv(batch));
}

PointBatch parse_points_csv(const std::string& text, const std::string& source) {
  const auto lines = lines_of(text);
  std::vector<std::vector<double>> rows;
  std::size_t width = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string_view line = trim(lines[i]);
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    std::vector<double> values(fields.size());
    bool numeric = true;
    for (std::size_t c = 0; c < fields.size(); ++c)
      if (!parse_number(fields[c], values[c])) numeric = false;
    if (!numeric) {
      if (rows.empty() && width == 0 && i == 0) {
        width = fields.size();  // header
        continue;
      }
      fail(source, i + 1, "malformed row '" + std::string(line) + "'");
    }
    if (width == 0) width = fields.size();
    if (fields.size() != width)
      fail(source, i + 1, "expected " + std::to_string(width) + " fields, found " + std::to_string(fields.size()));
    for (double v : values)
      if (!std::isfinite(v)) fail(source, i + 1, "non-finite coordinate");
    rows.push_back(std::move(values));
  }
  PointBatch out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < width; ++c) out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return out;
}

PointBatch read_points_csv(const std::filesystem::path& path) { return parse_points_csv(read_text(path), path.string()); }

std::string record_to_csv(const RunRecord& record) {
  std::string out = "iter,loss,grad_norm,w2,mmd\n";
  for (const auto& row : record.rows()) {
    out += std::to_string(row.iter) + ',' + format_double(row.loss) + ',' + format_double(row.grad_norm) + ',' +
           format_double(row.w2) + ',' + format_double(row.mmd) + '\n';
  }
  return out;
}

RunRecord parse_record_csv(const std::string& text, const std::string& source) {
  const auto lines = lines_of(text);
  RunRecord record;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string_view line = trim(lines[i]);
    if (line.empty()) continue;
    if (i == 0 && line.starts_with("iter")) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 5) fail(source, i + 1, "expected 5 fields");
    double v[5];
    for (std::size_t c = 0; c < 5; ++c)
      if (!parse_number(fields[c], v[c])) fail(source, i + 1, "malformed number '" + std::string(fields[c]) + "'");
    DiagRow row;
    row.iter = static_cast<int>(v[0]);
    row.loss = v[1];
    row.grad_norm = v[2];
    row.w2 = v[3];
    row.mmd = v[4];
    try {
      record.append(row);
    } catch (const InvalidArgument& e) {
      fail(source, i + 1, e.what());
    }
  }
  return record;
}

std::string grid_to_csv(const DensityGrid& grid) {
  std::string out = "# kde x_min=" + format_double(grid.x_min) + " x_max=" + format_double(grid.x_max) +
                    " y_min=" + format_double(grid.y_min) + " y_max=" + format_double(grid.y_max) +
                    " nx=" + std::to_string(grid.nx) + " ny=" + std::to_string(grid.ny) + '\n';
  for (int iy = 0; iy < grid.ny; ++iy) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      if (ix) out += ',';
      out += format_double(grid.values(iy, ix));
    }
    out += '\n';
  }
  return out;
}

DensityGrid parse_grid_csv(const std::string& text, const std::string& source) {
  const auto lines = lines_of(text);
  if (lines.empty() || !std::string_view(lines[0]).starts_with("# kde")) fail(source, 1, "missing '# kde' header");
  DensityGrid grid;
  bool seen[6] = {};
  for (auto token : split(trim(std::string_view(lines[0]).substr(5)), ' ')) {
    if (token.empty()) continue;
    const auto eq = token.find('=');
    if (eq == std::string_view::npos) fail(source, 1, "malformed header token");
    const auto key = token.substr(0, eq);
    double value = 0.0;
    if (!parse_number(token.substr(eq + 1), value)) fail(source, 1, "malformed header value");
    if (key == "x_min") grid.x_min = value, seen[0] = true;
    else if (key == "x_max") grid.x_max = value, seen[1] = true;
    else if (key == "y_min") grid.y_min = value, seen[2] = true;
    else if (key == "y_max") grid.y_max = value, seen[3] = true;
    else if (key == "nx") grid.nx = static_cast<int>(value), seen[4] = true;
    else if (key == "ny") grid.ny = static_cast<int>(value), seen[5] = true;
    else fail(source, 1, "unknown header key '" + std::string(key) + "'");
  }
  for (bool s : seen)
    if (!s) fail(source, 1, "incomplete header");
  if (grid.nx < 1 || grid.ny < 1) fail(source, 1, "grid resolution must be positive");
  grid.values.resize(grid.ny, grid.nx);
  int row = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string_view line = trim(lines[i]);
    if (line.empty()) continue;
    if (row >= grid.ny) fail(source, i + 1, "more rows than ny");
    const auto fields = split(line, ',');
    if (fields.size() != static_cast<std::size_t>(grid.nx)) fail(source, i + 1, "row width differs from nx");
    for (int c = 0; c < grid.nx; ++c) {
      double v = 0.0;
      if (!parse_number(fields[static_cast<std::size_t>(c)], v)) fail(source, i + 1, "malformed number");
      grid.values(row, c) = v;
    }
    ++row;
  }
  if (row != grid.ny) fail(source, lines.size(), "fewer rows than ny");
  return grid;
}

}  // namespace gemflow
