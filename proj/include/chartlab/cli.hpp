#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "chartlab/chart.hpp"
#include "chartlab/evaluation.hpp"

namespace chartlab {

/// Entry point of the chartlab tool. Returns 0 on success, 1 on usage errors,
/// 2 on data errors and 3 on numerical failures. Results are logged to out as
/// one JSON object; diagnostics go to err.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Two-panel SVG: ground truth on the left, chart on the right. Each point is
/// colored by its normalized ground-truth position (hue from x, lightness
/// from y). Throws DataError when the sizes differ.
std::string render_chart_svg(const ChannelChart& chart, const Points2& truth);
void plot_chart(const ChannelChart& chart, const Points2& truth, const std::filesystem::path& out_path);

/// sRGB color of a normalized position in [0, 1]^2.
Eigen::Vector3i position_color(double u, double v);

struct TableRow {
  std::string method;
  std::string metric;
  double ct = 0, tw = 0, ks = 0, rd = 0;
  std::optional<double> mae;
};

/// Fixed-width table with columns CT, TW, KS, RD and MAE, one row per report,
/// sorted by method then metric (stable).
std::string report_tables(const std::vector<EvalReport>& reports);
/// Inverse of report_tables. Throws DataError on malformed text.
std::vector<TableRow> parse_table(const std::string& text);

}  // namespace chartlab
