#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <tuple>

#include "chartlab/cli.hpp"

namespace chartlab {
namespace {

constexpr double kPanel = 400, kMargin = 30, kTitle = 24;

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

struct Frame {
  Eigen::Vector2d lo, center;
  double scale;
};

// Uniform scale so the point cloud fills 90% of the panel, y pointing up.
Frame fit(const Points2& p) {
  const Eigen::Vector2d lo = p.colwise().minCoeff().transpose(), hi = p.colwise().maxCoeff().transpose();
  const double range = (hi - lo).maxCoeff();
  return {lo, (lo + hi) / 2, range > 0 ? 0.9 * kPanel / range : 0.0};
}

void panel(std::ostringstream& s, const Points2& p, const std::vector<std::string>& colors, double x0,
           const std::string& id, const std::string& title) {
  const Frame f = fit(p);
  const double cx = kPanel / 2, cy = kTitle + kMargin + kPanel / 2;
  s << "<g id=\"" << id << "\" transform=\"translate(" << x0 << " 0)\">\n";
  s << "<rect x=\"0\" y=\"" << kTitle + kMargin << "\" width=\"" << kPanel << "\" height=\"" << kPanel
    << "\" fill=\"none\" stroke=\"#999999\"/>\n";
  s << "<text x=\"" << cx << "\" y=\"" << kTitle + kMargin - 8 << "\" text-anchor=\"middle\">" << title << "</text>\n";
  for (Index l = 0; l < p.rows(); ++l) {
    const double x = cx + (p(l, 0) - f.center(0)) * f.scale;
    const double y = cy - (p(l, 1) - f.center(1)) * f.scale;
    s << "<circle cx=\"" << fmt("%.2f", x) << "\" cy=\"" << fmt("%.2f", y) << "\" r=\"2.5\" fill=\""
      << colors[static_cast<std::size_t>(l)] << "\"/>\n";
  }
  s << "</g>\n";
}

std::string escape(const std::string& in) {
  std::string out;
  for (char c : in) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out += c;
  }
  return out;
}

std::string cell(const std::string& s, std::size_t width) { return s + std::string(width > s.size() ? width - s.size() : 1, ' '); }

}  // namespace

Eigen::Vector3i position_color(double u, double v) {
  u = std::clamp(u, 0.0, 1.0);
  v = std::clamp(v, 0.0, 1.0);
  // HSL with hue in [0, 300) degrees so the map stays one-to-one
  const double h = 300.0 * u / 60.0, s = 0.85, l = 0.25 + 0.5 * v;
  const double c = (1 - std::abs(2 * l - 1)) * s;
  const double x = c * (1 - std::abs(std::fmod(h, 2.0) - 1));
  Eigen::Vector3d rgb;
  if (h < 1) rgb = {c, x, 0};
  else if (h < 2) rgb = {x, c, 0};
  else if (h < 3) rgb = {0, c, x};
  else if (h < 4) rgb = {0, x, c};
  else rgb = {x, 0, c};
  rgb.array() += l - c / 2;
  return (rgb * 255).array().round().cast<int>().cwiseMax(0).cwiseMin(255);
}

std::string render_chart_svg(const ChannelChart& chart, const Points2& truth) {
  if (chart.size() != truth.rows())
    throw DataError("chart has " + std::to_string(chart.size()) + " points but ground truth has " +
                    std::to_string(truth.rows()));
  if (truth.rows() == 0) throw DataError("nothing to plot");
  const Eigen::Vector2d lo = truth.colwise().minCoeff().transpose(), hi = truth.colwise().maxCoeff().transpose();
  std::vector<std::string> colors;
  colors.reserve(static_cast<std::size_t>(truth.rows()));
  for (Index l = 0; l < truth.rows(); ++l) {
    const double u = hi(0) > lo(0) ? (truth(l, 0) - lo(0)) / (hi(0) - lo(0)) : 0.5;
    const double v = hi(1) > lo(1) ? (truth(l, 1) - lo(1)) / (hi(1) - lo(1)) : 0.5;
    const Eigen::Vector3i c = position_color(u, v);
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c(0), c(1), c(2));
    colors.emplace_back(buf);
  }

  const double width = 3 * kMargin + 2 * kPanel, height = kTitle + 2 * kMargin + kPanel;
  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width << "\" height=\"" << height
    << "\" viewBox=\"0 0 " << width << " " << height << "\" font-family=\"sans-serif\" font-size=\"14\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  panel(s, truth, colors, kMargin, "truth", "ground truth");
  std::string title = "channel chart";
  if (!chart.method.empty() || !chart.metric_tag.empty()) title += " (" + chart.method + ", " + chart.metric_tag + ")";
  panel(s, chart.z, colors, 2 * kMargin + kPanel, "chart", escape(title));
  s << "</svg>\n";
  return s.str();
}

void plot_chart(const ChannelChart& chart, const Points2& truth, const std::filesystem::path& out_path) {
  const std::string svg = render_chart_svg(chart, truth);
  std::ofstream f(out_path, std::ios::trunc);
  if (!f) throw DataError("cannot open " + out_path.string() + " for writing");
  f << svg;
  if (!f) throw DataError("failed writing " + out_path.string());
}

std::string report_tables(const std::vector<EvalReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("a table needs at least one report");
  std::vector<const EvalReport*> rows;
  for (const auto& r : reports) rows.push_back(&r);
  std::stable_sort(rows.begin(), rows.end(), [](const EvalReport* a, const EvalReport* b) {
    return std::tie(a->method, a->metric_tag) < std::tie(b->method, b->metric_tag);
  });
  auto name = [](const std::string& s) { return s.empty() ? std::string("-") : s; };
  std::size_t wm = 8, wd = 8;
  for (const auto* r : rows) {
    wm = std::max(wm, name(r->method).size() + 2);
    wd = std::max(wd, name(r->metric_tag).size() + 2);
  }
  std::ostringstream s;
  s << cell("Method", wm) << cell("Metric", wd) << "CT↑     TW↑     KS↓     RD↓     MAE↓\n";
  for (const auto* r : rows) {
    s << cell(name(r->method), wm) << cell(name(r->metric_tag), wd);
    for (double v : {r->ct, r->tw, r->ks, r->rd}) s << fmt("%.4f", v) << "  ";
    s << (r->mae ? fmt("%.4f", *r->mae) : std::string("-")) << "\n";
  }
  return s.str();
}

std::vector<TableRow> parse_table(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<TableRow> rows;
  bool header = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (!header) {
      if (tok.front() != "Method") throw DataError("table header is missing");
      header = true;
      continue;
    }
    if (tok.size() != 7) throw DataError("table row has " + std::to_string(tok.size()) + " fields, expected 7");
    TableRow r;
    r.method = tok[0] == "-" ? "" : tok[0];
    r.metric = tok[1] == "-" ? "" : tok[1];
    try {
      r.ct = std::stod(tok[2]);
      r.tw = std::stod(tok[3]);
      r.ks = std::stod(tok[4]);
      r.rd = std::stod(tok[5]);
      if (tok[6] != "-") r.mae = std::stod(tok[6]);
    } catch (const std::exception&) {
      throw DataError("table row has a non-numeric score: " + line);
    }
    rows.push_back(r);
  }
  if (!header) throw DataError("table header is missing");
  return rows;
}

}  // namespace chartlab
