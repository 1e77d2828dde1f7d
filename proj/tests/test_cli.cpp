#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <tuple>
#include <sstream>

#include "chartlab/cli.hpp"
#include "chartlab/evaluation.hpp"
#include "chartlab/formats.hpp"
#include "chartlab/synth.hpp"
#include "helpers.hpp"

using namespace chartlab;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("chartlab-cli-" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct Result {
  int code;
  std::string out, err;
  nlohmann::json log() const { return nlohmann::json::parse(out); }
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "chartlab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(int(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const std::string& p, const std::string& text) { std::ofstream(p) << text; }

// Small square room with two arrays and a handful of reflectors.
void write_small_scene(const TempDir& dir) {
  SceneSpec s;
  s.arrays = {{{-0.5, 3}, 0.0, 4}, {{6.5, 3}, 3.14159265358979, 4}};
  s.subcarriers = 32;
  s.bandwidth_hz = 100e6;
  s.noise_db = -20;
  s.area = {{0, 0}, {6, 0}, {6, 6}, {0, 6}};
  s.scatterers = {{{3, -0.5}, 0.5}, {{3, 6.5}, 0.5}, {{1, 6.5}, 0.4}, {{5, -0.5}, 0.4}};
  spit(dir / "scene.json", to_json(s).dump());
  TrajectorySpec t;
  for (int r = 0; r < 6; ++r) {
    t.waypoints.push_back({r % 2 ? 5.5 : 0.5, 0.5 + r});
    t.waypoints.push_back({r % 2 ? 0.5 : 5.5, 0.5 + r});
  }
  t.standstills = {{3, 4.0}};
  t.speed = 0.5;
  t.interval = 0.5;
  t.max_samples = 150;
  spit(dir / "traj.json", to_json(t).dump());
}

std::vector<std::string> circles(const std::string& svg, const std::string& group) {
  const auto start = svg.find("<g id=\"" + group + "\"");
  const auto end = svg.find("</g>", start);
  REQUIRE(start != std::string::npos);
  const std::string body = svg.substr(start, end - start);
  std::vector<std::string> out;
  const std::regex re("<circle [^>]*/>");
  for (auto it = std::sregex_iterator(body.begin(), body.end(), re); it != std::sregex_iterator(); ++it)
    out.push_back(it->str());
  return out;
}

}  // namespace

TEST_CASE("unknown flags are usage errors and write nothing") {
  TempDir dir;
  const Result r = cli({"pipeline", "--out-dir", dir / "run", "--bogus"});
  CHECK(r.code == 1);
  CHECK(r.err.find("chartlab: error:") == 0);
  CHECK(r.err.find("Usage") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "run"));

  CHECK(cli({}).code == 1);
  CHECK(cli({"frobnicate"}).code == 1);
  CHECK(cli({"--help"}).code == 0);
  CHECK(cli({"--threads", "0", "synth"}).code == 1);

  // the installed tool reports the same code
  const std::string cmd = std::string(CHARTLAB_TOOL) + " dissim --bogus > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(status) == 1);
}

TEST_CASE("dissim writes a tagged matrix") {
  TempDir dir;
  write_dataset(dir / "ds.ccds", test::random_dataset(30, 2, 2, 64, 90));
  const Result r = cli({"dissim", "--in", dir / "ds.ccds", "--out", dir / "adp.ccdm", "--metric", "adp", "--tau-min",
                        "20", "--tau-max", "33"});
  REQUIRE(r.code == 0);
  nlohmann::json params;
  const DissimilarityMatrix D = read_matrix(dir / "adp.ccdm", &params);
  CHECK(D.tag.str() == "ADP");
  CHECK(D.size() == 30);
  CHECK(params["window"] == nlohmann::json{{"tau_min", 20}, {"tau_max", 33}});
  CHECK(r.log()["command"] == "dissim");
  CHECK(r.log()["results"]["metric_tag"] == "ADP");

  CHECK(cli({"dissim", "--in", dir / "ds.ccds", "--out", dir / "x.ccdm", "--metric", "nope"}).code == 1);
  CHECK(cli({"dissim", "--in", dir / "ds.ccds", "--out", dir / "x.ccdm", "--tau-min", "40", "--tau-max", "30"}).code !=
        0);
  const Result keep = cli({"dissim", "--in", dir / "ds.ccds", "--out", dir / "k.ccdm", "--keep-arrays", "2"});
  CHECK(keep.code == 0);
}

TEST_CASE("exit codes for data and numerical failures") {
  TempDir dir;
  const Result missing = cli({"dissim", "--in", dir / "missing.ccds", "--out", dir / "x.ccdm"});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("chartlab: data error:") == 0);
  CHECK(std::count(missing.err.begin(), missing.err.end(), '\n') == 1);
  CHECK_FALSE(fs::exists(dir / "x.ccdm"));

  // one second between samples leaves too few short pairs to calibrate gamma
  write_dataset(dir / "ds.ccds", test::random_dataset(30, 1, 2, 16, 91));
  const Result cal =
      cli({"dissim", "--in", dir / "ds.ccds", "--out", dir / "f.ccdm", "--metric", "fuse", "--gamma", "auto"});
  CHECK(cal.code == 3);
  CHECK(cal.err.find("chartlab: numerical failure:") == 0);
  CHECK(cli({"dissim", "--in", dir / "ds.ccds", "--out", dir / "f.ccdm", "--metric", "fuse", "--gamma", "0"}).code ==
        1);
  CHECK(cli({"dissim", "--in", dir / "ds.ccds", "--out", dir / "f.ccdm", "--metric", "fuse", "--gamma", "4"}).code ==
        0);
}

TEST_CASE("settings precedence: defaults, preset, config, flags") {
  TempDir dir;
  DissimilarityMatrix D = test::euclidean(test::random_points(40, 92, 10));
  D.tag = {Metric::Adp, false};
  write_matrix(dir / "d.ccdm", D);
  const std::vector<std::string> base{"geodesic", "--in", dir / "d.ccdm", "--out", dir / "g.ccdm"};

  Result r = cli(base);
  REQUIRE(r.code == 0);
  CHECK(r.log()["config"]["k"] == 20);
  CHECK(r.log()["config"]["repair"] == false);

  std::vector<std::string> args{"--preset", "paper-desk"};
  args.insert(args.end(), base.begin(), base.end());
  r = cli(args);
  REQUIRE(r.code == 0);
  CHECK(r.log()["config"]["repair"] == true);
  CHECK_FALSE(r.log()["config"].contains("metric"));

  spit(dir / "cfg.json", R"({"k": 7})");
  args = {"--preset", "paper-desk", "--config", dir / "cfg.json"};
  args.insert(args.end(), base.begin(), base.end());
  r = cli(args);
  REQUIRE(r.code == 0);
  CHECK(r.log()["config"]["k"] == 7);
  CHECK(r.log()["config"]["repair"] == true);

  args.push_back("--k");
  args.push_back("9");
  r = cli(args);
  REQUIRE(r.code == 0);
  CHECK(r.log()["config"]["k"] == 9);

  spit(dir / "bad.json", R"({"colour": "red"})");
  args = {"--config", dir / "bad.json"};
  args.insert(args.end(), base.begin(), base.end());
  CHECK(cli(args).code == 1);
  args = {"--preset", "nope"};
  args.insert(args.end(), base.begin(), base.end());
  CHECK(cli(args).code == 1);
}

TEST_CASE("pipeline equals the chain of subcommands") {
  TempDir dir;
  write_small_scene(dir);
  const std::string scene = dir / "scene.json", traj = dir / "traj.json";
  const Result p = cli({"--threads", "2", "pipeline", "--scene", scene, "--trajectory", traj, "--out-dir", dir / "p",
                        "--metric", "adp", "--k", "10", "--repair", "--method", "mds", "--iterations", "100"});
  REQUIRE(p.code == 0);
  CHECK(p.log()["results"]["synth"]["L"] == 149);

  fs::create_directories(dir.path / "c");
  const std::string c = (dir.path / "c").string() + "/";
  REQUIRE(cli({"synth", "--scene", scene, "--trajectory", traj, "--out", c + "dataset.ccds"}).code == 0);
  REQUIRE(cli({"dissim", "--in", c + "dataset.ccds", "--out", c + "dissimilarity.ccdm", "--metric", "adp"}).code == 0);
  REQUIRE(cli({"geodesic", "--in", c + "dissimilarity.ccdm", "--out", c + "geodesic.ccdm", "--k", "10", "--repair"})
              .code == 0);
  REQUIRE(cli({"chart", "--in", c + "geodesic.ccdm", "--out", c + "chart.ccch", "--method", "mds", "--iterations",
               "100", "--k", "10"})
              .code == 0);
  REQUIRE(cli({"eval", "--data", c + "dataset.ccds", "--chart", c + "chart.ccch", "--out", c + "eval.json", "--table",
               c + "table.txt"})
              .code == 0);
  REQUIRE(cli({"plot", "--data", c + "dataset.ccds", "--chart", c + "chart.ccch", "--out", c + "chart.svg"}).code ==
          0);

  for (const std::string f :
       {"dataset.ccds", "dissimilarity.ccdm", "geodesic.ccdm", "chart.ccch", "eval.json", "table.txt", "chart.svg"}) {
    INFO(f);
    const std::string a = slurp((dir.path / "p" / f).string()), b = slurp(c + f);
    CHECK(!a.empty());
    CHECK(a == b);
  }
  const auto eval = nlohmann::json::parse(slurp(c + "eval.json"));
  CHECK(eval["ct"].get<double>() > 0.5);
  CHECK(circles(slurp(c + "chart.svg"), "chart").size() == 149);

  // the table file parses back into the reported numbers
  const auto rows = parse_table(slurp(c + "table.txt"));
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].method == "mds");
  CHECK(rows[0].metric == "G-ADP");
  CHECK(std::abs(rows[0].ct - eval["ct"].get<double>()) <= 5e-5);
  CHECK(std::abs(*rows[0].mae - eval["mae"].get<double>()) <= 5e-5);
}

TEST_CASE("report tables round trip to four decimals") {
  std::vector<EvalReport> reports(3);
  reports[0].method = "sammon";
  reports[0].metric_tag = "G-fuse";
  reports[0].ct = 0.912345;
  reports[0].tw = 0.9;
  reports[0].ks = 0.123456;
  reports[0].rd = 0.5;
  reports[0].mae = 1.23456;
  reports[1].method = "isomap";
  reports[1].metric_tag = "G-ADP";
  reports[1].ct = 0.8;
  reports[1].mae = 2.0;
  reports[2].metric_tag = "CS";
  reports[2].ks = 0.33333;
  const std::string table = report_tables(reports);
  CHECK(table.find("CT↑") != std::string::npos);
  CHECK(table.find("MAE↓") != std::string::npos);
  const auto rows = parse_table(table);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].method == "");
  CHECK(rows[0].metric == "CS");
  CHECK_FALSE(rows[0].mae.has_value());
  CHECK(rows[1].method == "isomap");
  CHECK(rows[2].method == "sammon");
  for (const auto& row : rows) {
    const EvalReport& src =
        *std::find_if(reports.begin(), reports.end(), [&](const EvalReport& r) { return r.metric_tag == row.metric; });
    CHECK(std::abs(row.ct - src.ct) <= 5e-5);
    CHECK(std::abs(row.tw - src.tw) <= 5e-5);
    CHECK(std::abs(row.ks - src.ks) <= 5e-5);
    CHECK(std::abs(row.rd - src.rd) <= 5e-5);
    if (src.mae) CHECK(std::abs(*row.mae - *src.mae) <= 5e-5);
  }
  CHECK_THROWS_AS(parse_table("nothing here"), DataError);
  CHECK_THROWS_AS(report_tables({}), std::invalid_argument);
}

TEST_CASE("chart plots") {
  ChannelChart one;
  one.z = Points2::Zero(1, 2);
  const std::string single = render_chart_svg(one, Points2::Ones(1, 2));
  CHECK(circles(single, "truth").size() == 1);
  CHECK(circles(single, "chart").size() == 1);

  const Points2 x = test::random_points(50, 93, 10);
  ChannelChart same;
  same.z = x;
  same.method = "mds";
  same.metric_tag = "G-ADP";
  const std::string svg = render_chart_svg(same, x);
  const auto a = circles(svg, "truth"), b = circles(svg, "chart");
  REQUIRE(a.size() == 50);
  CHECK(a == b);
  CHECK(svg.find("channel chart (mds, G-ADP)") != std::string::npos);
  CHECK_THROWS_AS(render_chart_svg(same, Points2(x.topRows(49))), DataError);

  // the color map is one-to-one on a grid of normalized positions
  std::set<std::tuple<int, int, int>> seen;
  for (int i = 0; i <= 10; ++i)
    for (int j = 0; j <= 10; ++j) {
      const Eigen::Vector3i c = position_color(i / 10.0, j / 10.0);
      CHECK((c.array() >= 0).all());
      CHECK((c.array() <= 255).all());
      seen.insert({c(0), c(1), c(2)});
    }
  CHECK(seen.size() == 121);
}
