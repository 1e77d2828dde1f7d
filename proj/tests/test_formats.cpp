#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "chartlab/formats.hpp"
#include "helpers.hpp"

using namespace chartlab;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("chartlab-formats-" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path operator/(const std::string& name) const { return path / name; }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

}  // namespace

TEST_CASE("dataset round trip") {
  TempDir dir;
  const CsiDataset ds = test::random_dataset(7, 2, 3, 8, 80);
  write_dataset(dir / "a.ccds", ds);
  CHECK(slurp(dir / "a.ccds").substr(0, 5) == "CCDS1");
  const CsiDataset r = read_dataset(dir / "a.ccds");
  REQUIRE(r.size() == 7);
  CHECK(r.arrays() == 2);
  CHECK(r.antennas() == 3);
  CHECK(r.subcarriers() == 8);
  CHECK(r.meta().carrier_hz == ds.meta().carrier_hz);
  CHECK(r.meta().bandwidth_hz == ds.meta().bandwidth_hz);
  for (Index l = 0; l < 7; ++l) {
    CHECK(r[l].x == ds[l].x);
    CHECK(r[l].t == ds[l].t);
    CHECK(r[l].H.matrix() == ds[l].H.matrix().cast<std::complex<float>>().cast<Complex>());
  }
  // rewriting the loaded dataset is byte-identical
  write_dataset(dir / "b.ccds", r);
  CHECK(slurp(dir / "a.ccds") == slurp(dir / "b.ccds"));
}

TEST_CASE("matrix round trip") {
  TempDir dir;
  DissimilarityMatrix D = test::euclidean(test::random_points(12, 81, 10));
  D.tag = {Metric::Fuse, true};
  write_matrix(dir / "d.ccdm", D, {{"gamma", 12.5}});
  nlohmann::json params;
  const DissimilarityMatrix r = read_matrix(dir / "d.ccdm", &params);
  CHECK(r.tag.str() == "G-fuse");
  CHECK(params["gamma"] == 12.5);
  CHECK(r.values == r.values.transpose());
  CHECK(r.values.diagonal().isZero(0));
  CHECK(r.values == D.values.cast<float>().cast<double>());
}

TEST_CASE("chart round trip") {
  TempDir dir;
  ChannelChart c;
  c.z = test::random_points(9, 82);
  c.method = "sammon";
  c.metric_tag = "G-ADP";
  c.seed = 42;
  c.hyperparameters = {{"iterations", 100}};
  c.warnings = {"something odd"};
  write_chart(dir / "c.ccch", c);
  const ChannelChart r = read_chart(dir / "c.ccch");
  CHECK(r.z == c.z);
  CHECK(r.method == "sammon");
  CHECK(r.metric_tag == "G-ADP");
  CHECK(r.seed == 42);
  CHECK(r.hyperparameters == c.hyperparameters);
  CHECK(r.warnings == c.warnings);
}

TEST_CASE("model round trip preserves predictions") {
  TempDir dir;
  for (bool bn : {false, true}) {
    Mlp net({6, 8, 5, 2}, bn, 83);
    net.input_mean = Eigen::VectorXd::LinSpaced(6, -1, 1);
    net.input_scale = Eigen::VectorXd::Constant(6, 0.5);
    net.output_scale = 3.0;
    net.kind = "siamese";
    net.window = {2, 5};
    net.seed = 9;
    if (bn)
      for (auto& layer : net.layers)
        if (layer.has_batch_norm()) {
          layer.running_mean.setConstant(0.2);
          layer.running_var.setConstant(1.5);
        }
    write_model(dir / "m.ccnn", net);
    const Mlp r = read_model(dir / "m.ccnn");
    CHECK(r.sizes == net.sizes);
    CHECK(r.batch_norm() == bn);
    CHECK(r.kind == "siamese");
    CHECK(r.window.tau_min == 2);
    CHECK(r.window.tau_max == 5);
    CHECK(r.seed == 9);
    CHECK(r.output_scale == 3.0);
    std::mt19937_64 rng(84);
    std::normal_distribution<double> g;
    Eigen::MatrixXd x(6, 20);
    for (Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
    const Eigen::MatrixXd a = net.predict(x), b = r.predict(x);
    CHECK((a - b).norm() / a.norm() < 1e-5);
  }
}

TEST_CASE("corrupt files are rejected") {
  TempDir dir;
  const CsiDataset ds = test::random_dataset(4, 1, 2, 4, 85);
  write_dataset(dir / "ok.ccds", ds);
  const std::string bytes = slurp(dir / "ok.ccds");

  spit(dir / "magic.ccds", "XXDS1" + bytes.substr(5));
  CHECK_THROWS_AS(read_dataset(dir / "magic.ccds"), DataError);
  spit(dir / "short.ccds", bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(read_dataset(dir / "short.ccds"), DataError);
  spit(dir / "long.ccds", bytes + "zz");
  CHECK_THROWS_AS(read_dataset(dir / "long.ccds"), DataError);
  spit(dir / "header.ccds", bytes.substr(0, 12));
  CHECK_THROWS_AS(read_dataset(dir / "header.ccds"), DataError);
  CHECK_THROWS_AS(read_dataset(dir / "missing.ccds"), DataError);
  // a dataset is not a matrix
  CHECK_THROWS_AS(read_matrix(dir / "ok.ccds"), DataError);
  CHECK_THROWS_AS(read_chart(dir / "ok.ccds"), DataError);
  CHECK_THROWS_AS(read_model(dir / "ok.ccds"), DataError);

  DissimilarityMatrix D = test::euclidean(test::random_points(5, 86));
  write_matrix(dir / "d.ccdm", D);
  const std::string m = slurp(dir / "d.ccdm");
  spit(dir / "d2.ccdm", m.substr(0, m.size() - 4));
  CHECK_THROWS_AS(read_matrix(dir / "d2.ccdm"), DataError);

  CHECK_THROWS_AS(import_text_dataset(dir / "ok.ccds"), DataError);
}
