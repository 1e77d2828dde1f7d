#include "chartlab/formats.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

namespace chartlab {
namespace {

static_assert(std::endian::native == std::endian::little, "containers are written in host byte order");

using Bytes = std::vector<char>;

template <class T>
void put(Bytes& out, T v) {
  const auto* p = reinterpret_cast<const char*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

void write_container(const std::filesystem::path& path, const char* magic, const nlohmann::json& header,
                     const Bytes& payload) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open " + path.string() + " for writing");
  const std::string h = header.dump();
  const auto len = static_cast<std::uint32_t>(h.size());
  f.write(magic, 5);
  f.write(reinterpret_cast<const char*>(&len), sizeof len);
  f.write(h.data(), static_cast<std::streamsize>(h.size()));
  f.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!f) throw DataError("failed writing " + path.string());
}

struct Container {
  nlohmann::json header;
  Bytes payload;
  std::string name;

  // Reader over the payload that checks bounds.
  std::size_t pos = 0;
  template <class T>
  T take() {
    if (pos + sizeof(T) > payload.size()) throw DataError(name + ": payload is truncated");
    T v;
    std::memcpy(&v, payload.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
  }
  void seek(std::size_t p) {
    if (p > payload.size()) throw DataError(name + ": offset points past the end of the payload");
    pos = p;
  }
  void expect_end() const {
    if (pos != payload.size()) throw DataError(name + ": trailing bytes after the payload");
  }
};

Container read_container(const std::filesystem::path& path, const char* magic) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path.string());
  Bytes all((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Container c;
  c.name = path.string();
  if (all.size() < 9 || std::memcmp(all.data(), magic, 5) != 0)
    throw DataError(c.name + ": not a " + std::string(magic, 5) + " file");
  std::uint32_t len;
  std::memcpy(&len, all.data() + 5, sizeof len);
  if (9 + static_cast<std::size_t>(len) > all.size()) throw DataError(c.name + ": header is truncated");
  try {
    c.header = nlohmann::json::parse(all.begin() + 9, all.begin() + 9 + len);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(c.name + ": malformed header: " + e.what());
  }
  if (!c.header.is_object()) throw DataError(c.name + ": header is not a JSON object");
  c.payload.assign(all.begin() + 9 + len, all.end());
  return c;
}

template <class T>
T field(const Container& c, const char* key) {
  try {
    return c.header.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw DataError(c.name + ": header field '" + key + "' is missing or has the wrong type");
  }
}

Index positive(const Container& c, const char* key) {
  const auto v = field<long long>(c, key);
  if (v < 1) throw DataError(c.name + ": header field '" + key + "' must be positive");
  return static_cast<Index>(v);
}

void put_vector(Bytes& out, const Eigen::VectorXd& v) {
  for (Index i = 0; i < v.size(); ++i) put(out, static_cast<float>(v(i)));
}

Eigen::VectorXd take_vector(Container& c, Index n) {
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = c.take<float>();
  return v;
}

}  // namespace

void write_dataset(const std::filesystem::path& path, const CsiDataset& ds) {
  const Index L = ds.size(), B = ds.arrays(), M = ds.antennas(), N = ds.subcarriers();
  const std::size_t csi_bytes = static_cast<std::size_t>(L * B * M * N) * 8;
  const std::size_t pos_bytes = static_cast<std::size_t>(L) * 16;
  nlohmann::json h = {{"version", 1},
                      {"L", L},
                      {"B", B},
                      {"M", M},
                      {"N_sub", N},
                      {"carrier_hz", ds.meta().carrier_hz},
                      {"bandwidth_hz", ds.meta().bandwidth_hz},
                      {"offsets", {{"csi", 0}, {"positions", csi_bytes}, {"timestamps", csi_bytes + pos_bytes}}}};
  Bytes out;
  out.reserve(csi_bytes + pos_bytes + static_cast<std::size_t>(L) * 8);
  for (Index l = 0; l < L; ++l)
    for (Index b = 0; b < B; ++b)
      for (Index m = 0; m < M; ++m)
        for (Index n = 0; n < N; ++n) {
          const Complex v = ds[l].H(b, m, n);
          put(out, static_cast<float>(v.real()));
          put(out, static_cast<float>(v.imag()));
        }
  for (Index l = 0; l < L; ++l) {
    put(out, ds[l].x(0));
    put(out, ds[l].x(1));
  }
  for (Index l = 0; l < L; ++l) put(out, ds[l].t);
  write_container(path, "CCDS1", h, out);
}

CsiDataset read_dataset(const std::filesystem::path& path) {
  auto c = read_container(path, "CCDS1");
  if (field<int>(c, "version") != 1) throw DataError(c.name + ": unsupported version");
  const Index L = positive(c, "L"), B = positive(c, "B"), M = positive(c, "M"), N = positive(c, "N_sub");
  const CsiMeta meta{c.header.value("carrier_hz", 0.0), c.header.value("bandwidth_hz", 0.0)};
  std::size_t off_csi, off_pos, off_t;
  try {
    const auto& o = c.header.at("offsets");
    off_csi = o.at("csi").get<std::size_t>();
    off_pos = o.at("positions").get<std::size_t>();
    off_t = o.at("timestamps").get<std::size_t>();
  } catch (const nlohmann::json::exception&) {
    throw DataError(c.name + ": header offsets are missing");
  }

  std::vector<CsiDatapoint> points(static_cast<std::size_t>(L));
  c.seek(off_csi);
  for (auto& p : points) {
    p.H = CsiTensor(B, M, N);
    for (Index b = 0; b < B; ++b)
      for (Index m = 0; m < M; ++m)
        for (Index n = 0; n < N; ++n) {
          const float re = c.take<float>();
          const float im = c.take<float>();
          p.H(b, m, n) = Complex(re, im);
        }
  }
  c.seek(off_pos);
  for (auto& p : points) {
    p.x(0) = c.take<double>();
    p.x(1) = c.take<double>();
  }
  c.seek(off_t);
  for (auto& p : points) p.t = c.take<double>();
  const auto sections = static_cast<std::size_t>(L * B * M * N * 8 + L * 16 + L * 8);
  if (c.payload.size() != sections)
    throw DataError(c.name + ": payload has " + std::to_string(c.payload.size()) + " bytes, expected " +
                    std::to_string(sections));
  return CsiDataset(std::move(points), meta);
}

void write_matrix(const std::filesystem::path& path, const DissimilarityMatrix& D, const nlohmann::json& params) {
  const Index L = D.size();
  Bytes out;
  out.reserve(static_cast<std::size_t>(L * (L - 1) / 2) * 4);
  for (Index i = 0; i < L; ++i)
    for (Index j = i + 1; j < L; ++j) put(out, static_cast<float>(D(i, j)));
  write_container(path, "CCDM1", {{"L", L}, {"metric_tag", D.tag.str()}, {"params", params}}, out);
}

DissimilarityMatrix read_matrix(const std::filesystem::path& path, nlohmann::json* params) {
  auto c = read_container(path, "CCDM1");
  const Index L = positive(c, "L");
  DissimilarityMatrix D;
  try {
    D.tag = MetricTag::parse(field<std::string>(c, "metric_tag"));
  } catch (const std::invalid_argument& e) {
    throw DataError(c.name + ": " + e.what());
  }
  D.values = Eigen::MatrixXd::Zero(L, L);
  for (Index i = 0; i < L; ++i)
    for (Index j = i + 1; j < L; ++j) D.values(i, j) = D.values(j, i) = c.take<float>();
  c.expect_end();
  if (params) *params = c.header.value("params", nlohmann::json::object());
  D.validate();
  return D;
}

void write_chart(const std::filesystem::path& path, const ChannelChart& chart) {
  Bytes out;
  for (Index l = 0; l < chart.size(); ++l) {
    put(out, chart.z(l, 0));
    put(out, chart.z(l, 1));
  }
  nlohmann::json h = {{"L", chart.size()},         {"method", chart.method},
                      {"metric_tag", chart.metric_tag}, {"seed", chart.seed},
                      {"hyperparams", chart.hyperparameters}, {"warnings", chart.warnings}};
  write_container(path, "CCCH1", h, out);
}

ChannelChart read_chart(const std::filesystem::path& path) {
  auto c = read_container(path, "CCCH1");
  const Index L = positive(c, "L");
  ChannelChart chart;
  chart.method = field<std::string>(c, "method");
  chart.metric_tag = field<std::string>(c, "metric_tag");
  chart.seed = field<std::uint64_t>(c, "seed");
  chart.hyperparameters = c.header.value("hyperparams", nlohmann::json::object());
  chart.warnings = c.header.value("warnings", std::vector<std::string>{});
  chart.z.resize(L, 2);
  for (Index l = 0; l < L; ++l) {
    chart.z(l, 0) = c.take<double>();
    chart.z(l, 1) = c.take<double>();
  }
  c.expect_end();
  return chart;
}

void write_model(const std::filesystem::path& path, const Mlp& model) {
  Bytes out;
  for (const auto& layer : model.layers) {
    for (Index i = 0; i < layer.weight.size(); ++i) put(out, static_cast<float>(layer.weight.data()[i]));
    put_vector(out, layer.bias);
    if (layer.has_batch_norm()) {
      put_vector(out, layer.bn_scale);
      put_vector(out, layer.bn_shift);
      put_vector(out, layer.running_mean);
      put_vector(out, layer.running_var);
    }
  }
  const bool norm = model.input_mean.size() > 0;
  nlohmann::json h = {
      {"arch", {{"sizes", model.sizes}, {"batch_norm", model.batch_norm()}}},
      {"norm",
       {{"present", norm},
        {"input_mean", std::vector<double>(model.input_mean.data(), model.input_mean.data() + model.input_mean.size())},
        {"input_scale",
         std::vector<double>(model.input_scale.data(), model.input_scale.data() + model.input_scale.size())},
        {"output_scale", model.output_scale}}},
      {"features", {{"tau_min", model.window.tau_min}, {"tau_max", model.window.tau_max}}},
      {"kind", model.kind},
      {"seed", model.seed}};
  write_container(path, "CCNN1", h, out);
}

Mlp read_model(const std::filesystem::path& path) {
  auto c = read_container(path, "CCNN1");
  std::vector<Index> sizes;
  bool bn;
  try {
    sizes = c.header.at("arch").at("sizes").get<std::vector<Index>>();
    bn = c.header.at("arch").at("batch_norm").get<bool>();
  } catch (const nlohmann::json::exception&) {
    throw DataError(c.name + ": architecture is missing from the header");
  }
  if (sizes.size() < 2) throw DataError(c.name + ": a model needs at least one layer");
  for (Index s : sizes)
    if (s < 1) throw DataError(c.name + ": layer sizes must be positive");

  Mlp model(sizes, bn, 0);
  for (auto& layer : model.layers) {
    for (Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = c.take<float>();
    layer.bias = take_vector(c, layer.bias.size());
    if (layer.has_batch_norm()) {
      const Index n = layer.bn_scale.size();
      layer.bn_scale = take_vector(c, n);
      layer.bn_shift = take_vector(c, n);
      layer.running_mean = take_vector(c, n);
      layer.running_var = take_vector(c, n);
    }
  }
  c.expect_end();
  try {
    const auto& norm = c.header.at("norm");
    if (norm.at("present").get<bool>()) {
      const auto mean = norm.at("input_mean").get<std::vector<double>>();
      const auto scale = norm.at("input_scale").get<std::vector<double>>();
      if (static_cast<Index>(mean.size()) != sizes.front() || scale.size() != mean.size())
        throw DataError(c.name + ": normalization statistics do not match the input size");
      model.input_mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Index>(mean.size()));
      model.input_scale = Eigen::Map<const Eigen::VectorXd>(scale.data(), static_cast<Index>(scale.size()));
    }
    model.output_scale = norm.at("output_scale").get<double>();
    model.window = {c.header.at("features").at("tau_min").get<int>(),
                    c.header.at("features").at("tau_max").get<int>()};
    model.kind = c.header.value("kind", std::string());
    model.seed = c.header.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception&) {
    throw DataError(c.name + ": model header is incomplete");
  }
  return model;
}

CsiDataset import_text_dataset(const std::filesystem::path& path) {
  throw DataError("text dataset import is not implemented (" + path.string() + ")");
}

}  // namespace chartlab
