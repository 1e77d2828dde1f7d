#include "chartlab/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "chartlab/parallel.hpp"

namespace chartlab {
namespace {

double cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.x() * b.y() - a.y() * b.x(); }

struct AntennaGeometry {
  std::vector<Eigen::Vector2d> element;  // per antenna
  Eigen::Vector2d center, boresight;
};

std::vector<AntennaGeometry> antenna_geometry(const SceneSpec& scene) {
  std::vector<AntennaGeometry> out;
  const double spacing = scene.wavelength() / 2;
  for (const auto& a : scene.arrays) {
    AntennaGeometry g;
    g.center = a.position;
    g.boresight = {std::cos(a.orientation), std::sin(a.orientation)};
    const Eigen::Vector2d axis(-g.boresight.y(), g.boresight.x());
    for (int m = 0; m < a.antennas; ++m)
      g.element.push_back(a.position + (m - (a.antennas - 1) / 2.0) * spacing * axis);
    out.push_back(std::move(g));
  }
  return out;
}

bool blocked(const SceneSpec& scene, const Eigen::Vector2d& p, const Eigen::Vector2d& q) {
  return std::any_of(scene.blockers.begin(), scene.blockers.end(),
                     [&](const Segment& s) { return segments_cross(p, q, s); });
}

// arrival from `from` must hit the front half-plane of the array
bool in_front(const AntennaGeometry& g, const Eigen::Vector2d& from) {
  return (from - g.center).dot(g.boresight) > 0;
}

Eigen::Vector2d vec(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }
nlohmann::json arr(const Eigen::Vector2d& v) { return {v.x(), v.y()}; }

}  // namespace

bool segments_cross(const Eigen::Vector2d& p, const Eigen::Vector2d& q, const Segment& s) {
  const Eigen::Vector2d r = q - p, d = s.b - s.a;
  const double denom = cross(r, d);
  if (denom == 0) return false;  // parallel or collinear: treated as grazing
  const Eigen::Vector2d w = s.a - p;
  const double t = cross(w, d) / denom;
  const double u = cross(w, r) / denom;
  return t > 0 && t < 1 && u >= 0 && u <= 1;
}

bool inside_area(const SceneSpec& scene, const Eigen::Vector2d& x, double tol) {
  const auto& poly = scene.area;
  if (poly.empty()) return true;
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Eigen::Vector2d a = poly[j], b = poly[i];
    // on-edge counts as inside
    const Eigen::Vector2d ab = b - a;
    const double len2 = ab.squaredNorm();
    if (len2 > 0) {
      const double t = std::clamp((x - a).dot(ab) / len2, 0.0, 1.0);
      if ((a + t * ab - x).norm() <= tol) return true;
    }
    if ((a.y() > x.y()) != (b.y() > x.y()) &&
        x.x() < (b.x() - a.x()) * (x.y() - a.y()) / (b.y() - a.y()) + a.x())
      inside = !inside;
  }
  return inside;
}

void SceneSpec::validate() const {
  if (arrays.empty()) throw std::invalid_argument("scene needs at least one array");
  for (const auto& a : arrays)
    if (a.antennas < 1) throw std::invalid_argument("each array needs at least one antenna");
  if (!(carrier_hz > 0) || !(bandwidth_hz > 0)) throw std::invalid_argument("carrier and bandwidth must be positive");
  if (subcarriers < 2 || subcarriers % 2 != 0) throw std::invalid_argument("subcarrier count must be even and >= 2");
  if (!std::isfinite(los_gain)) throw std::invalid_argument("LoS gain must be finite");
  for (const auto& s : scatterers)
    if (!std::isfinite(s.gain) || !s.position.allFinite()) throw std::invalid_argument("scatterer must be finite");
  if (noise_db && !std::isfinite(*noise_db)) throw std::invalid_argument("noise level must be finite");
  if (!area.empty() && area.size() < 3) throw std::invalid_argument("area polygon needs at least 3 vertices");
}

double SceneSpec::diameter() const {
  double d = 0;
  for (const auto& a : area)
    for (const auto& b : area) d = std::max(d, (a - b).norm());
  return d;
}

double SceneSpec::max_delay() const {
  double longest = 0;
  for (const auto& x : area)
    for (const auto& a : arrays) {
      longest = std::max(longest, (x - a.position).norm());
      for (const auto& s : scatterers)
        longest = std::max(longest, (x - s.position).norm() + (s.position - a.position).norm());
    }
  return longest / kSpeedOfLight;
}

SceneSpec SceneSpec::desk() {
  SceneSpec s;
  s.arrays = {{{-1.0, 3.5}, 0.0, 4}, {{15.0, 3.5}, std::numbers::pi, 4}};
  s.bandwidth_hz = 200e6;
  s.noise_db = -15.0;
  s.area = {{0, 0}, {14, 0}, {14, 7}, {7, 7}, {7, 14}, {0, 14}};
  s.blockers = {{{7.5, 7.5}, {14, 7.5}}, {{7.5, 7.5}, {7.5, 14}}};
  // reflectors along the outer walls and the container faces
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> gain(0.3, 0.7);
  for (double x = 1; x < 14; x += 2) s.scatterers.push_back({{x, -0.5}, gain(rng)});
  for (double y = 1; y < 7; y += 2) s.scatterers.push_back({{14.5, y}, gain(rng)});
  for (double x = 8.5; x < 14; x += 2) s.scatterers.push_back({{x, 7.45}, gain(rng)});
  for (double y = 8.5; y < 14; y += 2) s.scatterers.push_back({{7.45, y}, gain(rng)});
  for (double x = 1; x < 7; x += 2) s.scatterers.push_back({{x, 14.5}, gain(rng)});
  for (double y = 8; y < 14; y += 2) s.scatterers.push_back({{-0.5, y}, gain(rng)});
  return s;
}

void TrajectorySpec::validate() const {
  if (waypoints.size() < 2) throw std::invalid_argument("trajectory needs at least two waypoints");
  if (!(speed >= 0)) throw std::invalid_argument("speed must be nonnegative");
  if (!(interval > 0)) throw std::invalid_argument("sample interval must be positive");
  if (!(jitter >= 0)) throw std::invalid_argument("jitter must be nonnegative");
  for (const auto& s : standstills) {
    if (s.waypoint >= waypoints.size()) throw std::invalid_argument("standstill refers to a missing waypoint");
    if (!(s.duration >= 0)) throw std::invalid_argument("standstill duration must be nonnegative");
  }
}

TrajectorySpec TrajectorySpec::desk() {
  TrajectorySpec t;
  const double lo = 0.25, step = 0.5;
  bool rightward = true;
  auto row = [&](double y, double x0, double x1) {
    t.waypoints.push_back({rightward ? x0 : x1, y});
    t.waypoints.push_back({rightward ? x1 : x0, y});
    rightward = !rightward;
  };
  for (int r = 0; r < 14; ++r) row(lo + step * r, 0.25, 13.75);
  for (int r = 0; r < 14; ++r) row(7.25 + step * r, 0.25, 6.75);
  for (std::size_t w = 3; w < t.waypoints.size(); w += 7) t.standstills.push_back({w, 12.0});
  t.speed = 0.32;
  t.interval = 0.5;
  t.max_samples = 2000;
  return t;
}

std::vector<TrajectorySample> generate_trajectory(const TrajectorySpec& spec) {
  spec.validate();
  // timeline of (start time, start point, end point, duration)
  struct Piece {
    double t0, dur;
    Eigen::Vector2d from, to;
  };
  std::vector<Piece> pieces;
  double clock = 0;
  auto hold = [&](std::size_t w) {
    for (const auto& s : spec.standstills)
      if (s.waypoint == w && s.duration > 0) {
        pieces.push_back({clock, s.duration, spec.waypoints[w], spec.waypoints[w]});
        clock += s.duration;
      }
  };
  hold(0);
  for (std::size_t w = 1; w < spec.waypoints.size(); ++w) {
    const double len = (spec.waypoints[w] - spec.waypoints[w - 1]).norm();
    if (len > 0) {
      if (!(spec.speed > 0)) throw std::invalid_argument("speed is zero but the waypoints are apart");
      pieces.push_back({clock, len / spec.speed, spec.waypoints[w - 1], spec.waypoints[w]});
      clock += len / spec.speed;
    }
    hold(w);
  }
  if (!(clock > 0)) throw std::invalid_argument("trajectory has zero length and no standstill");

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, spec.jitter);
  std::vector<TrajectorySample> out;
  std::size_t p = 0;
  const auto count = static_cast<std::size_t>(std::floor(clock / spec.interval + 1e-9)) + 1;
  for (std::size_t k = 0; k < count; ++k) {
    if (spec.max_samples > 0 && out.size() >= spec.max_samples) break;
    const double t = static_cast<double>(k) * spec.interval;
    while (p + 1 < pieces.size() && t >= pieces[p].t0 + pieces[p].dur) ++p;
    const Piece& pc = pieces[p];
    const double frac = pc.dur > 0 ? std::clamp((t - pc.t0) / pc.dur, 0.0, 1.0) : 1.0;
    Eigen::Vector2d x = pc.from + frac * (pc.to - pc.from);
    if (spec.jitter > 0) x += Eigen::Vector2d(normal(rng), normal(rng));
    out.push_back({x, std::round(t * 1000.0) / 1000.0});
  }
  return out;
}

CsiDataset synthesize_csi(const SceneSpec& scene, const std::vector<TrajectorySample>& samples) {
  scene.validate();
  if (samples.size() < 2) throw DataError("synthesis needs at least two positions");
  const auto geo = antenna_geometry(scene);
  const Index B = static_cast<Index>(scene.arrays.size());
  const Index M = scene.arrays.front().antennas;
  for (const auto& a : scene.arrays)
    if (a.antennas != M) throw std::invalid_argument("all arrays must have the same antenna count");
  const Index N = scene.subcarriers;
  Eigen::VectorXd freq(N);  // absolute frequency of each DFT bin
  for (Index n = 0; n < N; ++n)
    freq(n) = scene.carrier_hz + static_cast<double>(n < N / 2 ? n : n - N) * scene.bandwidth_hz / N;
  const double two_pi = 2 * std::numbers::pi;

  std::vector<CsiDatapoint> points(samples.size());
  parallel_for(0, static_cast<Index>(samples.size()), [&](Index l) {
    const Eigen::Vector2d x = samples[static_cast<std::size_t>(l)].x;
    if (!x.allFinite()) throw DataError("position " + std::to_string(l) + " is not finite");
    if (!inside_area(scene, x, 1e-6))
      throw DataError("position " + std::to_string(l) + " (" + std::to_string(x.x()) + ", " +
                      std::to_string(x.y()) + ") lies outside the scene area");
    CsiTensor H(B, M, N);
    for (Index b = 0; b < B; ++b) {
      const auto& g = geo[static_cast<std::size_t>(b)];
      if ((x - g.center).norm() < 1e-6)
        throw DataError("position " + std::to_string(l) + " coincides with array " + std::to_string(b));
      // (gain, first-leg endpoint) per path; path length is evaluated per antenna
      struct Path {
        double gain;
        bool direct;
        Eigen::Vector2d via;
      };
      std::vector<Path> paths;
      if (scene.los_gain != 0 && in_front(g, x) && !blocked(scene, x, g.center)) paths.push_back({scene.los_gain, true, x});
      for (const auto& s : scene.scatterers)
        if (in_front(g, s.position) && !blocked(scene, x, s.position) && !blocked(scene, s.position, g.center))
          paths.push_back({s.gain, false, s.position});
      for (Index m = 0; m < M; ++m) {
        const Eigen::Vector2d e = g.element[static_cast<std::size_t>(m)];
        auto row = H.antenna(b, m);
        for (const auto& path : paths) {
          const double len = path.direct ? (x - e).norm() : (x - path.via).norm() + (path.via - e).norm();
          const double amp = path.gain / len;
          for (Index n = 0; n < N; ++n) row(n) += std::polar(amp, -two_pi * freq(n) * len / kSpeedOfLight);
        }
      }
    }
    if (scene.noise_db) {
      const double power = H.matrix().cwiseAbs2().mean();
      const double sigma = std::sqrt(power * std::pow(10.0, *scene.noise_db / 10.0) / 2.0);
      std::seed_seq seq{static_cast<std::uint32_t>(scene.seed), static_cast<std::uint32_t>(scene.seed >> 32),
                        static_cast<std::uint32_t>(l), static_cast<std::uint32_t>(static_cast<std::uint64_t>(l) >> 32)};
      std::mt19937_64 rng(seq);
      std::normal_distribution<double> normal(0.0, 1.0);
      if (sigma > 0)
        for (Index c = 0; c < N; ++c)
          for (Index r = 0; r < B * M; ++r) H.matrix()(r, c) += Complex(sigma * normal(rng), sigma * normal(rng));
    }
    points[static_cast<std::size_t>(l)] = {std::move(H), x, samples[static_cast<std::size_t>(l)].t};
  });
  return CsiDataset(std::move(points), {scene.carrier_hz, scene.bandwidth_hz});
}

CsiDataset synthesize_csi(const SceneSpec& scene, const Points2& positions, const Eigen::VectorXd& timestamps) {
  if (positions.rows() != timestamps.size()) throw DataError("positions and timestamps differ in length");
  std::vector<TrajectorySample> samples;
  for (Index l = 0; l < positions.rows(); ++l) samples.push_back({positions.row(l).transpose(), timestamps(l)});
  return synthesize_csi(scene, samples);
}

TapWindow default_tap_window(const SceneSpec& scene) {
  const int zero = scene.subcarriers / 2 + 1;
  const int spread = static_cast<int>(std::ceil(scene.max_delay() * scene.bandwidth_hz - 1e-9));
  return {std::max(1, zero - 3), std::min(scene.subcarriers, zero + spread + 3)};
}

nlohmann::json to_json(const SceneSpec& s) {
  nlohmann::json j;
  j["carrier_hz"] = s.carrier_hz;
  j["bandwidth_hz"] = s.bandwidth_hz;
  j["subcarriers"] = s.subcarriers;
  j["los_gain"] = s.los_gain;
  j["noise_db"] = s.noise_db ? nlohmann::json(*s.noise_db) : nlohmann::json(nullptr);
  j["seed"] = s.seed;
  for (const auto& a : s.arrays)
    j["arrays"].push_back({{"position", arr(a.position)}, {"orientation", a.orientation}, {"antennas", a.antennas}});
  j["scatterers"] = nlohmann::json::array();
  for (const auto& sc : s.scatterers) j["scatterers"].push_back({{"position", arr(sc.position)}, {"gain", sc.gain}});
  j["blockers"] = nlohmann::json::array();
  for (const auto& b : s.blockers) j["blockers"].push_back({arr(b.a), arr(b.b)});
  j["area"] = nlohmann::json::array();
  for (const auto& v : s.area) j["area"].push_back(arr(v));
  return j;
}

nlohmann::json to_json(const TrajectorySpec& t) {
  nlohmann::json j;
  j["waypoints"] = nlohmann::json::array();
  for (const auto& w : t.waypoints) j["waypoints"].push_back(arr(w));
  j["speed"] = t.speed;
  j["interval"] = t.interval;
  j["jitter"] = t.jitter;
  j["max_samples"] = t.max_samples;
  j["seed"] = t.seed;
  j["standstills"] = nlohmann::json::array();
  for (const auto& s : t.standstills) j["standstills"].push_back({{"waypoint", s.waypoint}, {"duration", s.duration}});
  return j;
}

SceneSpec scene_from_json(const nlohmann::json& j) {
  SceneSpec s;
  s.carrier_hz = j.value("carrier_hz", s.carrier_hz);
  s.bandwidth_hz = j.value("bandwidth_hz", s.bandwidth_hz);
  s.subcarriers = j.value("subcarriers", s.subcarriers);
  s.los_gain = j.value("los_gain", s.los_gain);
  s.seed = j.value("seed", s.seed);
  if (j.contains("noise_db")) {
    if (j["noise_db"].is_null())
      s.noise_db.reset();
    else
      s.noise_db = j["noise_db"].get<double>();
  }
  for (const auto& a : j.at("arrays"))
    s.arrays.push_back({vec(a.at("position")), a.value("orientation", 0.0), a.value("antennas", 4)});
  if (j.contains("scatterers"))
    for (const auto& sc : j["scatterers"]) s.scatterers.push_back({vec(sc.at("position")), sc.value("gain", 1.0)});
  if (j.contains("blockers"))
    for (const auto& b : j["blockers"]) s.blockers.push_back({vec(b.at(0)), vec(b.at(1))});
  if (j.contains("area"))
    for (const auto& v : j["area"]) s.area.push_back(vec(v));
  s.validate();
  return s;
}

TrajectorySpec trajectory_from_json(const nlohmann::json& j) {
  TrajectorySpec t;
  for (const auto& w : j.at("waypoints")) t.waypoints.push_back(vec(w));
  t.speed = j.value("speed", t.speed);
  t.interval = j.value("interval", t.interval);
  t.jitter = j.value("jitter", t.jitter);
  t.max_samples = j.value("max_samples", t.max_samples);
  t.seed = j.value("seed", t.seed);
  if (j.contains("standstills"))
    for (const auto& s : j["standstills"])
      t.standstills.push_back({s.at("waypoint").get<std::size_t>(), s.at("duration").get<double>()});
  t.validate();
  return t;
}

}  // namespace chartlab
