#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "chartlab/dataset.hpp"

namespace chartlab {

inline constexpr double kSpeedOfLight = 299792458.0;

struct ArrayPose {
  Eigen::Vector2d position{0, 0};  // phase center, meters
  double orientation = 0;          // boresight angle, radians from +x
  int antennas = 4;                // uniform linear array at half-wavelength spacing
};

struct Scatterer {
  Eigen::Vector2d position{0, 0};
  double gain = 1.0;
};

struct Segment {
  Eigen::Vector2d a{0, 0}, b{0, 0};
};

/// Geometry-driven multipath scene: direct path plus single-bounce scatterer
/// paths with 1 / path-length amplitude. Blockers cut any path leg they cross.
struct SceneSpec {
  std::vector<ArrayPose> arrays;
  double carrier_hz = 1.272e9;
  double bandwidth_hz = 50e6;
  int subcarriers = 64;
  double los_gain = 1.0;
  std::vector<Scatterer> scatterers;
  std::vector<Segment> blockers;
  std::vector<Eigen::Vector2d> area;  // polygon; empty means unbounded
  std::optional<double> noise_db = -30.0;  // noise power relative to mean signal power
  std::uint64_t seed = 0;

  double wavelength() const { return kSpeedOfLight / carrier_hz; }
  /// Throws std::invalid_argument when the scene is malformed.
  void validate() const;
  /// Largest distance between two area vertices.
  double diameter() const;
  /// Longest path delay (seconds) over the area vertices and all paths.
  double max_delay() const;

  /// L-shaped 14 m x 14 m area with a container in the missing corner and
  /// two 4-antenna arrays on opposite sides; the upper arm is hidden from
  /// array 1 by the container.
  static SceneSpec desk();
};

struct Standstill {
  std::size_t waypoint = 0;  // 0-based waypoint index
  double duration = 0;       // seconds
};

struct TrajectorySpec {
  std::vector<Eigen::Vector2d> waypoints;
  double speed = 1.0;     // m/s
  std::vector<Standstill> standstills;
  double interval = 1.0;  // seconds between samples
  double jitter = 0.0;    // std of isotropic Gaussian position noise, meters
  std::size_t max_samples = 0;  // 0: no limit
  std::uint64_t seed = 0;

  void validate() const;

  /// Serpentine sweep over the desk scene with periodic standstills; 2000 samples.
  static TrajectorySpec desk();
};

struct TrajectorySample {
  Eigen::Vector2d x;
  double t;
};

/// Samples at t = 0, interval, 2 interval, ... up to the end of the path,
/// moving at constant speed between waypoints and holding still for each
/// standstill. Timestamps are rounded to milliseconds.
std::vector<TrajectorySample> generate_trajectory(const TrajectorySpec& spec);

/// Frequency response per array, antenna and subcarrier for every position,
/// plus optional complex Gaussian noise seeded per position.
CsiDataset synthesize_csi(const SceneSpec& scene, const std::vector<TrajectorySample>& samples);
CsiDataset synthesize_csi(const SceneSpec& scene, const Points2& positions, const Eigen::VectorXd& timestamps);

/// Taps from 3 before zero delay to 3 after the longest path delay.
TapWindow default_tap_window(const SceneSpec& scene);

/// True when the open segments p-q and s.a-s.b intersect.
bool segments_cross(const Eigen::Vector2d& p, const Eigen::Vector2d& q, const Segment& s);
bool inside_area(const SceneSpec& scene, const Eigen::Vector2d& x, double tol = 1e-9);

nlohmann::json to_json(const SceneSpec& scene);
nlohmann::json to_json(const TrajectorySpec& spec);
SceneSpec scene_from_json(const nlohmann::json& j);
TrajectorySpec trajectory_from_json(const nlohmann::json& j);

}  // namespace chartlab
