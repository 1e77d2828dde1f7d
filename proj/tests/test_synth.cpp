#include <doctest.h>

#include <cstring>

#include "chartlab/dissimilarity.hpp"
#include "chartlab/parallel.hpp"
#include "chartlab/synth.hpp"

using namespace chartlab;

namespace {

// One array at the origin facing +x, free space, no noise.
SceneSpec empty_scene() {
  SceneSpec s;
  s.arrays = {{{0, 0}, 0.0, 4}};
  s.noise_db.reset();
  return s;
}

CsiDataset at(const SceneSpec& scene, std::vector<Eigen::Vector2d> xs) {
  std::vector<TrajectorySample> samples;
  for (std::size_t i = 0; i < xs.size(); ++i) samples.push_back({xs[i], double(i)});
  return synthesize_csi(scene, samples);
}

Eigen::VectorXd tap_power(const CsiTensor& H, Index b, Index m) {
  return to_time_domain(H).antenna(b, m).cwiseAbs2().transpose();
}

Index expected_tap(const SceneSpec& s, double path_length) {
  const Index N = s.subcarriers;
  return (N / 2 + Index(std::llround(path_length / kSpeedOfLight * s.bandwidth_hz))) % N;
}

}  // namespace

TEST_CASE("trajectory examples") {
  TrajectorySpec t;
  t.waypoints = {{0, 0}, {10, 0}};
  t.speed = 1;
  t.interval = 1;
  const auto s = generate_trajectory(t);
  REQUIRE(s.size() == 11);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s[i].x.x() == doctest::Approx(double(i)));
    CHECK(s[i].x.y() == 0);
    CHECK(s[i].t == doctest::Approx(double(i)));
  }

  TrajectorySpec still;
  still.waypoints = {{2, 3}, {2, 3}};
  still.standstills = {{0, 5.0}};
  const auto h = generate_trajectory(still);
  REQUIRE(h.size() >= 5);
  for (std::size_t i = 0; i < h.size(); ++i) {
    CHECK(h[i].x == Eigen::Vector2d(2, 3));
    if (i > 0) CHECK(h[i].t > h[i - 1].t);
  }

  TrajectorySpec zero;
  zero.waypoints = {{1, 1}, {1, 1}};
  CHECK_THROWS_AS(generate_trajectory(zero), std::invalid_argument);
  TrajectorySpec one;
  one.waypoints = {{1, 1}};
  CHECK_THROWS_AS(generate_trajectory(one), std::invalid_argument);
  t.interval = 0;
  CHECK_THROWS_AS(generate_trajectory(t), std::invalid_argument);
}

TEST_CASE("desk trajectory") {
  const TrajectorySpec spec = TrajectorySpec::desk();
  const SceneSpec scene = SceneSpec::desk();
  const auto s = generate_trajectory(spec);
  REQUIRE(s.size() == 2000);
  Index still = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(inside_area(scene, s[i].x));
    if (i == 0) continue;
    CHECK(s[i].t > s[i - 1].t);
    CHECK((s[i].x - s[i - 1].x).norm() <= spec.speed * (s[i].t - s[i - 1].t) + 1e-9);
    still += s[i].x == s[i - 1].x;
  }
  CHECK(still > 100);
  CHECK(scene.diameter() == doctest::Approx(std::sqrt(2.0) * 14));
}

TEST_CASE("single LoS path puts all energy in one tap") {
  SceneSpec s = empty_scene();
  // a whole number of tap spacings away along boresight
  const double range = 3 * kSpeedOfLight / s.bandwidth_hz;
  const CsiDataset ds = at(s, {{range, 0}, {range / 2, 1}});
  for (Index m = 0; m < 4; ++m) {
    const Eigen::VectorXd p = tap_power(ds[0].H, 0, m);
    Index peak;
    const double top = p.maxCoeff(&peak);
    CHECK(peak == expected_tap(s, range));
    for (Index n = 0; n < p.size(); ++n)
      if (n != peak) CHECK(top >= 100 * p(n));
  }

  // doubling the gain quadruples the tap power
  SceneSpec louder = s;
  louder.los_gain = 2;
  const CsiDataset dl = at(louder, {{range, 0}, {range / 2, 1}});
  const Index tap = expected_tap(s, range);
  CHECK(tap_power(dl[0].H, 0, 0)(tap) == doctest::Approx(4 * tap_power(ds[0].H, 0, 0)(tap)).epsilon(1e-12));
}

TEST_CASE("received power decays with distance") {
  const SceneSpec s = empty_scene();
  std::vector<Eigen::Vector2d> xs;
  for (int i = 1; i <= 20; ++i) xs.push_back({0.5 * i, 0.3});
  const CsiDataset ds = at(s, xs);
  for (Index l = 1; l < ds.size(); ++l) CHECK(ds[l].H.matrix().squaredNorm() <= ds[l - 1].H.matrix().squaredNorm());
}

TEST_CASE("blockers remove the direct path") {
  SceneSpec s = empty_scene();
  s.blockers = {{{5, -1}, {5, 1}}};
  s.scatterers = {{{5, 5}, 1.0}};
  const CsiDataset ds = at(s, {{10, 0}, {3, 0}});
  const double bounce = 2 * std::sqrt(50.0);
  for (Index m = 0; m < 4; ++m) {
    Index peak;
    tap_power(ds[0].H, 0, m).maxCoeff(&peak);
    CHECK(std::abs(peak - expected_tap(s, bounce)) <= 1);
    // the unblocked point sees its direct path
    tap_power(ds[1].H, 0, m).maxCoeff(&peak);
    CHECK(std::abs(peak - expected_tap(s, 3)) <= 1);
  }
  CHECK(segments_cross({10, 0}, {0, 0}, s.blockers[0]));
  CHECK_FALSE(segments_cross({3, 0}, {0, 0}, s.blockers[0]));
}

TEST_CASE("nearby positions are less dissimilar than distant ones") {
  SceneSpec s = empty_scene();
  s.scatterers = {{{6, 6}, 0.5}, {{8, -5}, 0.5}};
  const CsiDataset ds = at(s, {{10, 1}, {10.1, 1}, {4, -6}});
  const TimeDomainCache taps(ds);
  const TapWindow w{1, s.subcarriers};
  CHECK(d_adp(taps, 0, 1, w) < d_adp(taps, 0, 2, w));
}

TEST_CASE("synthesis is deterministic") {
  const SceneSpec scene = SceneSpec::desk();
  TrajectorySpec t = TrajectorySpec::desk();
  t.max_samples = 200;
  const auto samples = generate_trajectory(t);
  set_thread_count(1);
  const CsiDataset a = synthesize_csi(scene, samples);
  set_thread_count(8);
  const CsiDataset b = synthesize_csi(scene, samples);
  set_thread_count(1);
  for (Index l = 0; l < a.size(); ++l)
    CHECK(std::memcmp(a[l].H.matrix().data(), b[l].H.matrix().data(), sizeof(Complex) * a[l].H.matrix().size()) ==
          0);

  SceneSpec other = scene;
  other.seed = 1;
  CHECK(synthesize_csi(other, samples)[0].H.matrix() != a[0].H.matrix());
}

TEST_CASE("synthesis rejects bad positions") {
  const SceneSpec s = SceneSpec::desk();
  CHECK_THROWS_AS(at(s, {{1, 1}, {10, 10}}), DataError);
  SceneSpec e = empty_scene();
  CHECK_THROWS_AS(at(e, {{0, 0}, {1, 1}}), DataError);
  CHECK_THROWS_AS(at(e, {{1, 1}}), DataError);
  e.subcarriers = 63;
  CHECK_THROWS_AS(at(e, {{1, 1}, {2, 1}}), std::invalid_argument);
}

TEST_CASE("default tap window covers every path") {
  const SceneSpec s = SceneSpec::desk();
  const TapWindow w = default_tap_window(s);
  CHECK(w.tau_min == s.subcarriers / 2 + 1 - 3);
  const double taps = s.max_delay() * s.bandwidth_hz;
  CHECK(w.tau_max == s.subcarriers / 2 + 1 + Index(std::ceil(taps)) + 3);
  CHECK(w.tau_max <= s.subcarriers);
}

TEST_CASE("scene and trajectory JSON round trip") {
  const SceneSpec s = SceneSpec::desk();
  const SceneSpec r = scene_from_json(to_json(s));
  CHECK(to_json(r) == to_json(s));
  CHECK(r.scatterers.size() == s.scatterers.size());
  CHECK(r.noise_db == s.noise_db);

  SceneSpec quiet = s;
  quiet.noise_db.reset();
  CHECK_FALSE(scene_from_json(to_json(quiet)).noise_db.has_value());

  const TrajectorySpec t = TrajectorySpec::desk();
  CHECK(to_json(trajectory_from_json(to_json(t))) == to_json(t));
  CHECK(generate_trajectory(trajectory_from_json(to_json(t))).size() == 2000);
}
