#include <doctest.h>

#include <cmath>
#include <numbers>

#include "chartlab/dataset.hpp"
#include "helpers.hpp"

using namespace chartlab;

namespace {

// Literal double loop over the 1-based indices of the transform definition.
CsiTensor naive_time_domain(const CsiTensor& H) {
  const Index N = H.subcarriers();
  CsiTensor out(H.arrays(), H.antennas(), N);
  for (Index b = 0; b < H.arrays(); ++b)
    for (Index m = 0; m < H.antennas(); ++m)
      for (Index tau = 1; tau <= N; ++tau) {
        Complex acc = 0;
        for (Index n = 1; n <= N; ++n) {
          const double arg = 2 * std::numbers::pi * double(n - 1) * (double(tau) - double(N) / 2 - 1) / double(N);
          acc += std::polar(1.0, arg) * H(b, m, n - 1);
        }
        out(b, m, tau - 1) = acc / std::sqrt(double(N));
      }
  return out;
}

double rel(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) { return (a - b).norm() / std::max(1e-300, b.norm()); }

}  // namespace

TEST_CASE("time domain matches the literal transform") {
  std::mt19937_64 rng(1);
  for (Index N : {2, 4, 8, 16, 64}) {
    const CsiTensor H = test::random_tensor(2, 3, N, rng);
    CHECK(rel(to_time_domain(H).matrix(), naive_time_domain(H).matrix()) < 1e-12);
  }
}

TEST_CASE("time domain is unitary and invertible") {
  std::mt19937_64 rng(2);
  const CsiTensor H = test::random_tensor(4, 8, 64, rng);
  const CsiTensor T = to_time_domain(H);
  for (Index r = 0; r < H.matrix().rows(); ++r) {
    const double e0 = H.matrix().row(r).squaredNorm(), e1 = T.matrix().row(r).squaredNorm();
    CHECK(std::abs(e0 - e1) / e0 < 1e-9);
  }
  CHECK(rel(to_frequency_domain(T).matrix(), H.matrix()) < 1e-9);
}

TEST_CASE("time domain examples") {
  CsiTensor zero(1, 1, 8);
  CHECK(to_time_domain(zero).matrix().norm() == 0);

  CsiTensor ones(1, 1, 4);
  ones.matrix().setOnes();
  const CsiTensor T = to_time_domain(ones);
  // constant spectrum is an impulse at zero delay, tap N/2 + 1
  CHECK(std::abs(T(0, 0, 2) - Complex(2, 0)) < 1e-12);
  CHECK(std::abs(T(0, 0, 0)) + std::abs(T(0, 0, 1)) + std::abs(T(0, 0, 3)) < 1e-12);

  CHECK_THROWS_AS(to_time_domain(CsiTensor(1, 1, 7)), DataError);
}

TEST_CASE("features follow the autocorrelation definition") {
  std::mt19937_64 rng(3);
  const Index B = 2, M = 3, N = 16;
  const CsiTensor T = test::random_tensor(B, M, N, rng);
  const TapWindow w{6, 11};
  const Eigen::VectorXd f = compute_features(T, w);
  REQUIRE(f.size() == feature_length(B, M, w));
  REQUIRE(f.size() == 2 * B * B * M * M * w.span());
  const Index half = f.size() / 2;
  Eigen::VectorXcd c(half);
  for (Index i = 0; i < half; ++i) c(i) = Complex(f(i), f(half + i));

  auto at = [&](Index b1, Index b2, Index m1, Index m2, Index tau) {
    return c((((b1 * B + b2) * M + m1) * M + m2) * w.span() + tau);
  };
  for (Index b1 = 0; b1 < B; ++b1)
    for (Index b2 = 0; b2 < B; ++b2)
      for (Index m1 = 0; m1 < M; ++m1)
        for (Index m2 = 0; m2 < M; ++m2)
          for (Index tau = 0; tau < w.span(); ++tau) {
            const Index col = w.tau_min - 1 + tau;
            CHECK(std::abs(at(b1, b2, m1, m2, tau) - T(b1, m1, col) * std::conj(T(b2, m2, col))) < 1e-12);
            CHECK(std::abs(at(b1, b2, m1, m2, tau) - std::conj(at(b2, b1, m2, m1, tau))) < 1e-12);
          }
}

TEST_CASE("feature examples") {
  CHECK(feature_length(4, 8, {507, 520}) == 28672);

  CsiTensor single(1, 1, 4);
  single.matrix() << Complex(1, 2), Complex(0, -1), Complex(3, 0), Complex(0.5, 0.5);
  const Eigen::VectorXd f = compute_features(single, {1, 4});
  for (Index tau = 0; tau < 4; ++tau) {
    CHECK(f(tau) == doctest::Approx(std::norm(single(0, 0, tau))));
    CHECK(f(4 + tau) == 0);
  }
  CHECK(compute_features(CsiTensor(2, 2, 8), {2, 5}).norm() == 0);
  CHECK_THROWS_AS(compute_features(single, {0, 2}), std::invalid_argument);
  CHECK_THROWS_AS(compute_features(single, {3, 5}), std::invalid_argument);
}

TEST_CASE("subsample and drop_arrays") {
  const CsiDataset ds = test::random_dataset(10, 3, 2, 8, 4);
  const CsiDataset s = subsample(ds, 5, 0);
  REQUIRE(s.size() == 2);
  CHECK(s[0].t == 0);
  CHECK(s[1].t == 5);
  CHECK(subsample(ds, 3, 1).size() == 3);
  CHECK(subsample(ds, 1).size() == 10);
  CHECK_THROWS_AS(subsample(ds, 0), std::invalid_argument);
  CHECK_THROWS_AS(subsample(ds, 3, 3), std::invalid_argument);

  const CsiDataset d = drop_arrays(ds, {2, 0});
  REQUIRE(d.arrays() == 2);
  for (Index l = 0; l < ds.size(); ++l) {
    CHECK(d[l].H.matrix().middleRows(0, 2) == ds[l].H.matrix().middleRows(4, 2));
    CHECK(d[l].H.matrix().middleRows(2, 2) == ds[l].H.matrix().middleRows(0, 2));
    CHECK(d[l].x == ds[l].x);
    CHECK(d[l].t == ds[l].t);
  }
  CHECK_THROWS_AS(drop_arrays(ds, {}), std::invalid_argument);
  CHECK_THROWS_AS(drop_arrays(ds, {3}), std::invalid_argument);

  // the two operations commute
  const CsiDataset a = drop_arrays(subsample(ds, 2, 1), {1});
  const CsiDataset b = subsample(drop_arrays(ds, {1}), 2, 1);
  REQUIRE(a.size() == b.size());
  for (Index l = 0; l < a.size(); ++l) CHECK(a[l].H.matrix() == b[l].H.matrix());
}

TEST_CASE("dataset validation") {
  std::mt19937_64 rng(5);
  std::vector<CsiDatapoint> one{{test::random_tensor(1, 1, 4, rng), {0, 0}, 0}};
  CHECK_THROWS_AS(CsiDataset{one}, DataError);
  std::vector<CsiDatapoint> mixed{{test::random_tensor(1, 1, 4, rng), {0, 0}, 0},
                                  {test::random_tensor(1, 2, 4, rng), {0, 0}, 1}};
  CHECK_THROWS_AS(CsiDataset{mixed}, DataError);
  std::vector<CsiDatapoint> odd{{test::random_tensor(1, 1, 5, rng), {0, 0}, 0},
                                {test::random_tensor(1, 1, 5, rng), {0, 0}, 1}};
  CHECK_THROWS_AS(CsiDataset{odd}, DataError);
  std::vector<CsiDatapoint> nan{{test::random_tensor(1, 1, 4, rng), {0, 0}, 0},
                                {test::random_tensor(1, 1, 4, rng), {0, 0}, std::nan("")}};
  CHECK_THROWS_AS(CsiDataset{nan}, DataError);
}
