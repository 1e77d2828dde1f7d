#pragma once

#include <cstdint>
#include <random>

#include "chartlab/dataset.hpp"
#include "chartlab/dissimilarity.hpp"

namespace chartlab::test {

inline CsiTensor random_tensor(Index B, Index M, Index N, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CsiTensor H(B, M, N);
  for (Index r = 0; r < B * M; ++r)
    for (Index n = 0; n < N; ++n) H.matrix()(r, n) = Complex(g(rng), g(rng));
  return H;
}

/// Random CSI at random positions; timestamps 0, 1, 2, ... seconds.
inline CsiDataset random_dataset(Index L, Index B, Index M, Index N, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 10);
  std::vector<CsiDatapoint> pts;
  for (Index l = 0; l < L; ++l) pts.push_back({random_tensor(B, M, N, rng), {u(rng), u(rng)}, double(l)});
  return CsiDataset(std::move(pts), {1e9, 20e6});
}

inline Points2 random_points(Index L, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, scale);
  Points2 x(L, 2);
  for (Index l = 0; l < L; ++l) x.row(l) << u(rng), u(rng);
  return x;
}

inline DissimilarityMatrix euclidean(const Points2& x) {
  DissimilarityMatrix D;
  D.values.resize(x.rows(), x.rows());
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = 0; j < x.rows(); ++j) D.values(i, j) = (x.row(i) - x.row(j)).norm();
  return D;
}

}  // namespace chartlab::test

namespace chartlab::test {

/// Planted grid of n x n points with unit spacing.
inline Points2 grid(Index n) {
  Points2 x(n * n, 2);
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < n; ++c) x.row(r * n + c) << double(c), double(r);
  return x;
}

/// Matrices every embedder must handle: planar, grid, clustered, duplicated
/// and non-metric.
inline std::vector<DissimilarityMatrix> corpus() {
  std::vector<DissimilarityMatrix> c;
  c.push_back(euclidean(random_points(60, 41, 10)));
  c.push_back(euclidean(grid(7)));
  Points2 two(40, 2);
  const Points2 r = random_points(40, 42);
  for (Index i = 0; i < 40; ++i) two.row(i) = r.row(i) + Eigen::RowVector2d(i < 20 ? 0.0 : 20.0, 0);
  c.push_back(euclidean(two));
  Points2 dup = random_points(30, 43, 5);
  dup.row(1) = dup.row(0);
  dup.row(7) = dup.row(3);
  c.push_back(euclidean(dup));
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> u(0.5, 3);
  DissimilarityMatrix nm;
  nm.values = Eigen::MatrixXd::Zero(35, 35);
  for (Index i = 0; i < 35; ++i)
    for (Index j = i + 1; j < 35; ++j) nm.values(i, j) = nm.values(j, i) = u(rng);
  c.push_back(nm);
  return c;
}

}  // namespace chartlab::test
