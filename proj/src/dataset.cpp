#include "chartlab/dataset.hpp"

#include <cmath>
#include <string>

#include <unsupported/Eigen/FFT>

#include "chartlab/parallel.hpp"

namespace chartlab {

CsiTensor::CsiTensor(Index arrays, Index antennas, Index subcarriers)
    : arrays_(arrays), antennas_(antennas), data_(Eigen::MatrixXcd::Zero(arrays * antennas, subcarriers)) {}

CsiTensor::CsiTensor(Index arrays, Index antennas, Eigen::MatrixXcd data)
    : arrays_(arrays), antennas_(antennas), data_(std::move(data)) {
  if (data_.rows() != arrays * antennas)
    throw DataError("CSI tensor rows " + std::to_string(data_.rows()) + " do not match " +
                    std::to_string(arrays) + " arrays x " + std::to_string(antennas) + " antennas");
}

CsiDataset::CsiDataset(std::vector<CsiDatapoint> points, CsiMeta meta)
    : points_(std::move(points)), meta_(meta) {
  if (points_.size() < 2) throw DataError("a dataset needs at least two datapoints");
  const auto& first = points_.front().H;
  if (first.arrays() < 1 || first.antennas() < 1)
    throw DataError("CSI tensors need at least one array and one antenna");
  if (first.subcarriers() < 2 || first.subcarriers() % 2 != 0)
    throw DataError("subcarrier count must be even and at least 2, got " +
                    std::to_string(first.subcarriers()));
  for (std::size_t l = 0; l < points_.size(); ++l) {
    const auto& p = points_[l];
    if (p.H.arrays() != first.arrays() || p.H.antennas() != first.antennas() ||
        p.H.subcarriers() != first.subcarriers())
      throw DataError("datapoint " + std::to_string(l) + " has a different CSI shape");
    if (!p.H.matrix().allFinite() || !p.x.allFinite() || !std::isfinite(p.t))
      throw DataError("datapoint " + std::to_string(l) + " contains non-finite values");
  }
}

Points2 CsiDataset::positions() const {
  Points2 x(size(), 2);
  for (Index l = 0; l < size(); ++l) x.row(l) = (*this)[l].x.transpose();
  return x;
}

Eigen::VectorXd CsiDataset::timestamps() const {
  Eigen::VectorXd t(size());
  for (Index l = 0; l < size(); ++l) t(l) = (*this)[l].t;
  return t;
}

void TapWindow::validate(Index taps) const {
  if (tau_min < 1 || tau_min > tau_max || tau_max > taps)
    throw std::invalid_argument("tap window [" + std::to_string(tau_min) + ", " +
                                std::to_string(tau_max) + "] is outside 1.." + std::to_string(taps));
}

CsiTensor to_time_domain(const CsiTensor& H) {
  const Index n = H.subcarriers();
  if (n < 2 || n % 2 != 0) throw DataError("to_time_domain requires an even subcarrier count");
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::Unscaled);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  const Index half = n / 2;

  CsiTensor out(H.arrays(), H.antennas(), n);
  std::vector<Complex> in(static_cast<std::size_t>(n)), y;
  for (Index r = 0; r < H.matrix().rows(); ++r) {
    for (Index k = 0; k < n; ++k) in[static_cast<std::size_t>(k)] = H.matrix()(r, k);
    fft.inv(y, in);
    // tap index tau (0-based) carries exponent (tau - N/2), i.e. IDFT bin tau + N/2 mod N
    for (Index tau = 0; tau < n; ++tau)
      out.matrix()(r, tau) = y[static_cast<std::size_t>((tau + half) % n)] * scale;
  }
  return out;
}

CsiTensor to_frequency_domain(const CsiTensor& time_domain) {
  const Index n = time_domain.subcarriers();
  if (n < 2 || n % 2 != 0) throw DataError("to_frequency_domain requires an even tap count");
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::Unscaled);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  const Index half = n / 2;

  CsiTensor out(time_domain.arrays(), time_domain.antennas(), n);
  std::vector<Complex> in(static_cast<std::size_t>(n)), y;
  for (Index r = 0; r < time_domain.matrix().rows(); ++r) {
    for (Index k = 0; k < n; ++k)
      in[static_cast<std::size_t>(k)] = time_domain.matrix()(r, (k + half) % n);
    fft.fwd(y, in);
    for (Index k = 0; k < n; ++k) out.matrix()(r, k) = y[static_cast<std::size_t>(k)] * scale;
  }
  return out;
}

Index feature_length(Index arrays, Index antennas, const TapWindow& w) {
  return 2 * arrays * arrays * antennas * antennas * w.span();
}

Eigen::VectorXd compute_features(const CsiTensor& time_domain, const TapWindow& w) {
  w.validate(time_domain.subcarriers());
  const Index B = time_domain.arrays(), M = time_domain.antennas(), T = w.span();
  const Index half = feature_length(B, M, w) / 2;
  Eigen::VectorXd f(2 * half);
  Index idx = 0;
  for (Index b1 = 0; b1 < B; ++b1)
    for (Index b2 = 0; b2 < B; ++b2)
      for (Index m1 = 0; m1 < M; ++m1)
        for (Index m2 = 0; m2 < M; ++m2)
          for (Index tau = 0; tau < T; ++tau, ++idx) {
            const Index col = w.tau_min - 1 + tau;
            const Complex c = time_domain(b1, m1, col) * std::conj(time_domain(b2, m2, col));
            f(idx) = c.real();
            f(half + idx) = c.imag();
          }
  return f;
}

Eigen::VectorXd compute_features(const CsiDatapoint& dp, const TapWindow& w) {
  return compute_features(to_time_domain(dp.H), w);
}

Eigen::MatrixXd feature_matrix(const CsiDataset& ds, const TapWindow& w) {
  w.validate(ds.subcarriers());
  Eigen::MatrixXd f(feature_length(ds.arrays(), ds.antennas(), w), ds.size());
  parallel_for(0, ds.size(), [&](Index l) { f.col(l) = compute_features(ds[l], w); });
  return f;
}

CsiDataset subsample(const CsiDataset& ds, int stride, int offset) {
  if (stride < 1) throw std::invalid_argument("subsample stride must be >= 1");
  if (offset < 0 || offset >= stride)
    throw std::invalid_argument("subsample offset must lie in [0, stride)");
  std::vector<Index> keep;
  for (Index l = offset; l < ds.size(); l += stride) keep.push_back(l);
  if (keep.empty()) throw DataError("subsample produced an empty dataset");
  return select_points(ds, keep);
}

CsiDataset drop_arrays(const CsiDataset& ds, const std::vector<int>& keep) {
  if (keep.empty()) throw std::invalid_argument("drop_arrays needs at least one array to keep");
  for (int b : keep)
    if (b < 0 || b >= ds.arrays())
      throw std::invalid_argument("array index " + std::to_string(b) + " out of range");
  const Index M = ds.antennas(), N = ds.subcarriers();
  const auto B = static_cast<Index>(keep.size());
  std::vector<CsiDatapoint> points;
  points.reserve(static_cast<std::size_t>(ds.size()));
  for (const auto& p : ds.points()) {
    Eigen::MatrixXcd data(B * M, N);
    for (Index k = 0; k < B; ++k) data.middleRows(k * M, M) = p.H.matrix().middleRows(keep[k] * M, M);
    points.push_back({CsiTensor(B, M, std::move(data)), p.x, p.t});
  }
  return CsiDataset(std::move(points), ds.meta());
}

CsiDataset select_points(const CsiDataset& ds, const std::vector<Index>& indices) {
  std::vector<CsiDatapoint> points;
  points.reserve(indices.size());
  for (Index l : indices) {
    if (l < 0 || l >= ds.size()) throw std::out_of_range("datapoint index out of range");
    points.push_back(ds[l]);
  }
  return CsiDataset(std::move(points), ds.meta());
}

}  // namespace chartlab
