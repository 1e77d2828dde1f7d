#pragma once

#include <vector>

#include "chartlab/common.hpp"

namespace chartlab {

/// Complex channel tensor of shape arrays x antennas x subcarriers (or taps).
/// Stored as a (arrays*antennas) x subcarriers matrix; row b*M + m holds the
/// response of antenna m on array b.
class CsiTensor {
 public:
  CsiTensor() = default;
  CsiTensor(Index arrays, Index antennas, Index subcarriers);
  CsiTensor(Index arrays, Index antennas, Eigen::MatrixXcd data);

  Index arrays() const { return arrays_; }
  Index antennas() const { return antennas_; }
  Index subcarriers() const { return data_.cols(); }

  Complex& operator()(Index b, Index m, Index n) { return data_(b * antennas_ + m, n); }
  const Complex& operator()(Index b, Index m, Index n) const {
    return data_(b * antennas_ + m, n);
  }

  /// Row view of one antenna across all subcarriers.
  auto antenna(Index b, Index m) { return data_.row(b * antennas_ + m); }
  auto antenna(Index b, Index m) const { return data_.row(b * antennas_ + m); }

  /// M-vector of one array at one subcarrier/tap.
  auto snapshot(Index b, Index n) const { return data_.block(b * antennas_, n, antennas_, 1); }

  const Eigen::MatrixXcd& matrix() const { return data_; }
  Eigen::MatrixXcd& matrix() { return data_; }

 private:
  Index arrays_ = 0;
  Index antennas_ = 0;
  Eigen::MatrixXcd data_;
};

struct CsiDatapoint {
  CsiTensor H;            // frequency domain, DFT bin order (bin 0 = band center)
  Eigen::Vector2d x{0, 0};  // meters, evaluation only
  double t = 0;             // seconds
};

struct CsiMeta {
  double carrier_hz = 0;
  double bandwidth_hz = 0;
};

/// Immutable collection of datapoints sharing one tensor shape.
class CsiDataset {
 public:
  CsiDataset() = default;
  /// Throws DataError on shape mismatch, fewer than two points, odd or
  /// too-small subcarrier count, or non-finite entries.
  explicit CsiDataset(std::vector<CsiDatapoint> points, CsiMeta meta = {});

  Index size() const { return static_cast<Index>(points_.size()); }
  Index arrays() const { return points_.front().H.arrays(); }
  Index antennas() const { return points_.front().H.antennas(); }
  Index subcarriers() const { return points_.front().H.subcarriers(); }
  const CsiMeta& meta() const { return meta_; }

  const CsiDatapoint& operator[](Index l) const { return points_[static_cast<std::size_t>(l)]; }
  const std::vector<CsiDatapoint>& points() const { return points_; }

  Points2 positions() const;
  Eigen::VectorXd timestamps() const;

 private:
  std::vector<CsiDatapoint> points_;
  CsiMeta meta_;
};

/// Inclusive range of 1-based time-tap indices.
struct TapWindow {
  int tau_min = 1;
  int tau_max = 1;

  int span() const { return tau_max - tau_min + 1; }
  /// Throws std::invalid_argument unless 1 <= tau_min <= tau_max <= taps.
  void validate(Index taps) const;
};

/// Unitary inverse DFT along the subcarrier axis, shifted so that tap 1 is the
/// earliest and tap N is the latest (zero delay sits at tap N/2 + 1).
CsiTensor to_time_domain(const CsiTensor& H);
/// Exact inverse of to_time_domain.
CsiTensor to_frequency_domain(const CsiTensor& time_domain);

/// Number of real features: 2 * B^2 * M^2 * window span.
Index feature_length(Index arrays, Index antennas, const TapWindow& w);

/// Sample autocorrelations H~[b1,m1,tau] * conj(H~[b2,m2,tau]) over the tap
/// window, ordered lexicographically in (b1, b2, m1, m2, tau); all real parts
/// precede all imaginary parts.
Eigen::VectorXd compute_features(const CsiTensor& time_domain, const TapWindow& w);
Eigen::VectorXd compute_features(const CsiDatapoint& dp, const TapWindow& w);

/// Features of every datapoint, one column per datapoint.
Eigen::MatrixXd feature_matrix(const CsiDataset& ds, const TapWindow& w);

/// Keeps points offset, offset + stride, ... in order.
CsiDataset subsample(const CsiDataset& ds, int stride, int offset = 0);

/// Keeps the listed arrays (0-based, in the given order).
CsiDataset drop_arrays(const CsiDataset& ds, const std::vector<int>& keep);

/// Selects an arbitrary subset of points by index, in the given order.
CsiDataset select_points(const CsiDataset& ds, const std::vector<Index>& indices);

}  // namespace chartlab
