#pragma once

#include <optional>
#include <string>
#include <vector>

#include "chartlab/common.hpp"
#include "chartlab/dataset.hpp"

namespace chartlab {

struct Mlp;

enum class Metric { Euc, Time, Cira, Cs, Adp, Dl, Fuse };

/// Provenance of a dissimilarity matrix, e.g. "ADP" or "G-fuse".
struct MetricTag {
  Metric metric = Metric::Euc;
  bool geodesic = false;

  std::string str() const;
  /// Accepts the names produced by str(), case-insensitively.
  static MetricTag parse(const std::string& name);
  friend bool operator==(const MetricTag&, const MetricTag&) = default;
};

std::string metric_name(Metric m);
Metric parse_metric(const std::string& name);

/// Symmetric, nonnegative L x L matrix with a zero diagonal.
struct DissimilarityMatrix {
  Eigen::MatrixXd values;
  MetricTag tag;

  Index size() const { return values.rows(); }
  double operator()(Index i, Index j) const { return values(i, j); }
  /// Throws DataError when any invariant is violated.
  void validate(double symmetry_tol = 1e-9) const;
};

struct FuseConfig {
  double gamma = 12.0;   // dissimilarity units per second
  double t_thresh = 2.0;  // seconds; only used when calibrating gamma
};

/// Value of one cosine-similarity term when an antenna vector has zero energy.
struct ZeroNormPolicy {
  double one_zero = 1.0;
  double both_zero = 0.0;
};

/// Time-domain tensors of every datapoint, computed once.
class TimeDomainCache {
 public:
  explicit TimeDomainCache(const CsiDataset& ds);
  const CsiTensor& operator[](Index l) const { return taps_[static_cast<std::size_t>(l)]; }
  Index size() const { return static_cast<Index>(taps_.size()); }

 private:
  std::vector<CsiTensor> taps_;
};

double d_euc(const CsiDataset& ds, Index i, Index j);
double d_time(const CsiDataset& ds, Index i, Index j);
double d_cira(const TimeDomainCache& taps, Index i, Index j, const TapWindow& w);
double d_cs(const CsiDataset& ds, Index i, Index j, const ZeroNormPolicy& zero = {});
double d_adp(const TimeDomainCache& taps, Index i, Index j, const TapWindow& w,
             const ZeroNormPolicy& zero = {});
inline double d_fuse(double adp, double time, const FuseConfig& cfg) {
  return std::min(adp, cfg.gamma * time);
}

/// One 1 - |<a,b>|^2 / (|a|^2 |b|^2) term on complex antenna vectors.
double cosine_term(const Eigen::Ref<const Eigen::VectorXcd>& a,
                   const Eigen::Ref<const Eigen::VectorXcd>& b, const ZeroNormPolicy& zero = {});

/// Symmetrized learned dissimilarity (D(fi,fj) + D(fj,fi)) / 2, clamped at 0.
/// Feature vectors are raw (unstandardized); the model applies its own
/// standardization.
double d_dl(const Mlp& model, const Eigen::VectorXd& fi, const Eigen::VectorXd& fj);

struct PairwiseParams {
  TapWindow window{1, 1};
  FuseConfig fuse{};
  ZeroNormPolicy zero{};
  const Mlp* dl_model = nullptr;  // required for Metric::Dl
};

/// Full pairwise matrix for one metric. Per-pair failures are rethrown with
/// the offending (i, j). Output does not depend on the worker count.
DissimilarityMatrix pairwise_matrix(const CsiDataset& ds, Metric metric, const PairwiseParams& params);

/// Elementwise min(adp, gamma * time) for two precomputed matrices.
DissimilarityMatrix fuse_matrices(const DissimilarityMatrix& adp, const DissimilarityMatrix& time,
                                  const FuseConfig& cfg);

struct GammaCalibration {
  double gamma = 0;
  std::size_t pairs = 0;
  double bin_width = 0;
  std::vector<double> histogram;  // smoothed counts
  Index low_mode = 0, high_mode = 0, valley = 0;
};

/// Picks the valley between the two dominant modes of a ratio histogram:
/// 80 bins on [0, 99th percentile], boxcar smoothing of width 5, modes are the
/// two tallest local maxima at least 10 bins apart. Throws CalibrationError
/// with fewer than 100 ratios or when no second mode exists.
GammaCalibration gamma_from_ratios(std::vector<double> ratios);

/// Histogram of adp/time over pairs with 0 < time < t_thresh, fed to
/// gamma_from_ratios.
GammaCalibration calibrate_gamma(const CsiDataset& ds, const DissimilarityMatrix& adp,
                                 double t_thresh = 2.0);

}  // namespace chartlab
