#include "chartlab/dissimilarity.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>

#include "chartlab/neural.hpp"
#include "chartlab/parallel.hpp"

namespace chartlab {

std::string metric_name(Metric m) {
  switch (m) {
    case Metric::Euc: return "Euc";
    case Metric::Time: return "time";
    case Metric::Cira: return "CIRA";
    case Metric::Cs: return "CS";
    case Metric::Adp: return "ADP";
    case Metric::Dl: return "DL";
    case Metric::Fuse: return "fuse";
  }
  return "?";
}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

Metric parse_metric(const std::string& name) {
  const std::string n = lower(name);
  for (Metric m : {Metric::Euc, Metric::Time, Metric::Cira, Metric::Cs, Metric::Adp, Metric::Dl,
                   Metric::Fuse})
    if (lower(metric_name(m)) == n) return m;
  throw std::invalid_argument("unknown metric '" + name + "'");
}

std::string MetricTag::str() const { return (geodesic ? "G-" : "") + metric_name(metric); }

MetricTag MetricTag::parse(const std::string& name) {
  MetricTag tag;
  std::string rest = name;
  if (rest.size() > 2 && (rest[0] == 'G' || rest[0] == 'g') && rest[1] == '-') {
    tag.geodesic = true;
    rest = rest.substr(2);
  }
  tag.metric = parse_metric(rest);
  return tag;
}

void DissimilarityMatrix::validate(double symmetry_tol) const {
  if (values.rows() != values.cols()) throw DataError("dissimilarity matrix is not square");
  const Index L = values.rows();
  for (Index i = 0; i < L; ++i) {
    if (values(i, i) != 0.0) throw DataError("dissimilarity diagonal entry " + std::to_string(i) + " is not 0");
    for (Index j = 0; j < L; ++j) {
      const double v = values(i, j);
      if (!std::isfinite(v) || v < 0)
        throw DataError("dissimilarity (" + std::to_string(i) + ", " + std::to_string(j) +
                        ") is negative or not finite");
      if (j > i && std::abs(v - values(j, i)) > symmetry_tol * std::max(1.0, std::abs(v)))
        throw DataError("dissimilarity matrix is not symmetric at (" + std::to_string(i) + ", " +
                        std::to_string(j) + ")");
    }
  }
}

TimeDomainCache::TimeDomainCache(const CsiDataset& ds) : taps_(static_cast<std::size_t>(ds.size())) {
  parallel_for(0, ds.size(), [&](Index l) { taps_[static_cast<std::size_t>(l)] = to_time_domain(ds[l].H); });
}

double d_euc(const CsiDataset& ds, Index i, Index j) { return (ds[i].x - ds[j].x).norm(); }

double d_time(const CsiDataset& ds, Index i, Index j) { return std::abs(ds[i].t - ds[j].t); }

double d_cira(const TimeDomainCache& taps, Index i, Index j, const TapWindow& w) {
  const CsiTensor& a = taps[i];
  const CsiTensor& b = taps[j];
  w.validate(a.subcarriers());
  const Index cols = w.span();
  const Index first = w.tau_min - 1;
  return (a.matrix().middleCols(first, cols).cwiseAbs() - b.matrix().middleCols(first, cols).cwiseAbs())
      .cwiseAbs()
      .sum();
}

double cosine_term(const Eigen::Ref<const Eigen::VectorXcd>& a, const Eigen::Ref<const Eigen::VectorXcd>& b,
                   const ZeroNormPolicy& zero) {
  const double na = a.squaredNorm();
  const double nb = b.squaredNorm();
  if (na == 0.0 || nb == 0.0) return (na == 0.0 && nb == 0.0) ? zero.both_zero : zero.one_zero;
  const double inner = std::norm(a.dot(b));  // dot() conjugates the first argument
  return std::clamp(1.0 - inner / (na * nb), 0.0, 1.0);
}

double d_cs(const CsiDataset& ds, Index i, Index j, const ZeroNormPolicy& zero) {
  const CsiTensor& a = ds[i].H;
  const CsiTensor& b = ds[j].H;
  double sum = 0;
  for (Index arr = 0; arr < a.arrays(); ++arr)
    for (Index n = 0; n < a.subcarriers(); ++n) sum += cosine_term(a.snapshot(arr, n), b.snapshot(arr, n), zero);
  return sum;
}

double d_adp(const TimeDomainCache& taps, Index i, Index j, const TapWindow& w, const ZeroNormPolicy& zero) {
  const CsiTensor& a = taps[i];
  const CsiTensor& b = taps[j];
  w.validate(a.subcarriers());
  double sum = 0;
  for (Index arr = 0; arr < a.arrays(); ++arr)
    for (Index tau = w.tau_min - 1; tau < w.tau_max; ++tau)
      sum += cosine_term(a.snapshot(arr, tau), b.snapshot(arr, tau), zero);
  return sum;
}

double d_dl(const Mlp& model, const Eigen::VectorXd& fi, const Eigen::VectorXd& fj) {
  if (fi.size() != fj.size() || 2 * fi.size() != model.input_dim())
    throw std::invalid_argument("feature length does not match the dissimilarity model input");
  Eigen::MatrixXd in(2 * fi.size(), 2);
  in.col(0) << fi, fj;
  in.col(1) << fj, fi;
  const Eigen::MatrixXd out = model.predict(in);
  return std::max(0.0, 0.5 * (out(0, 0) + out(0, 1)));
}

namespace {

/// Antenna vectors of every (array, tap/subcarrier) slot packed per datapoint
/// together with their energies, so the pair loop never touches the tensors.
struct PackedSnapshots {
  Index slots = 0;
  Index antennas = 0;
  std::vector<Eigen::MatrixXcd> vectors;  // antennas x slots per datapoint
  std::vector<Eigen::VectorXd> energy;    // slots per datapoint
};

PackedSnapshots pack(Index L, Index arrays, Index antennas, Index first, Index count,
                     const std::function<const CsiTensor&(Index)>& tensor) {
  PackedSnapshots p;
  p.slots = arrays * count;
  p.antennas = antennas;
  p.vectors.resize(static_cast<std::size_t>(L));
  p.energy.resize(static_cast<std::size_t>(L));
  parallel_for(0, L, [&](Index l) {
    const CsiTensor& h = tensor(l);
    Eigen::MatrixXcd v(antennas, p.slots);
    for (Index b = 0; b < arrays; ++b)
      v.middleCols(b * count, count) = h.matrix().block(b * antennas, first, antennas, count);
    p.energy[static_cast<std::size_t>(l)] = v.colwise().squaredNorm().transpose();
    p.vectors[static_cast<std::size_t>(l)] = std::move(v);
  });
  return p;
}

double packed_cosine_sum(const PackedSnapshots& p, Index i, Index j, const ZeroNormPolicy& zero) {
  const auto& a = p.vectors[static_cast<std::size_t>(i)];
  const auto& b = p.vectors[static_cast<std::size_t>(j)];
  const auto& ea = p.energy[static_cast<std::size_t>(i)];
  const auto& eb = p.energy[static_cast<std::size_t>(j)];
  double sum = 0;
  for (Index s = 0; s < p.slots; ++s) {
    const double na = ea(s), nb = eb(s);
    if (na == 0.0 || nb == 0.0) {
      sum += (na == 0.0 && nb == 0.0) ? zero.both_zero : zero.one_zero;
      continue;
    }
    const double inner = std::norm(a.col(s).dot(b.col(s)));
    sum += std::clamp(1.0 - inner / (na * nb), 0.0, 1.0);
  }
  return sum;
}

template <class PairFn>
DissimilarityMatrix fill_upper(Index L, MetricTag tag, PairFn&& pair) {
  DissimilarityMatrix D{Eigen::MatrixXd::Zero(L, L), tag};
  parallel_for(0, L, [&](Index i) {
    for (Index j = i + 1; j < L; ++j) {
      double v;
      try {
        v = pair(i, j);
      } catch (const std::exception& e) {
        throw DataError("pair (" + std::to_string(i) + ", " + std::to_string(j) + "): " + e.what());
      }
      if (!std::isfinite(v))
        throw NumericalError("pair (" + std::to_string(i) + ", " + std::to_string(j) +
                             "): dissimilarity is not finite");
      D.values(i, j) = v;
      D.values(j, i) = v;
    }
  });
  return D;
}

DissimilarityMatrix dl_matrix(const CsiDataset& ds, const Mlp& model) {
  const Index L = ds.size();
  const Eigen::MatrixXd F = feature_matrix(ds, model.window);
  if (2 * F.rows() != model.input_dim())
    throw std::invalid_argument("dataset features do not match the dissimilarity model input");
  const Index dim = F.rows();
  DissimilarityMatrix D{Eigen::MatrixXd::Zero(L, L), {Metric::Dl, false}};
  parallel_for(0, L, [&](Index i) {
    const Index count = L - i - 1;
    if (count == 0) return;
    Eigen::MatrixXd in(2 * dim, 2 * count);
    for (Index c = 0; c < count; ++c) {
      const Index j = i + 1 + c;
      in.col(2 * c) << F.col(i), F.col(j);
      in.col(2 * c + 1) << F.col(j), F.col(i);
    }
    const Eigen::MatrixXd out = model.predict(in);
    for (Index c = 0; c < count; ++c) {
      const double v = std::max(0.0, 0.5 * (out(0, 2 * c) + out(0, 2 * c + 1)));
      D.values(i, i + 1 + c) = v;
      D.values(i + 1 + c, i) = v;
    }
  });
  return D;
}

}  // namespace

DissimilarityMatrix pairwise_matrix(const CsiDataset& ds, Metric metric, const PairwiseParams& params) {
  const Index L = ds.size();
  switch (metric) {
    case Metric::Euc:
      return fill_upper(L, {metric, false}, [&](Index i, Index j) { return d_euc(ds, i, j); });
    case Metric::Time:
      return fill_upper(L, {metric, false}, [&](Index i, Index j) { return d_time(ds, i, j); });
    case Metric::Cira: {
      params.window.validate(ds.subcarriers());
      const TimeDomainCache taps(ds);
      const Index first = params.window.tau_min - 1, count = params.window.span();
      std::vector<Eigen::MatrixXd> amp(static_cast<std::size_t>(L));
      parallel_for(0, L, [&](Index l) {
        amp[static_cast<std::size_t>(l)] = taps[l].matrix().middleCols(first, count).cwiseAbs();
      });
      return fill_upper(L, {metric, false}, [&](Index i, Index j) {
        return (amp[static_cast<std::size_t>(i)] - amp[static_cast<std::size_t>(j)]).cwiseAbs().sum();
      });
    }
    case Metric::Cs: {
      const PackedSnapshots p = pack(L, ds.arrays(), ds.antennas(), 0, ds.subcarriers(),
                                     [&](Index l) -> const CsiTensor& { return ds[l].H; });
      return fill_upper(L, {metric, false},
                        [&](Index i, Index j) { return packed_cosine_sum(p, i, j, params.zero); });
    }
    case Metric::Adp: {
      params.window.validate(ds.subcarriers());
      const TimeDomainCache taps(ds);
      const PackedSnapshots p = pack(L, ds.arrays(), ds.antennas(), params.window.tau_min - 1,
                                     params.window.span(),
                                     [&](Index l) -> const CsiTensor& { return taps[l]; });
      return fill_upper(L, {metric, false},
                        [&](Index i, Index j) { return packed_cosine_sum(p, i, j, params.zero); });
    }
    case Metric::Fuse: {
      if (!(params.fuse.gamma > 0)) throw std::invalid_argument("fuse gamma must be positive");
      const DissimilarityMatrix adp = pairwise_matrix(ds, Metric::Adp, params);
      const DissimilarityMatrix time = pairwise_matrix(ds, Metric::Time, params);
      return fuse_matrices(adp, time, params.fuse);
    }
    case Metric::Dl:
      if (params.dl_model == nullptr) throw std::invalid_argument("DL metric requires a trained model");
      return dl_matrix(ds, *params.dl_model);
  }
  throw std::invalid_argument("unsupported metric");
}

DissimilarityMatrix fuse_matrices(const DissimilarityMatrix& adp, const DissimilarityMatrix& time,
                                  const FuseConfig& cfg) {
  if (!(cfg.gamma > 0)) throw std::invalid_argument("fuse gamma must be positive");
  if (adp.size() != time.size()) throw DataError("fused matrices differ in size");
  return {adp.values.cwiseMin(cfg.gamma * time.values), {Metric::Fuse, false}};
}

GammaCalibration gamma_from_ratios(std::vector<double> ratios) {
  constexpr Index kBins = 80;
  constexpr Index kSmooth = 5;
  constexpr Index kMinSeparation = 10;
  if (ratios.size() < 100)
    throw CalibrationError("only " + std::to_string(ratios.size()) +
                           " short-interval pairs; supply gamma manually");

  GammaCalibration cal;
  cal.pairs = ratios.size();
  const auto p99 = ratios.begin() + static_cast<std::ptrdiff_t>(0.99 * static_cast<double>(ratios.size() - 1));
  std::nth_element(ratios.begin(), p99, ratios.end());
  const double top = *p99;
  if (!(top > 0)) throw CalibrationError("ratio distribution is degenerate; supply gamma manually");
  cal.bin_width = top / kBins;

  std::vector<double> counts(kBins, 0.0);
  for (double r : ratios) {
    if (r > top) continue;
    const auto bin = std::min<Index>(kBins - 1, static_cast<Index>(r / cal.bin_width));
    counts[static_cast<std::size_t>(bin)] += 1;
  }
  cal.histogram.assign(kBins, 0.0);
  for (Index b = 0; b < kBins; ++b) {
    double s = 0;
    Index n = 0;
    for (Index o = -kSmooth / 2; o <= kSmooth / 2; ++o) {
      const Index k = b + o;
      if (k < 0 || k >= kBins) continue;
      s += counts[static_cast<std::size_t>(k)];
      ++n;
    }
    cal.histogram[static_cast<std::size_t>(b)] = s / static_cast<double>(n);
  }

  const auto& h = cal.histogram;
  std::vector<Index> peaks;
  for (Index b = 0; b < kBins; ++b) {
    const double left = b > 0 ? h[static_cast<std::size_t>(b - 1)] : -1.0;
    const double right = b + 1 < kBins ? h[static_cast<std::size_t>(b + 1)] : -1.0;
    const double v = h[static_cast<std::size_t>(b)];
    // plateaus count once, at their left edge
    if (v > 0 && v > left && v >= right) peaks.push_back(b);
  }
  std::stable_sort(peaks.begin(), peaks.end(), [&](Index a, Index b) {
    return h[static_cast<std::size_t>(a)] > h[static_cast<std::size_t>(b)];
  });
  if (peaks.empty()) throw CalibrationError("ratio histogram is empty; supply gamma manually");
  const Index first = peaks.front();
  Index second = -1;
  for (Index p : peaks)
    if (std::abs(p - first) >= kMinSeparation) {
      second = p;
      break;
    }
  if (second < 0)
    throw CalibrationError("ratio histogram is unimodal; supply gamma manually");

  cal.low_mode = std::min(first, second);
  cal.high_mode = std::max(first, second);
  // an empty gap between the modes is a flat minimum; take its midpoint
  double lowest = h[static_cast<std::size_t>(cal.low_mode)];
  for (Index b = cal.low_mode; b <= cal.high_mode; ++b) lowest = std::min(lowest, h[static_cast<std::size_t>(b)]);
  Index lo = cal.high_mode, hi = cal.low_mode;
  for (Index b = cal.low_mode; b <= cal.high_mode; ++b)
    if (h[static_cast<std::size_t>(b)] == lowest) {
      lo = std::min(lo, b);
      hi = std::max(hi, b);
    }
  cal.valley = (lo + hi) / 2;
  cal.gamma = (static_cast<double>(cal.valley) + 0.5) * cal.bin_width;
  return cal;
}

GammaCalibration calibrate_gamma(const CsiDataset& ds, const DissimilarityMatrix& adp, double t_thresh) {
  if (!(t_thresh > 0)) throw std::invalid_argument("t_thresh must be positive");
  if (adp.size() != ds.size()) throw DataError("ADP matrix does not match the dataset size");
  std::vector<double> ratios;
  for (Index i = 0; i < ds.size(); ++i)
    for (Index j = i + 1; j < ds.size(); ++j) {
      const double dt = d_time(ds, i, j);
      if (dt > 0 && dt < t_thresh) ratios.push_back(adp(i, j) / dt);
    }
  return gamma_from_ratios(std::move(ratios));
}

}  // namespace chartlab
