#include "chartlab/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/LU>

#include "chartlab/parallel.hpp"

namespace chartlab {
namespace {

// Representation distance from row l to column i.
template <class Dist>
NeighborhoodScores rank_scores(const Points2& truth, Index L, Index K, Dist&& rep) {
  if (truth.rows() != L)
    throw DataError("truth has " + std::to_string(truth.rows()) + " points, representation has " +
                    std::to_string(L));
  validate_neighborhood(L, K);
  Eigen::VectorXd ct_row(L), tw_row(L);
  parallel_for(0, L, [&](Index l) {
    std::vector<Index> by_truth, by_rep;
    by_truth.reserve(static_cast<std::size_t>(L - 1));
    for (Index i = 0; i < L; ++i)
      if (i != l) by_truth.push_back(i);
    by_rep = by_truth;
    Eigen::VectorXd dt(L), dr(L);
    for (Index i = 0; i < L; ++i) {
      dt(i) = (truth.row(l) - truth.row(i)).norm();
      dr(i) = rep(l, i);
    }
    std::stable_sort(by_truth.begin(), by_truth.end(), [&](Index a, Index b) { return dt(a) < dt(b); });
    std::stable_sort(by_rep.begin(), by_rep.end(), [&](Index a, Index b) { return dr(a) < dr(b); });
    std::vector<Index> r_truth(static_cast<std::size_t>(L)), r_rep(static_cast<std::size_t>(L));
    for (Index p = 0; p < L - 1; ++p) {
      r_truth[static_cast<std::size_t>(by_truth[static_cast<std::size_t>(p)])] = p + 1;
      r_rep[static_cast<std::size_t>(by_rep[static_cast<std::size_t>(p)])] = p + 1;
    }
    double c = 0, t = 0;
    for (Index p = 0; p < K; ++p) {
      c += std::max<Index>(0, r_rep[static_cast<std::size_t>(by_truth[static_cast<std::size_t>(p)])] - K);
      t += std::max<Index>(0, r_truth[static_cast<std::size_t>(by_rep[static_cast<std::size_t>(p)])] - K);
    }
    ct_row(l) = c;
    tw_row(l) = t;
  });
  double c = 0, t = 0;
  for (Index l = 0; l < L; ++l) {
    c += ct_row(l);
    t += tw_row(l);
  }
  const double Ld = static_cast<double>(L), Kd = static_cast<double>(K);
  const double norm = 2.0 / (Ld * Kd * (2 * Ld - 3 * Kd - 1));
  return {1 - norm * c, 1 - norm * t, K};
}

template <class Dist>
double stress(const Points2& truth, Index L, Dist&& rep) {
  if (truth.rows() != L) throw DataError("truth and representation sizes differ");
  double xz = 0, zz = 0, xx = 0;
  for (Index i = 0; i < L; ++i)
    for (Index j = i + 1; j < L; ++j) {
      const double a = (truth.row(i) - truth.row(j)).norm(), b = rep(i, j);
      xz += a * b;
      zz += b * b;
      xx += a * a;
    }
  if (!(xx > 0)) throw DataError("all ground-truth positions coincide; Kruskal's stress is undefined");
  if (!(zz > 0)) return 1.0;
  const double beta = xz / zz;
  double num = 0;
  for (Index i = 0; i < L; ++i)
    for (Index j = i + 1; j < L; ++j) {
      const double r = (truth.row(i) - truth.row(j)).norm() - beta * rep(i, j);
      num += r * r;
    }
  return std::min(1.0, std::sqrt(num / xx));
}

template <class Dist>
RajskiResult rajski(const Points2& truth, Index L, int bins, Dist&& rep) {
  if (truth.rows() != L) throw DataError("truth and representation sizes differ");
  std::vector<double> v, q;
  v.reserve(static_cast<std::size_t>(L * (L - 1) / 2));
  q.reserve(v.capacity());
  for (Index i = 0; i < L; ++i)
    for (Index j = i + 1; j < L; ++j) {
      v.push_back((truth.row(i) - truth.row(j)).norm());
      q.push_back(rep(i, j));
    }
  return rajski_distance(v, q, bins);
}

}  // namespace

Index default_neighborhood(Index L) {
  return std::max<Index>(1, static_cast<Index>(std::llround(0.05 * static_cast<double>(L))));
}

void validate_neighborhood(Index L, Index K) {
  if (K < 1 || 2 * L - 3 * K - 1 <= 0)
    throw std::invalid_argument("neighborhood size K = " + std::to_string(K) + " is invalid for L = " +
                                std::to_string(L) + " (need 1 <= K and 3K < 2L - 1)");
}

NeighborhoodScores continuity_trustworthiness(const Points2& truth, const Points2& chart, Index K) {
  return rank_scores(truth, chart.rows(), K, [&](Index a, Index b) { return (chart.row(a) - chart.row(b)).norm(); });
}

NeighborhoodScores continuity_trustworthiness(const Points2& truth, const DissimilarityMatrix& D, Index K) {
  return rank_scores(truth, D.size(), K, [&](Index a, Index b) { return D(a, b); });
}

double kruskal_stress(const Points2& truth, const Points2& chart) {
  return stress(truth, chart.rows(), [&](Index a, Index b) { return (chart.row(a) - chart.row(b)).norm(); });
}

double kruskal_stress(const Points2& truth, const DissimilarityMatrix& D) {
  return stress(truth, D.size(), [&](Index a, Index b) { return D(a, b); });
}

RajskiResult rajski_distance(const Points2& truth, const Points2& chart, int bins) {
  return rajski(truth, chart.rows(), bins, [&](Index a, Index b) { return (chart.row(a) - chart.row(b)).norm(); });
}

RajskiResult rajski_distance(const Points2& truth, const DissimilarityMatrix& D, int bins) {
  return rajski(truth, D.size(), bins, [&](Index a, Index b) { return D(a, b); });
}

RajskiResult rajski_distance(const std::vector<double>& v, const std::vector<double>& q, int bins) {
  if (v.size() != q.size() || v.empty()) throw DataError("Rajski's distance needs equally many nonempty samples");
  if (bins < 1) throw std::invalid_argument("bin count must be positive");
  const double vmax = *std::max_element(v.begin(), v.end());
  const double qmax = *std::max_element(q.begin(), q.end());
  auto bin = [bins](double x, double hi) {
    if (!(hi > 0)) return 0;
    return std::min(bins - 1, static_cast<int>(std::floor(x / hi * bins)));
  };
  Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(bins, bins);
  for (std::size_t p = 0; p < v.size(); ++p) joint(bin(v[p], vmax), bin(q[p], qmax)) += 1;
  joint /= static_cast<double>(v.size());
  const Eigen::VectorXd pv = joint.rowwise().sum();
  const Eigen::RowVectorXd pq = joint.colwise().sum();
  double h = 0, mi = 0;
  for (Index a = 0; a < bins; ++a)
    for (Index b = 0; b < bins; ++b) {
      const double p = joint(a, b);
      if (p <= 0) continue;
      h -= p * std::log2(p);
      mi += p * std::log2(p / (pv(a) * pq(b)));
    }
  if (!(h > 0)) return {0.0, true};
  return {std::clamp(1 - mi / h, 0.0, 1.0), false};
}

AffineFit optimal_affine_mae(const Points2& chart, const Points2& truth) {
  const Index L = chart.rows();
  if (truth.rows() != L) throw DataError("chart and truth sizes differ");
  if (L < 3) throw DataError("an affine fit needs at least 3 points");
  const Eigen::RowVector2d mu = chart.colwise().mean();
  Eigen::MatrixXd X(L, 3);
  X.leftCols(2) = chart.rowwise() - mu;
  X.col(2).setOnes();
  const Eigen::Matrix3d normal = X.transpose() * X;
  Eigen::FullPivLU<Eigen::Matrix3d> lu(normal);
  lu.setThreshold(1e-12);
  if (lu.rank() < 3)
    throw DataError("chart points are collinear; the affine transform is not unique");
  const Eigen::Matrix<double, 3, 2> theta = lu.solve(X.transpose() * truth);

  AffineFit fit;
  fit.A = theta.topRows(2).transpose();
  fit.b = theta.row(2).transpose() - fit.A * mu.transpose();
  fit.errors.resize(L);
  for (Index l = 0; l < L; ++l)
    fit.errors(l) = (fit.A * chart.row(l).transpose() + fit.b - truth.row(l).transpose()).norm();
  fit.mae = fit.errors.mean();
  return fit;
}

std::vector<std::pair<double, double>> error_cdf(const Eigen::VectorXd& errors) {
  if (errors.size() == 0) throw std::invalid_argument("error CDF needs at least one sample");
  std::vector<double> sorted(errors.data(), errors.data() + errors.size());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::pair<double, double>> cdf;
  const double n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    cdf.emplace_back(sorted[i], static_cast<double>(i + 1) / n);
  }
  return cdf;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j = {{"method", method}, {"metric", metric_tag}, {"K", K},
                      {"ct", ct},         {"tw", tw},           {"ks", ks}, {"rd", rd}};
  if (mae) {
    j["mae"] = *mae;
    j["affine"] = {{"A", {{affine.A(0, 0), affine.A(0, 1)}, {affine.A(1, 0), affine.A(1, 1)}}},
                   {"b", {affine.b(0), affine.b(1)}}};
    nlohmann::json c = nlohmann::json::array();
    for (const auto& [e, f] : cdf) c.push_back({e, f});
    j["error_cdf"] = c;
  } else {
    j["mae"] = nullptr;
  }
  j["warnings"] = warnings;
  return j;
}

EvalReport evaluate_chart(const Points2& truth, const ChannelChart& chart, Index K) {
  EvalReport r;
  r.method = chart.method;
  r.metric_tag = chart.metric_tag;
  r.K = K > 0 ? K : default_neighborhood(chart.size());
  const auto nb = continuity_trustworthiness(truth, chart.z, r.K);
  r.ct = nb.ct;
  r.tw = nb.tw;
  r.ks = kruskal_stress(truth, chart.z);
  const auto rd = rajski_distance(truth, chart.z);
  r.rd = rd.rd;
  if (rd.degenerate) r.warnings.push_back("joint entropy is zero; Rajski's distance set to 0");
  r.affine = optimal_affine_mae(chart.z, truth);
  r.mae = r.affine.mae;
  r.cdf = error_cdf(r.affine.errors);
  return r;
}

EvalReport evaluate_matrix(const Points2& truth, const DissimilarityMatrix& D, Index K) {
  EvalReport r;
  r.metric_tag = D.tag.str();
  r.K = K > 0 ? K : default_neighborhood(D.size());
  const auto nb = continuity_trustworthiness(truth, D, r.K);
  r.ct = nb.ct;
  r.tw = nb.tw;
  r.ks = kruskal_stress(truth, D);
  const auto rd = rajski_distance(truth, D);
  r.rd = rd.rd;
  if (rd.degenerate) r.warnings.push_back("joint entropy is zero; Rajski's distance set to 0");
  return r;
}

}  // namespace chartlab
