#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "chartlab/chart.hpp"
#include "chartlab/dissimilarity.hpp"

namespace chartlab {

/// round(0.05 L), at least 1.
Index default_neighborhood(Index L);
/// Throws std::invalid_argument unless K >= 1 and 2L - 3K - 1 > 0.
void validate_neighborhood(Index L, Index K);

struct NeighborhoodScores {
  double ct = 0;
  double tw = 0;
  Index K = 0;
};

/// Continuity and trustworthiness. Ranks exclude the point itself and break
/// ties by ascending index. The representation is either chart coordinates or
/// the rows of a dissimilarity matrix.
NeighborhoodScores continuity_trustworthiness(const Points2& truth, const Points2& chart, Index K);
NeighborhoodScores continuity_trustworthiness(const Points2& truth, const DissimilarityMatrix& D, Index K);

/// Kruskal's stress with the optimal scale; 1 when every representation
/// distance is zero.
double kruskal_stress(const Points2& truth, const Points2& chart);
double kruskal_stress(const Points2& truth, const DissimilarityMatrix& D);

struct RajskiResult {
  double rd = 0;
  bool degenerate = false;  // joint entropy was zero, rd forced to 0
};

/// 1 - I(V;Q) / H(V,Q) over pairs i < j, both variables quantized into
/// equal-width bins on [0, max].
RajskiResult rajski_distance(const Points2& truth, const Points2& chart, int bins = 100);
RajskiResult rajski_distance(const Points2& truth, const DissimilarityMatrix& D, int bins = 100);
/// Same, from paired samples directly.
RajskiResult rajski_distance(const std::vector<double>& v, const std::vector<double>& q, int bins = 100);

struct AffineFit {
  Eigen::Matrix2d A = Eigen::Matrix2d::Identity();
  Eigen::Vector2d b = Eigen::Vector2d::Zero();
  Eigen::VectorXd errors;  // |A z_l + b - x_l| per point
  double mae = 0;
};

/// Least-squares affine map from chart to truth via the normal equations on
/// homogeneous coordinates. Throws DataError when the chart points are
/// collinear.
AffineFit optimal_affine_mae(const Points2& chart, const Points2& truth);

/// Distinct error values with the fraction of samples <= each value.
std::vector<std::pair<double, double>> error_cdf(const Eigen::VectorXd& errors);

struct EvalReport {
  std::string method;      // embedding method, empty for a matrix evaluation
  std::string metric_tag;
  double ct = 0, tw = 0, ks = 0, rd = 0;
  std::optional<double> mae;  // charts only
  Index K = 0;
  AffineFit affine;
  std::vector<std::pair<double, double>> cdf;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

/// K = 0 selects default_neighborhood(L).
EvalReport evaluate_chart(const Points2& truth, const ChannelChart& chart, Index K = 0);
EvalReport evaluate_matrix(const Points2& truth, const DissimilarityMatrix& D, Index K = 0);

}  // namespace chartlab
