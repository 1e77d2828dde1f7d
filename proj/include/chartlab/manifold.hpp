#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chartlab/chart.hpp"
#include "chartlab/dissimilarity.hpp"

namespace chartlab {

struct EmbedConfig {
  int iterations = 1000;
  /// MDS and Sammon: multiple of the majorization step (1 = one Guttman
  /// transform per iteration). t-SNE: plain gradient step size.
  double learning_rate = 1.0;
  double momentum = 0.8;
  std::uint64_t seed = 0;
  double perplexity = 120.0;        // t-SNE only
  double tolerance = 1e-9;          // relative objective decrease over 25 accepted steps
  bool early_exaggeration = false;  // t-SNE only: factor 12 for the first 250 iterations

  void validate() const;
};

/// Defaults for "mds", "isomap", "sammon" or "tsne".
EmbedConfig default_embed_config(const std::string& method);

/// Standard normal points scaled by 1e-2 * median off-diagonal dissimilarity.
Points2 initial_chart(const DissimilarityMatrix& D, std::uint64_t seed);

/// Sum over i < j of (d_ij - |z_i - z_j|)^2 and its gradient.
double mds_stress(const DissimilarityMatrix& D, const Points2& z, Points2* grad = nullptr);

/// Sum over i < j with d_ij > 0 of (d_ij - |z_i - z_j|)^2 / d_ij and its gradient.
double sammon_stress(const DissimilarityMatrix& D, const Points2& z, Points2* grad = nullptr);

struct TsneAffinities {
  Eigen::MatrixXd P;             // symmetric joint probabilities, zero diagonal
  Eigen::VectorXd sigma;         // per-point bandwidth
  Eigen::VectorXd perplexity;    // achieved per-point perplexity
};

/// Per-point binary search for sigma_i hitting the target perplexity, then
/// p_ij = (p_j|i + p_i|j) / (2L). Throws NumericalError naming the point when
/// the target cannot be bracketed.
TsneAffinities tsne_affinities(const DissimilarityMatrix& D, double perplexity);

/// KL(P || Q) with the Student-t kernel and its gradient.
double tsne_kl(const Eigen::MatrixXd& P, const Points2& z, Points2* grad = nullptr);

ChannelChart mds(const DissimilarityMatrix& D, const EmbedConfig& cfg = default_embed_config("mds"));
ChannelChart isomap(const DissimilarityMatrix& D, Index k,
                    const EmbedConfig& cfg = default_embed_config("isomap"));
ChannelChart sammon(const DissimilarityMatrix& D, const EmbedConfig& cfg = default_embed_config("sammon"));
ChannelChart tsne(const DissimilarityMatrix& D, const EmbedConfig& cfg = default_embed_config("tsne"));

/// Dispatches on "mds", "isomap" (k-NN geodesic lifting with k first), "sammon", "tsne".
ChannelChart embed(const std::string& method, const DissimilarityMatrix& D, const EmbedConfig& cfg, Index k = 20);

}  // namespace chartlab
