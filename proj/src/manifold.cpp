#include "chartlab/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "chartlab/geodesic.hpp"
#include "chartlab/parallel.hpp"

namespace chartlab {
namespace {

constexpr int kRecheckEvery = 25;

void check_matrix(const DissimilarityMatrix& D) {
  if (D.values.rows() != D.values.cols()) throw DataError("dissimilarity matrix is not square");
  if (D.size() < 2) throw DataError("embedding needs at least two points");
  D.validate();
}

nlohmann::json describe(const EmbedConfig& cfg, const std::string& method) {
  nlohmann::json h = {{"iterations", cfg.iterations},
                      {"learning_rate", cfg.learning_rate},
                      {"momentum", cfg.momentum},
                      {"tolerance", cfg.tolerance}};
  if (method == "tsne") {
    h["perplexity"] = cfg.perplexity;
    h["early_exaggeration"] = cfg.early_exaggeration;
  }
  return h;
}

ChannelChart zero_chart(const DissimilarityMatrix& D, const EmbedConfig& cfg, const std::string& method) {
  ChannelChart chart;
  chart.z = Points2::Zero(D.size(), 2);
  chart.method = method;
  chart.metric_tag = D.tag.str();
  chart.seed = cfg.seed;
  chart.hyperparameters = describe(cfg, method);
  chart.warnings.push_back("all dissimilarities are zero; returning the all-zero chart");
  return chart;
}

void center(Points2& z) { z.rowwise() -= z.colwise().mean(); }

template <bool Sammon>
double weighted_stress(const DissimilarityMatrix& D, const Points2& z, Points2* grad) {
  const Index L = D.size();
  if (z.rows() != L) throw std::invalid_argument("chart and matrix sizes differ");
  Eigen::VectorXd row(L);
  if (grad) grad->resize(L, 2);
  parallel_for(0, L, [&](Index i) {
    double s = 0;
    Eigen::RowVector2d g(0, 0);
    const Eigen::RowVector2d zi = z.row(i);
    for (Index j = 0; j < L; ++j) {
      if (j == i) continue;
      const double d = D(i, j);
      if (Sammon && !(d > 0)) continue;
      const Eigen::RowVector2d diff = zi - z.row(j);
      const double delta = diff.norm();
      const double r = d - delta;
      const double w = Sammon ? 1.0 / d : 1.0;
      s += w * r * r;
      if (delta > 0) g -= (2.0 * w * r / delta) * diff;
    }
    row(i) = s;
    if (grad) grad->row(i) = g;
  });
  double total = 0;
  for (Index i = 0; i < L; ++i) total += row(i);
  return 0.5 * total;
}

// Momentum descent with per-point majorization step; rejects any step that
// raises the objective, halving the step and dropping the velocity.
template <bool Sammon>
ChannelChart stress_descent(const DissimilarityMatrix& D, const EmbedConfig& cfg, const std::string& method) {
  cfg.validate();
  check_matrix(D);
  if ((D.values.array() == 0).all()) return zero_chart(D, cfg, method);

  const Index L = D.size();
  Eigen::VectorXd precond(L);
  for (Index i = 0; i < L; ++i) {
    double wsum = 0;
    for (Index j = 0; j < L; ++j)
      if (j != i && (!Sammon || D(i, j) > 0)) wsum += Sammon ? 1.0 / D(i, j) : 1.0;
    precond(i) = wsum > 0 ? cfg.learning_rate / (2.0 * wsum) : 0.0;
  }

  ChannelChart chart;
  chart.method = method;
  chart.metric_tag = D.tag.str();
  chart.seed = cfg.seed;
  chart.hyperparameters = describe(cfg, method);

  Points2 z = initial_chart(D, cfg.seed);
  Points2 grad, cand_grad;
  double stress = weighted_stress<Sammon>(D, z, &grad);
  chart.objective_trace.push_back(stress);
  Points2 velocity = Points2::Zero(L, 2);
  double step = 1.0;
  int accepted = 0;
  double checkpoint = stress;

  for (int it = 0; it < cfg.iterations; ++it) {
    const Points2 cand_velocity = cfg.momentum * velocity - step * (grad.array().colwise() * precond.array()).matrix();
    const Points2 cand = z + cand_velocity;
    const double cand_stress = weighted_stress<Sammon>(D, cand, &cand_grad);
    if (!std::isfinite(cand_stress))
      throw NumericalError(method + " diverged at iteration " + std::to_string(it + 1) +
                           " (objective is not finite); use a smaller learning rate");
    if (cand_stress <= stress) {
      z = cand;
      velocity = cand_velocity;
      stress = cand_stress;
      std::swap(grad, cand_grad);
      chart.objective_trace.push_back(stress);
      step = std::min(1.0, step * 1.25);
      if (stress == 0) break;
      if (++accepted % kRecheckEvery == 0) {
        if (checkpoint - stress <= cfg.tolerance * checkpoint) break;
        checkpoint = stress;
      }
    } else {
      velocity.setZero();
      step *= 0.5;
      if (step < 1e-12) break;
    }
  }
  center(z);
  chart.z = z;
  return chart;
}

// KL(P||Q) for the plain P; gradient uses exaggeration * P.
double kl_and_gradient(const Eigen::MatrixXd& P, const Points2& z, double exaggeration, Points2* grad) {
  const Index L = P.rows();
  if (P.cols() != L || z.rows() != L) throw std::invalid_argument("affinity and chart sizes differ");
  Eigen::VectorXd row(L);
  parallel_for(0, L, [&](Index i) {
    double s = 0;
    for (Index j = 0; j < L; ++j)
      if (j != i) s += 1.0 / (1.0 + (z.row(i) - z.row(j)).squaredNorm());
    row(i) = s;
  });
  double Z = 0;
  for (Index i = 0; i < L; ++i) Z += row(i);
  const double log_z = std::log(Z);

  if (grad) grad->resize(L, 2);
  parallel_for(0, L, [&](Index i) {
    double kl = 0;
    Eigen::RowVector2d g(0, 0);
    for (Index j = 0; j < L; ++j) {
      if (j == i) continue;
      const Eigen::RowVector2d diff = z.row(i) - z.row(j);
      const double w = 1.0 / (1.0 + diff.squaredNorm());
      const double p = P(i, j);
      if (p > 0) kl += p * (std::log(p) - std::log(w) + log_z);
      g += (4.0 * (exaggeration * p - w / Z) * w) * diff;
    }
    row(i) = kl;
    if (grad) grad->row(i) = g;
  });
  double kl = 0;
  for (Index i = 0; i < L; ++i) kl += row(i);
  return kl;
}

}  // namespace

void EmbedConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (!(learning_rate > 0)) throw std::invalid_argument("learning rate must be positive");
  if (!(momentum >= 0 && momentum < 1)) throw std::invalid_argument("momentum must lie in [0, 1)");
  if (!(tolerance >= 0)) throw std::invalid_argument("tolerance must be nonnegative");
}

EmbedConfig default_embed_config(const std::string& method) {
  EmbedConfig cfg;
  if (method == "tsne") {
    cfg.learning_rate = 200.0;
    cfg.momentum = 0.8;
    cfg.tolerance = 0;
  } else if (method != "mds" && method != "isomap" && method != "sammon") {
    throw std::invalid_argument("unknown embedding method '" + method + "'");
  }
  return cfg;
}

Points2 initial_chart(const DissimilarityMatrix& D, std::uint64_t seed) {
  const Index L = D.size();
  std::vector<double> upper;
  upper.reserve(static_cast<std::size_t>(L * (L - 1) / 2));
  for (Index j = 1; j < L; ++j)
    for (Index i = 0; i < j; ++i) upper.push_back(D(i, j));
  auto mid = upper.begin() + static_cast<std::ptrdiff_t>(upper.size() / 2);
  std::nth_element(upper.begin(), mid, upper.end());
  double scale = *mid;
  if (!(scale > 0)) scale = D.values.mean();
  if (!(scale > 0)) scale = 1.0;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Points2 z(L, 2);
  for (Index l = 0; l < L; ++l)
    for (Index c = 0; c < 2; ++c) z(l, c) = 1e-2 * scale * normal(rng);
  return z;
}

double mds_stress(const DissimilarityMatrix& D, const Points2& z, Points2* grad) {
  return weighted_stress<false>(D, z, grad);
}

double sammon_stress(const DissimilarityMatrix& D, const Points2& z, Points2* grad) {
  return weighted_stress<true>(D, z, grad);
}

TsneAffinities tsne_affinities(const DissimilarityMatrix& D, double perplexity) {
  check_matrix(D);
  const Index L = D.size();
  if (!(perplexity > 1) || !(perplexity < static_cast<double>(L) / 3.0))
    throw std::invalid_argument("perplexity " + std::to_string(perplexity) + " must lie in (1, L/3) with L = " +
                                std::to_string(L));
  const double target = std::log(perplexity);

  Eigen::MatrixXd cond = Eigen::MatrixXd::Zero(L, L);  // column i holds p_{.|i}
  TsneAffinities out;
  out.sigma.resize(L);
  out.perplexity.resize(L);
  parallel_for(0, L, [&](Index i) {
    Eigen::VectorXd d2(L);
    double dmin = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < L; ++j) {
      d2(j) = D(i, j) * D(i, j);
      if (j != i) dmin = std::min(dmin, d2(j));
    }
    d2.array() -= dmin;
    d2(i) = 0;
    Eigen::VectorXd w(L);
    auto entropy = [&](double beta) {
      w = (-beta * d2.array()).exp();
      w(i) = 0;
      const double z = w.sum();
      return std::log(z) + beta * w.dot(d2) / z;
    };

    double spread = d2.sum() / static_cast<double>(L - 1);
    if (!(spread > 0))
      throw NumericalError("t-SNE bandwidth search cannot bracket perplexity for point " + std::to_string(i) +
                           ": all its dissimilarities are equal");
    double lo = 0, hi = 1.0 / spread;
    double h = entropy(hi);
    for (int grow = 0; h > target; ++grow) {
      if (grow > 200)
        throw NumericalError("t-SNE bandwidth search cannot bracket perplexity for point " + std::to_string(i));
      lo = hi;
      hi *= 2;
      h = entropy(hi);
    }
    double beta = hi;
    for (int it = 0; it < 200 && std::abs(h - target) > 1e-8; ++it) {
      beta = 0.5 * (lo + hi);
      h = entropy(beta);
      if (h > target)
        lo = beta;
      else
        hi = beta;
    }
    h = entropy(beta);
    if (std::abs(std::exp(h) - perplexity) > 1e-3 * perplexity)
      throw NumericalError("t-SNE bandwidth search did not converge for point " + std::to_string(i));
    cond.col(i) = w / w.sum();
    out.sigma(i) = std::sqrt(0.5 / beta);
    out.perplexity(i) = std::exp(h);
  });
  out.P = (cond + cond.transpose()) / (2.0 * static_cast<double>(L));
  return out;
}

double tsne_kl(const Eigen::MatrixXd& P, const Points2& z, Points2* grad) {
  return kl_and_gradient(P, z, 1.0, grad);
}

ChannelChart mds(const DissimilarityMatrix& D, const EmbedConfig& cfg) {
  return stress_descent<false>(D, cfg, "mds");
}

ChannelChart isomap(const DissimilarityMatrix& D, Index k, const EmbedConfig& cfg) {
  const DissimilarityMatrix G = D.tag.geodesic ? D : geodesic(D, {k, false});
  ChannelChart chart = stress_descent<false>(G, cfg, "isomap");
  chart.hyperparameters["k"] = k;
  return chart;
}

ChannelChart sammon(const DissimilarityMatrix& D, const EmbedConfig& cfg) {
  return stress_descent<true>(D, cfg, "sammon");
}

ChannelChart tsne(const DissimilarityMatrix& D, const EmbedConfig& cfg) {
  cfg.validate();
  check_matrix(D);
  if ((D.values.array() == 0).all()) return zero_chart(D, cfg, "tsne");

  const Index L = D.size();
  const TsneAffinities aff = tsne_affinities(D, cfg.perplexity);
  ChannelChart chart;
  chart.method = "tsne";
  chart.metric_tag = D.tag.str();
  chart.seed = cfg.seed;
  chart.hyperparameters = describe(cfg, "tsne");

  Points2 z = initial_chart(D, cfg.seed);
  Points2 grad, velocity = Points2::Zero(L, 2), gains = Points2::Ones(L, 2);
  for (int it = 0; it < cfg.iterations; ++it) {
    const double exaggeration = cfg.early_exaggeration && it < 250 ? 12.0 : 1.0;
    const double kl = kl_and_gradient(aff.P, z, exaggeration, &grad);
    if (!std::isfinite(kl) || !grad.allFinite())
      throw NumericalError("tsne diverged at iteration " + std::to_string(it + 1) + "; use a smaller learning rate");
    chart.objective_trace.push_back(kl);
    const double mom = it < 250 ? std::min(0.5, cfg.momentum) : cfg.momentum;
    for (Index l = 0; l < L; ++l)
      for (Index c = 0; c < 2; ++c) {
        const bool same_sign = (grad(l, c) > 0) == (velocity(l, c) > 0);
        gains(l, c) = std::max(0.01, same_sign ? gains(l, c) * 0.8 : gains(l, c) + 0.2);
      }
    velocity = mom * velocity - cfg.learning_rate * gains.cwiseProduct(grad);
    z += velocity;
    center(z);
  }
  chart.objective_trace.push_back(kl_and_gradient(aff.P, z, 1.0, nullptr));
  chart.z = z;
  return chart;
}

ChannelChart embed(const std::string& method, const DissimilarityMatrix& D, const EmbedConfig& cfg, Index k) {
  if (method == "mds") return mds(D, cfg);
  if (method == "isomap") return isomap(D, k, cfg);
  if (method == "sammon") return sammon(D, cfg);
  if (method == "tsne") return tsne(D, cfg);
  throw std::invalid_argument("unknown embedding method '" + method + "'");
}

}  // namespace chartlab
