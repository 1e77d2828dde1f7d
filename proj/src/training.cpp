#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "chartlab/neural.hpp"

namespace chartlab {
namespace {

struct Standardized {
  Eigen::MatrixXd features;  // standardized, one column per point
  Eigen::VectorXd mean, scale;
};

Standardized standardized_features(const CsiDataset& ds, const TapWindow& w) {
  Standardized s;
  s.features = feature_matrix(ds, w);
  s.mean = s.features.rowwise().mean();
  s.features.colwise() -= s.mean;
  s.scale = (s.features.array().square().rowwise().mean()).sqrt();
  for (Index r = 0; r < s.scale.size(); ++r)
    if (!(s.scale(r) > 0)) s.scale(r) = 1.0;
  s.features = (s.features.array().colwise() / s.scale.array()).matrix();
  return s;
}

void check_finite(double loss, const std::string& what, int epoch, Index batch) {
  if (!std::isfinite(loss))
    throw NumericalError(what + " loss became non-finite at epoch " + std::to_string(epoch + 1) + ", batch " +
                         std::to_string(batch + 1) + "; lower the learning rate or check the input features");
}

void check_chart_config(const ChartTrainConfig& cfg) {
  if (cfg.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (cfg.batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (!(cfg.learning_rate > 0)) throw std::invalid_argument("learning rate must be positive");
}

void check_dataset_matrix(const CsiDataset& ds, const DissimilarityMatrix& D) {
  if (D.size() != ds.size())
    throw DataError("dissimilarity matrix has " + std::to_string(D.size()) + " rows, dataset has " +
                    std::to_string(ds.size()) + " points");
}

Eigen::MatrixXd gather(const Eigen::MatrixXd& f, const std::vector<Index>& cols) {
  Eigen::MatrixXd out(f.rows(), static_cast<Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Index>(c)) = f.col(cols[c]);
  return out;
}

void apply_step(Mlp& net, Adam& adam, const ForwardCache& cache, const Eigen::MatrixXd& d_out) {
  Eigen::VectorXd params = net.parameters();
  adam.step(params, backward(net, cache, d_out));
  net.set_parameters(params);
  update_running_stats(net, cache);
}

}  // namespace

double scheduled_q(const ChartTrainConfig& cfg, int epoch) {
  if (cfg.epochs <= 1) return cfg.q_start;
  const double frac = static_cast<double>(epoch) / (cfg.epochs - 1);
  return cfg.q_start * std::pow(cfg.q_end / cfg.q_start, frac);
}

TripletSet select_triplets(const DissimilarityMatrix& D, double q, Index count, std::uint64_t seed) {
  const Index L = D.size();
  if (!(q > 0 && q < 1)) throw std::invalid_argument("q must lie in (0, 1)");
  if (L < 3) throw std::invalid_argument("triplet selection needs at least 3 points");
  const double close_count = std::floor(q * static_cast<double>(L) + 1e-9);
  if (close_count < 1)
    throw std::invalid_argument("q = " + std::to_string(q) + " is too small for L = " + std::to_string(L) +
                                " (q * L must be >= 1)");
  const Index n_close = std::min<Index>(static_cast<Index>(close_count), L - 2);

  // per-row threshold: the n_close-th smallest entry among the other points
  std::vector<std::vector<Index>> close(static_cast<std::size_t>(L));
  Eigen::VectorXd thresh(L);
  std::vector<double> row;
  for (Index i = 0; i < L; ++i) {
    row.clear();
    for (Index l = 0; l < L; ++l)
      if (l != i) row.push_back(D(i, l));
    std::nth_element(row.begin(), row.begin() + n_close, row.end());
    thresh(i) = row[static_cast<std::size_t>(n_close)];
    for (Index l = 0; l < L; ++l)
      if (l != i && D(i, l) < thresh(i)) close[static_cast<std::size_t>(i)].push_back(l);
  }

  std::vector<Index> anchors;
  for (Index i = 0; i < L; ++i)
    if (!close[static_cast<std::size_t>(i)].empty()) anchors.push_back(i);
  if (anchors.empty()) throw DataError("no anchor has a nonempty close set; the matrix is degenerate");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_anchor(0, anchors.size() - 1);
  std::uniform_int_distribution<Index> pick_any(0, L - 1);
  TripletSet out;
  out.triplets.reserve(static_cast<std::size_t>(count));
  for (Index t = 0; t < count; ++t) {
    const Index i = anchors[pick_anchor(rng)];
    const auto& c = close[static_cast<std::size_t>(i)];
    const Index j = c[std::uniform_int_distribution<std::size_t>(0, c.size() - 1)(rng)];
    Index k;
    do k = pick_any(rng);
    while (k == i || D(i, k) < thresh(i));
    out.triplets.push_back({i, j, k});
  }
  return out;
}

TrainResult train_siamese(const CsiDataset& ds, const DissimilarityMatrix& D, const ChartTrainConfig& cfg) {
  check_chart_config(cfg);
  check_dataset_matrix(ds, D);
  const Index L = ds.size();
  const Standardized feats = standardized_features(ds, cfg.window);

  std::vector<Index> sizes{feats.features.rows()};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(2);
  TrainResult result{Mlp(sizes, cfg.batch_norm, cfg.seed), {}};
  Mlp& net = result.model;
  net.input_mean = feats.mean;
  net.input_scale = feats.scale;
  net.kind = "siamese";
  net.window = cfg.window;

  double scale = D.values.sum() / static_cast<double>(L * (L - 1));
  if (!(scale > 0)) scale = 1.0;

  Adam adam(net.parameter_count(), cfg.learning_rate);
  std::mt19937_64 rng(cfg.seed ^ 0x5a5a5a5aULL);
  std::uniform_int_distribution<Index> pick(0, L - 1);
  const auto samples = std::max<Index>(1, static_cast<Index>(std::llround(cfg.pairs_per_point * L)));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double total = 0;
    Index batch_no = 0;
    for (Index done = 0; done < samples; done += cfg.batch_size, ++batch_no) {
      const Index n = std::min(cfg.batch_size, samples - done);
      std::vector<Index> cols(static_cast<std::size_t>(2 * n));
      Eigen::VectorXd target(n);
      for (Index p = 0; p < n; ++p) {
        Index i = pick(rng), j;
        do j = pick(rng);
        while (j == i);
        cols[static_cast<std::size_t>(p)] = i;
        cols[static_cast<std::size_t>(n + p)] = j;
        target(p) = D(i, j) / scale;
      }
      const ForwardCache cache = forward_train(net, gather(feats.features, cols));
      Eigen::MatrixXd gi, gj;
      const double loss = siamese_loss(cache.output.leftCols(n), cache.output.rightCols(n), target, &gi, &gj);
      check_finite(loss, "siamese", epoch, batch_no);
      total += loss;
      Eigen::MatrixXd d_out(2, 2 * n);
      d_out << gi / static_cast<double>(n), gj / static_cast<double>(n);
      apply_step(net, adam, cache, d_out);
    }
    result.epoch_loss.push_back(total / static_cast<double>(samples) * scale * scale);
  }
  net.output_scale = scale;
  return result;
}

TrainResult train_triplet(const CsiDataset& ds, const DissimilarityMatrix& D, const ChartTrainConfig& cfg) {
  check_chart_config(cfg);
  check_dataset_matrix(ds, D);
  if (!(cfg.margin > 0)) throw std::invalid_argument("margin must be positive");
  const Index L = ds.size();
  // reject an infeasible schedule before spending time on features
  for (int epoch = 0; epoch < cfg.epochs; ++epoch)
    if (scheduled_q(cfg, epoch) * static_cast<double>(L) < 1 - 1e-9)
      throw std::invalid_argument("q schedule reaches " + std::to_string(scheduled_q(cfg, epoch)) +
                                  ", too small for L = " + std::to_string(L));
  const Standardized feats = standardized_features(ds, cfg.window);

  std::vector<Index> sizes{feats.features.rows()};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(2);
  TrainResult result{Mlp(sizes, cfg.batch_norm, cfg.seed), {}};
  Mlp& net = result.model;
  net.input_mean = feats.mean;
  net.input_scale = feats.scale;
  net.kind = "triplet";
  net.window = cfg.window;

  Adam adam(net.parameter_count(), cfg.learning_rate);
  const auto samples = std::max<Index>(1, static_cast<Index>(std::llround(cfg.triplets_per_point * L)));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const TripletSet set = select_triplets(D, scheduled_q(cfg, epoch), samples,
                                           cfg.seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(epoch + 1));
    double total = 0;
    Index batch_no = 0;
    for (Index done = 0; done < samples; done += cfg.batch_size, ++batch_no) {
      const Index n = std::min(cfg.batch_size, samples - done);
      std::vector<Index> cols(static_cast<std::size_t>(3 * n));
      for (Index p = 0; p < n; ++p)
        for (Index r = 0; r < 3; ++r)
          cols[static_cast<std::size_t>(r * n + p)] = set.triplets[static_cast<std::size_t>(done + p)][r];
      const ForwardCache cache = forward_train(net, gather(feats.features, cols));
      Eigen::MatrixXd gi, gj, gk;
      const double loss = triplet_loss(cache.output.leftCols(n), cache.output.middleCols(n, n),
                                       cache.output.rightCols(n), cfg.margin, &gi, &gj, &gk);
      check_finite(loss, "triplet", epoch, batch_no);
      total += loss * static_cast<double>(n);
      Eigen::MatrixXd d_out(2, 3 * n);
      d_out << gi, gj, gk;
      apply_step(net, adam, cache, d_out);
    }
    result.epoch_loss.push_back(total / static_cast<double>(samples));
  }
  return result;
}

TrainResult train_dissimilarity_model(const CsiDataset& ds, const DlTrainConfig& cfg) {
  if (!(cfg.alpha > 0) || !(cfg.beta > 0)) throw std::invalid_argument("alpha and beta must be positive");
  if (cfg.epochs < 1 || cfg.batch_size < 1 || !(cfg.learning_rate > 0))
    throw std::invalid_argument("epochs, batch size and learning rate must be positive");
  const Index L = ds.size();
  const Eigen::VectorXd t = ds.timestamps();

  // time-sorted order gives each anchor a contiguous range of eligible partners
  std::vector<Index> order(static_cast<std::size_t>(L));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return t(a) < t(b); });
  std::vector<double> sorted_t(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) sorted_t[r] = t(order[r]);
  std::vector<std::pair<std::size_t, std::size_t>> range(order.size());
  std::vector<Index> anchors;
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto lo = std::lower_bound(sorted_t.begin(), sorted_t.end(), sorted_t[r] - cfg.alpha);
    const auto hi = std::upper_bound(sorted_t.begin(), sorted_t.end(), sorted_t[r] + cfg.alpha);
    range[r] = {static_cast<std::size_t>(lo - sorted_t.begin()), static_cast<std::size_t>(hi - sorted_t.begin())};
    if (range[r].second - range[r].first > 1) anchors.push_back(static_cast<Index>(r));
  }
  if (anchors.empty())
    throw DataError("no pair of datapoints has a time difference <= alpha = " + std::to_string(cfg.alpha) + " s");

  Standardized feats = standardized_features(ds, cfg.window);
  const Index F = feats.features.rows();
  std::vector<Index> sizes{2 * F};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(1);
  TrainResult result{Mlp(sizes, cfg.batch_norm, cfg.seed), {}};
  Mlp& net = result.model;
  net.input_mean.resize(2 * F);
  net.input_mean << feats.mean, feats.mean;
  net.input_scale.resize(2 * F);
  net.input_scale << feats.scale, feats.scale;
  net.kind = "dissimilarity";
  net.window = cfg.window;

  std::mt19937_64 rng(cfg.seed ^ 0xa5a5a5a5ULL);
  std::uniform_int_distribution<std::size_t> pick_anchor(0, anchors.size() - 1);
  auto draw = [&](Index& i, Index& j) {
    const auto r = static_cast<std::size_t>(anchors[pick_anchor(rng)]);
    std::uniform_int_distribution<std::size_t> pick(range[r].first, range[r].second - 2);
    std::size_t s = pick(rng);
    if (s >= r) ++s;
    i = order[r];
    j = order[s];
  };

  // output normalization from the mean eligible time difference
  double scale = 0;
  {
    std::mt19937_64 probe(cfg.seed ^ 0x3c3c3c3cULL);
    std::swap(rng, probe);
    const int n = 4096;
    for (int p = 0; p < n; ++p) {
      Index i, j;
      draw(i, j);
      scale += std::abs(t(i) - t(j));
    }
    scale /= n;
    std::swap(rng, probe);
  }
  if (!(scale > 0)) scale = 1.0;

  Adam adam(net.parameter_count(), cfg.learning_rate);
  const auto samples = std::max<Index>(1, static_cast<Index>(std::llround(cfg.pairs_per_point * L)));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double total = 0;
    Index batch_no = 0;
    for (Index done = 0; done < samples; done += cfg.batch_size, ++batch_no) {
      const Index n = std::min(cfg.batch_size, samples - done);
      Eigen::MatrixXd x(2 * F, n);
      Eigen::VectorXd target(n);
      for (Index p = 0; p < n; ++p) {
        Index i, j;
        draw(i, j);
        x.col(p) << feats.features.col(i), feats.features.col(j);
        target(p) = std::abs(t(i) - t(j));
      }
      const ForwardCache cache = forward_train(net, x);
      Eigen::RowVectorXd grad;
      const double loss = dissimilarity_loss(cache.output.row(0) * scale, target, cfg.beta, &grad);
      check_finite(loss, "dissimilarity", epoch, batch_no);
      total += loss;
      apply_step(net, adam, cache, grad * (scale / static_cast<double>(n)));
    }
    result.epoch_loss.push_back(total / static_cast<double>(samples));
  }
  net.output_scale = scale;
  return result;
}

ChannelChart predict_chart(const Mlp& model, const CsiDataset& ds) {
  if (model.output_dim() != 2)
    throw std::invalid_argument("chart models need 2 outputs, this one has " + std::to_string(model.output_dim()));
  const Index expected = feature_length(ds.arrays(), ds.antennas(), model.window);
  if (expected != model.input_dim())
    throw DataError("model expects " + std::to_string(model.input_dim()) + " features, dataset yields " +
                    std::to_string(expected));
  ChannelChart chart;
  chart.z = model.predict(feature_matrix(ds, model.window)).transpose();
  chart.method = model.kind.empty() ? "fcf" : model.kind;
  chart.seed = model.seed;
  chart.hyperparameters = {{"layers", model.sizes}, {"batch_norm", model.batch_norm()}};
  return chart;
}

}  // namespace chartlab
