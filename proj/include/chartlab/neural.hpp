#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "chartlab/chart.hpp"
#include "chartlab/common.hpp"
#include "chartlab/dataset.hpp"
#include "chartlab/dissimilarity.hpp"

namespace chartlab {

/// Dense layer, optionally followed by batch normalization. Hidden layers
/// apply ReLU after normalization; the last layer is linear.
struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
  Eigen::VectorXd bn_scale, bn_shift;         // empty without batch norm
  Eigen::VectorXd running_mean, running_var;  // inference statistics

  bool has_batch_norm() const { return bn_scale.size() > 0; }
};

/// Fully connected network used for both the chart function and the learned
/// dissimilarity. Inputs are columns. Raw inputs are standardized with the
/// stored per-dimension statistics before the first layer, and the final
/// output is multiplied by output_scale.
struct Mlp {
  std::vector<Index> sizes;  // input, hidden..., output
  std::vector<DenseLayer> layers;
  Eigen::VectorXd input_mean;   // empty: no standardization
  Eigen::VectorXd input_scale;
  double output_scale = 1.0;

  std::string kind;      // "siamese", "triplet", "dissimilarity" or empty
  TapWindow window{1, 1};  // feature configuration the model was trained on
  std::uint64_t seed = 0;

  static constexpr double kBatchNormEps = 1e-5;

  Mlp() = default;
  /// Fan-in scaled uniform init, weights in +-sqrt(6 / fan_in) for hidden
  /// layers and +-sqrt(3 / fan_in) for the output layer; biases zero.
  Mlp(std::vector<Index> layer_sizes, bool batch_norm, std::uint64_t init_seed);

  Index input_dim() const { return sizes.front(); }
  Index output_dim() const { return sizes.back(); }
  bool batch_norm() const { return !layers.empty() && layers.front().has_batch_norm(); }

  /// Inference on already-standardized inputs; batch norm uses running stats.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd standardize(const Eigen::MatrixXd& raw) const;
  /// standardize -> forward -> output_scale.
  Eigen::MatrixXd predict(const Eigen::MatrixXd& raw) const;

  Index parameter_count() const;
  /// Trainable parameters in layer order: weight (column-major), bias, then
  /// batch-norm scale and shift when present.
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& p);
};

/// Activations kept from a training-mode forward pass.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> input;       // per layer
  std::vector<Eigen::MatrixXd> normalized;  // batch-norm x-hat
  std::vector<Eigen::MatrixXd> activated;   // pre-ReLU (post batch-norm) values
  std::vector<Eigen::VectorXd> batch_mean, batch_var;
  Eigen::MatrixXd output;
};

/// Training-mode forward: batch norm normalizes with the batch statistics.
ForwardCache forward_train(const Mlp& net, const Eigen::MatrixXd& x);

/// Gradient of a scalar loss with respect to all parameters, flattened in
/// Mlp::parameters() order, given dLoss/dOutput. Optionally also returns
/// dLoss/dInput.
Eigen::VectorXd backward(const Mlp& net, const ForwardCache& cache, const Eigen::MatrixXd& d_output,
                         Eigen::MatrixXd* d_input = nullptr);

/// running = momentum * running + (1 - momentum) * batch (unbiased variance).
void update_running_stats(Mlp& net, const ForwardCache& cache, double momentum = 0.9);

class Adam {
 public:
  explicit Adam(Index size, double learning_rate = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);

 private:
  double lr_, beta1_, beta2_, eps_;
  long long t_ = 0;
  Eigen::VectorXd m_, v_;
};

/// Sum over pairs of (d - |z_i - z_j|)^2; chart points are columns.
double siamese_loss(const Eigen::MatrixXd& zi, const Eigen::MatrixXd& zj, const Eigen::VectorXd& d,
                    Eigen::MatrixXd* grad_i = nullptr, Eigen::MatrixXd* grad_j = nullptr);

/// Mean over triplets of max(|z_i - z_j| - |z_i - z_k| + margin, 0).
double triplet_loss(const Eigen::MatrixXd& zi, const Eigen::MatrixXd& zj, const Eigen::MatrixXd& zk,
                    double margin, Eigen::MatrixXd* grad_i = nullptr, Eigen::MatrixXd* grad_j = nullptr,
                    Eigen::MatrixXd* grad_k = nullptr);

/// Sum over pairs of ((prediction - d_time) / (d_time + beta))^2.
double dissimilarity_loss(const Eigen::RowVectorXd& prediction, const Eigen::VectorXd& d_time,
                          double beta, Eigen::RowVectorXd* grad = nullptr);

struct ChartTrainConfig {
  std::vector<Index> hidden{256, 128, 64, 32};
  bool batch_norm = true;
  int epochs = 30;
  Index batch_size = 256;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  double pairs_per_point = 64;     // Siamese samples per epoch, times L
  double triplets_per_point = 16;  // triplet samples per epoch, times L
  double margin = 1.0;
  double q_start = 0.2;  // geometric decay to q_end over the epochs
  double q_end = 0.02;
  TapWindow window{1, 1};
};

struct DlTrainConfig {
  std::vector<Index> hidden{256, 128, 64};
  bool batch_norm = true;
  double alpha = 500.0;  // seconds; only pairs with d_time <= alpha are used
  double beta = 1.0;     // seconds
  int epochs = 20;
  Index batch_size = 256;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  double pairs_per_point = 16;
  TapWindow window{1, 1};
};

struct TrainResult {
  Mlp model;
  std::vector<double> epoch_loss;  // mean per-sample loss of each epoch
};

struct TripletSet {
  std::vector<std::array<Index, 3>> triplets;  // anchor, close, far
  std::size_t size() const { return triplets.size(); }
};

/// Random triplets: anchor uniform, close sample uniform among the anchor's
/// row entries below the per-row q-quantile, far sample uniform among the
/// rest. Every triplet satisfies d(i,j) < d(i,k).
TripletSet select_triplets(const DissimilarityMatrix& D, double q, Index count, std::uint64_t seed);

/// q for a given epoch under geometric decay from q_start to q_end.
double scheduled_q(const ChartTrainConfig& cfg, int epoch);

TrainResult train_siamese(const CsiDataset& ds, const DissimilarityMatrix& D, const ChartTrainConfig& cfg);
TrainResult train_triplet(const CsiDataset& ds, const DissimilarityMatrix& D, const ChartTrainConfig& cfg);
TrainResult train_dissimilarity_model(const CsiDataset& ds, const DlTrainConfig& cfg);

/// Maps every datapoint through a chart model (2 outputs).
ChannelChart predict_chart(const Mlp& model, const CsiDataset& ds);

}  // namespace chartlab
