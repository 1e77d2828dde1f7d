#include <cmath>
#include <random>

#include "chartlab/neural.hpp"

namespace chartlab {

Mlp::Mlp(std::vector<Index> layer_sizes, bool batch_norm, std::uint64_t init_seed)
    : sizes(std::move(layer_sizes)), seed(init_seed) {
  if (sizes.size() < 2) throw std::invalid_argument("an MLP needs an input and an output size");
  for (Index s : sizes)
    if (s < 1) throw std::invalid_argument("layer sizes must be positive");

  std::mt19937_64 rng(init_seed);
  const std::size_t count = sizes.size() - 1;
  layers.resize(count);
  for (std::size_t l = 0; l < count; ++l) {
    const Index in = sizes[l], out = sizes[l + 1];
    const bool hidden = l + 1 < count;
    const double limit = std::sqrt((hidden ? 6.0 : 3.0) / static_cast<double>(in));
    std::uniform_real_distribution<double> u(-limit, limit);
    auto& layer = layers[l];
    layer.weight.resize(out, in);
    for (Index c = 0; c < in; ++c)
      for (Index r = 0; r < out; ++r) layer.weight(r, c) = u(rng);
    layer.bias = Eigen::VectorXd::Zero(out);
    if (hidden && batch_norm) {
      layer.bn_scale = Eigen::VectorXd::Ones(out);
      layer.bn_shift = Eigen::VectorXd::Zero(out);
      layer.running_mean = Eigen::VectorXd::Zero(out);
      layer.running_var = Eigen::VectorXd::Ones(out);
    }
  }
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
  if (x.rows() != input_dim())
    throw std::invalid_argument("input has " + std::to_string(x.rows()) + " rows, model expects " +
                                std::to_string(input_dim()));
  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    Eigen::MatrixXd z = layer.weight * a;
    z.colwise() += layer.bias;
    if (layer.has_batch_norm()) {
      const Eigen::ArrayXd inv = (layer.running_var.array() + kBatchNormEps).rsqrt();
      z = ((z.colwise() - layer.running_mean).array().colwise() * (inv * layer.bn_scale.array()))
              .matrix()
              .colwise() +
          layer.bn_shift;
    }
    if (l + 1 < layers.size())
      a = z.cwiseMax(0.0);
    else
      a = std::move(z);
  }
  return a;
}

Eigen::MatrixXd Mlp::standardize(const Eigen::MatrixXd& raw) const {
  if (input_mean.size() == 0) return raw;
  if (raw.rows() != input_mean.size())
    throw std::invalid_argument("input has " + std::to_string(raw.rows()) + " rows, model expects " +
                                std::to_string(input_mean.size()));
  return ((raw.colwise() - input_mean).array().colwise() / input_scale.array()).matrix();
}

Eigen::MatrixXd Mlp::predict(const Eigen::MatrixXd& raw) const {
  return forward(standardize(raw)) * output_scale;
}

Index Mlp::parameter_count() const {
  Index n = 0;
  for (const auto& layer : layers)
    n += layer.weight.size() + layer.bias.size() + layer.bn_scale.size() + layer.bn_shift.size();
  return n;
}

Eigen::VectorXd Mlp::parameters() const {
  Eigen::VectorXd p(parameter_count());
  Index o = 0;
  auto put = [&](const auto& m) {
    p.segment(o, m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
    o += m.size();
  };
  for (const auto& layer : layers) {
    put(layer.weight);
    put(layer.bias);
    put(layer.bn_scale);
    put(layer.bn_shift);
  }
  return p;
}

void Mlp::set_parameters(const Eigen::VectorXd& p) {
  if (p.size() != parameter_count()) throw std::invalid_argument("parameter vector has the wrong length");
  Index o = 0;
  auto take = [&](auto& m) {
    Eigen::Map<Eigen::VectorXd>(m.data(), m.size()) = p.segment(o, m.size());
    o += m.size();
  };
  for (auto& layer : layers) {
    take(layer.weight);
    take(layer.bias);
    take(layer.bn_scale);
    take(layer.bn_shift);
  }
}

ForwardCache forward_train(const Mlp& net, const Eigen::MatrixXd& x) {
  if (x.rows() != net.input_dim()) throw std::invalid_argument("input dimension mismatch");
  const std::size_t count = net.layers.size();
  ForwardCache c;
  c.input.resize(count);
  c.normalized.resize(count);
  c.activated.resize(count);
  c.batch_mean.resize(count);
  c.batch_var.resize(count);

  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l < count; ++l) {
    const auto& layer = net.layers[l];
    Eigen::MatrixXd z = layer.weight * a;
    z.colwise() += layer.bias;
    c.input[l] = std::move(a);
    if (layer.has_batch_norm()) {
      const Eigen::VectorXd mean = z.rowwise().mean();
      Eigen::MatrixXd centered = z.colwise() - mean;
      const Eigen::VectorXd var = centered.array().square().rowwise().mean();
      const Eigen::ArrayXd inv = (var.array() + Mlp::kBatchNormEps).rsqrt();
      c.normalized[l] = (centered.array().colwise() * inv).matrix();
      z = (c.normalized[l].array().colwise() * layer.bn_scale.array()).matrix().colwise() + layer.bn_shift;
      c.batch_mean[l] = mean;
      c.batch_var[l] = var;
    }
    if (l + 1 < count) {
      a = z.cwiseMax(0.0);
      c.activated[l] = std::move(z);
    } else {
      c.output = std::move(z);
    }
  }
  return c;
}

Eigen::VectorXd backward(const Mlp& net, const ForwardCache& cache, const Eigen::MatrixXd& d_output,
                         Eigen::MatrixXd* d_input) {
  const std::size_t count = net.layers.size();
  if (d_output.rows() != cache.output.rows() || d_output.cols() != cache.output.cols())
    throw std::invalid_argument("output gradient shape mismatch");

  // per-layer offsets into the flat gradient, matching Mlp::parameters()
  std::vector<Index> offset(count);
  Index total = 0;
  for (std::size_t l = 0; l < count; ++l) {
    offset[l] = total;
    const auto& layer = net.layers[l];
    total += layer.weight.size() + layer.bias.size() + layer.bn_scale.size() + layer.bn_shift.size();
  }
  Eigen::VectorXd grad(total);

  Eigen::MatrixXd g = d_output;
  const auto batch = static_cast<double>(d_output.cols());
  for (std::size_t l = count; l-- > 0;) {
    const auto& layer = net.layers[l];
    if (l + 1 < count) g = g.cwiseProduct((cache.activated[l].array() > 0.0).cast<double>().matrix());

    Index o = offset[l] + layer.weight.size() + layer.bias.size();
    if (layer.has_batch_norm()) {
      const Eigen::MatrixXd& xhat = cache.normalized[l];
      grad.segment(o, layer.bn_scale.size()) = g.cwiseProduct(xhat).rowwise().sum();
      grad.segment(o + layer.bn_scale.size(), layer.bn_shift.size()) = g.rowwise().sum();
      const Eigen::MatrixXd dxhat = g.array().colwise() * layer.bn_scale.array();
      const Eigen::ArrayXd inv = (cache.batch_var[l].array() + Mlp::kBatchNormEps).rsqrt();
      const Eigen::VectorXd sum_dxhat = dxhat.rowwise().sum();
      const Eigen::VectorXd sum_dxhat_xhat = dxhat.cwiseProduct(xhat).rowwise().sum();
      g = (((batch * dxhat).colwise() - sum_dxhat) - (xhat.array().colwise() * sum_dxhat_xhat.array()).matrix())
              .array()
              .colwise() *
          (inv / batch);
    }

    Eigen::Map<Eigen::MatrixXd>(grad.data() + offset[l], layer.weight.rows(), layer.weight.cols()) =
        g * cache.input[l].transpose();
    grad.segment(offset[l] + layer.weight.size(), layer.bias.size()) = g.rowwise().sum();
    if (l > 0 || d_input != nullptr) g = layer.weight.transpose() * g;
  }
  if (d_input != nullptr) *d_input = std::move(g);
  return grad;
}

void update_running_stats(Mlp& net, const ForwardCache& cache, double momentum) {
  const double n = static_cast<double>(cache.output.cols());
  const double unbias = n > 1 ? n / (n - 1) : 1.0;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    auto& layer = net.layers[l];
    if (!layer.has_batch_norm()) continue;
    layer.running_mean = momentum * layer.running_mean + (1 - momentum) * cache.batch_mean[l];
    layer.running_var = momentum * layer.running_var + (1 - momentum) * unbias * cache.batch_var[l];
  }
}

Adam::Adam(Index size, double learning_rate, double beta1, double beta2, double eps)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps),
      m_(Eigen::VectorXd::Zero(size)), v_(Eigen::VectorXd::Zero(size)) {}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw std::invalid_argument("Adam step size mismatch");
  ++t_;
  m_ = beta1_ * m_ + (1 - beta1_) * grad;
  v_ = beta2_ * v_ + (1 - beta2_) * grad.cwiseAbs2();
  const double c1 = 1 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

double siamese_loss(const Eigen::MatrixXd& zi, const Eigen::MatrixXd& zj, const Eigen::VectorXd& d,
                    Eigen::MatrixXd* grad_i, Eigen::MatrixXd* grad_j) {
  if (zi.cols() != zj.cols() || zi.cols() != d.size() || zi.rows() != zj.rows())
    throw std::invalid_argument("siamese loss shape mismatch");
  const Eigen::MatrixXd diff = zi - zj;
  const Eigen::RowVectorXd dist = diff.colwise().norm();
  double loss = 0;
  if (grad_i) grad_i->setZero(zi.rows(), zi.cols());
  if (grad_j) grad_j->setZero(zj.rows(), zj.cols());
  for (Index p = 0; p < d.size(); ++p) {
    const double r = d(p) - dist(p);
    loss += r * r;
    if (dist(p) > 0) {
      const Eigen::VectorXd g = (-2.0 * r / dist(p)) * diff.col(p);
      if (grad_i) grad_i->col(p) = g;
      if (grad_j) grad_j->col(p) = -g;
    }
  }
  return loss;
}

double triplet_loss(const Eigen::MatrixXd& zi, const Eigen::MatrixXd& zj, const Eigen::MatrixXd& zk,
                    double margin, Eigen::MatrixXd* grad_i, Eigen::MatrixXd* grad_j, Eigen::MatrixXd* grad_k) {
  const Index n = zi.cols();
  if (zj.cols() != n || zk.cols() != n || n == 0) throw std::invalid_argument("triplet loss shape mismatch");
  if (grad_i) grad_i->setZero(zi.rows(), n);
  if (grad_j) grad_j->setZero(zi.rows(), n);
  if (grad_k) grad_k->setZero(zi.rows(), n);
  double loss = 0;
  for (Index t = 0; t < n; ++t) {
    const Eigen::VectorXd a = zi.col(t) - zj.col(t);
    const Eigen::VectorXd b = zi.col(t) - zk.col(t);
    const double da = a.norm(), db = b.norm();
    const double h = da - db + margin;
    if (h <= 0) continue;
    loss += h;
    const Eigen::VectorXd ua = da > 0 ? Eigen::VectorXd(a / da) : Eigen::VectorXd::Zero(a.size());
    const Eigen::VectorXd ub = db > 0 ? Eigen::VectorXd(b / db) : Eigen::VectorXd::Zero(b.size());
    if (grad_i) grad_i->col(t) = (ua - ub) / static_cast<double>(n);
    if (grad_j) grad_j->col(t) = -ua / static_cast<double>(n);
    if (grad_k) grad_k->col(t) = ub / static_cast<double>(n);
  }
  return loss / static_cast<double>(n);
}

double dissimilarity_loss(const Eigen::RowVectorXd& prediction, const Eigen::VectorXd& d_time, double beta,
                          Eigen::RowVectorXd* grad) {
  if (prediction.size() != d_time.size()) throw std::invalid_argument("dissimilarity loss shape mismatch");
  if (!(beta > 0)) throw std::invalid_argument("beta must be positive");
  const Eigen::ArrayXd denom = d_time.array() + beta;
  const Eigen::ArrayXd r = (prediction.transpose().array() - d_time.array()) / denom;
  if (grad) *grad = (2.0 * r / denom).matrix().transpose();
  return r.square().sum();
}

}  // namespace chartlab
