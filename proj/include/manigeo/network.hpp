#pragma once

// Small dense feed-forward networks: initialization, forward pass with stored
// activations, exact input Jacobians by tangent propagation, backprop for
// fused sigmoid-BCE and scaled MSE, and a deterministic full-batch trainer
// with hold-out support and divergence detection.

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "manigeo/manifolds.hpp"
#include "manigeo/numerics.hpp"
#include "manigeo/tasks.hpp"

namespace manigeo {

enum class Activation { identity, tanh_act };
enum class OutputActivation { identity, sigmoid };
enum class LossKind { bce, mse };

struct Layer {
  Mat w;
  Vec b;
  Activation act = Activation::identity;
};

struct Mlp {
  std::vector<Layer> layers;
  OutputActivation output_activation = OutputActivation::sigmoid;
  double init_sigma = 0.0;

  int n_in() const { return layers.front().w.cols; }
  int n_out() const { return layers.back().w.rows; }
  bool is_linear() const {
    if (output_activation != OutputActivation::identity) return false;
    for (const Layer& l : layers)
      if (l.act != Activation::identity) return false;
    return true;
  }
};

// Layer sizes from input to output; hidden layers share one activation, the
// final layer is linear with the output activation applied on top.
struct Arch {
  std::vector<int> dims;
  Activation hidden_act = Activation::tanh_act;
  OutputActivation out_act = OutputActivation::sigmoid;
};

inline Mlp init(const Arch& arch, double sigma, uint64_t seed) {
  if (arch.dims.size() < 2) throw std::invalid_argument("architecture needs >= 2 layer sizes");
  for (int d : arch.dims)
    if (d <= 0) throw std::invalid_argument("layer sizes must be positive");
  if (!(sigma >= 0.0)) throw std::invalid_argument("init sigma must be >= 0");
  RngState rng(seed);
  Mlp net;
  net.output_activation = arch.out_act;
  net.init_sigma = sigma;
  const int n_layers = static_cast<int>(arch.dims.size()) - 1;
  for (int l = 0; l < n_layers; ++l) {
    Layer layer;
    layer.w = Mat(arch.dims[l + 1], arch.dims[l]);
    for (double& v : layer.w.data) v = sigma * rng.gauss() + 0.0;
    layer.b = Vec(arch.dims[l + 1], 0.0);
    layer.act = l + 1 < n_layers ? arch.hidden_act : Activation::identity;
    net.layers.push_back(std::move(layer));
  }
  return net;
}

inline double apply_activation(Activation a, double v) {
  return a == Activation::tanh_act ? std::tanh(v) : v;
}

// Derivative of the activation expressed through its own output.
inline double activation_slope(Activation a, double post) {
  return a == Activation::tanh_act ? 1.0 - post * post : 1.0;
}

struct ForwardPass {
  std::vector<Vec> acts;  // acts[0] = input, acts[l+1] = post-activation of layer l
  double logit = 0.0;     // final scalar before the output activation
  double output = 0.0;
};

inline ForwardPass forward(const Mlp& net, const Vec& x) {
  if (static_cast<int>(x.size()) != net.n_in())
    throw std::invalid_argument("input dimension does not match the network");
  ForwardPass fp;
  fp.acts.reserve(net.layers.size() + 1);
  fp.acts.push_back(x);
  for (const Layer& layer : net.layers) {
    Vec a = matvec(layer.w, fp.acts.back());
    for (size_t i = 0; i < a.size(); ++i) a[i] = apply_activation(layer.act, a[i] + layer.b[i]);
    fp.acts.push_back(std::move(a));
  }
  fp.logit = fp.acts.back().front();
  fp.output = net.output_activation == OutputActivation::sigmoid
                  ? 1.0 / (1.0 + std::exp(-fp.logit))
                  : fp.logit;
  return fp;
}

// d(post-activation of layer up_to_layer) / d(input), by forward tangent
// propagation. Exact for the analytic activations used here.
inline Mat jacobian_wrt_input(const Mlp& net, const Vec& x, int up_to_layer) {
  if (up_to_layer < 0 || up_to_layer >= static_cast<int>(net.layers.size()))
    throw std::invalid_argument("layer index out of range");
  if (static_cast<int>(x.size()) != net.n_in())
    throw std::invalid_argument("input dimension does not match the network");
  Vec a = x;
  Mat j = Mat::identity(static_cast<int>(x.size()));
  for (int l = 0; l <= up_to_layer; ++l) {
    const Layer& layer = net.layers[l];
    Vec pre = matvec(layer.w, a);
    Mat jn = matmul(layer.w, j);
    a = std::move(pre);
    for (size_t i = 0; i < a.size(); ++i) {
      a[i] = apply_activation(layer.act, a[i] + layer.b[i]);
      const double slope = activation_slope(layer.act, a[i]);
      for (int c = 0; c < jn.cols; ++c) jn(static_cast<int>(i), c) *= slope;
    }
    j = std::move(jn);
  }
  return j;
}

struct Gradients {
  std::vector<Mat> w;
  std::vector<Vec> b;
};

inline Gradients zero_gradients(const Mlp& net) {
  Gradients g;
  for (const Layer& l : net.layers) {
    g.w.emplace_back(l.w.rows, l.w.cols);
    g.b.emplace_back(l.b.size(), 0.0);
  }
  return g;
}

// Mean loss over the batch and its parameter gradients. BCE uses the fused
// sigmoid form on the logit; MSE carries a 1/2 so that gradient descent on
// the scalar mode matches the tau = 1/learning_rate convention.
inline std::pair<double, Gradients> loss_and_gradient(const Mlp& net, const std::vector<Vec>& xs,
                                                      const std::vector<double>& ys,
                                                      LossKind loss) {
  if (xs.empty()) throw std::invalid_argument("empty batch");
  if (xs.size() != ys.size()) throw std::invalid_argument("inputs and labels differ in count");
  if (loss == LossKind::bce && net.output_activation != OutputActivation::sigmoid)
    throw std::invalid_argument("bce loss requires a sigmoid output");
  const double inv_n = 1.0 / static_cast<double>(xs.size());
  double total = 0.0;
  Gradients grads = zero_gradients(net);
  const int n_layers = static_cast<int>(net.layers.size());
  for (size_t s = 0; s < xs.size(); ++s) {
    const ForwardPass fp = forward(net, xs[s]);
    const double y = ys[s];
    const double z = fp.logit;
    double dz;  // d(mean loss)/d(logit) for this sample
    if (loss == LossKind::bce) {
      total += (std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::abs(z)))) * inv_n;
      dz = (fp.output - y) * inv_n;
    } else {
      const double r = fp.output - y;
      total += 0.5 * r * r * inv_n;
      double d = r * inv_n;
      if (net.output_activation == OutputActivation::sigmoid)
        d *= fp.output * (1.0 - fp.output);
      dz = d;
    }
    Vec delta = {dz};
    for (int l = n_layers - 1; l >= 0; --l) {
      const Layer& layer = net.layers[l];
      const Vec& below = fp.acts[l];
      for (int r = 0; r < layer.w.rows; ++r) {
        grads.b[l][r] += delta[r];
        for (int c = 0; c < layer.w.cols; ++c) grads.w[l](r, c) += delta[r] * below[c];
      }
      if (l == 0) break;
      Vec next(layer.w.cols, 0.0);
      for (int r = 0; r < layer.w.rows; ++r)
        for (int c = 0; c < layer.w.cols; ++c) next[c] += layer.w(r, c) * delta[r];
      const Activation below_act = net.layers[l - 1].act;
      for (int c = 0; c < layer.w.cols; ++c)
        next[c] *= activation_slope(below_act, below[c]);
      delta = std::move(next);
    }
  }
  return {total, std::move(grads)};
}

// W^T W of the first layer; shows which input directions the network reads.
inline Mat gram_matrix(const Mlp& net) {
  if (net.layers.empty()) throw std::invalid_argument("network has no layers");
  return matmul(transpose(net.layers.front().w), net.layers.front().w);
}

struct TrainConfig {
  double learning_rate = 0.05;
  int epochs = 1000;
  LossKind loss = LossKind::bce;
  int grid_resolution = 32;
  double noise_sigma = 0.0;
  std::optional<AngleBox> holdout;
  uint64_t seed = 0;
  int snapshot_every = 100;
  bool train_biases = true;  // frozen at zero for the linear-dynamics runs
  std::optional<Mat> projection;  // orthonormal re-embedding applied to inputs
  AngleBox plane_box;             // sampling window for plane tasks
};

struct TrainSnapshot {
  int epoch = 0;
  double loss = 0.0;
  double train_accuracy = 0.0;
  double holdout_accuracy = std::numeric_limits<double>::quiet_NaN();
  double u = std::numeric_limits<double>::quiet_NaN();  // mode projection, linear nets only
  Mlp weights;
};

struct TrainRecord {
  std::vector<TrainSnapshot> snapshots;
};

struct TrainingDiverged : std::runtime_error {
  TrainRecord record;  // snapshots up to the last finite state
  TrainingDiverged(const std::string& msg, TrainRecord r)
      : std::runtime_error(msg), record(std::move(r)) {}
};

namespace detail {

// Collapses a fully linear net to the single row it computes.
inline Vec linear_readout_row(const Mlp& net) {
  Mat prod = net.layers.front().w;
  for (size_t l = 1; l < net.layers.size(); ++l) prod = matmul(net.layers[l].w, prod);
  return prod.data;  // 1 x n_in
}

}  // namespace detail

// Full-batch gradient descent on a fixed uniform grid. Labels come from the
// clean angles; when noise_sigma > 0 the inputs are re-noised every epoch.
// Snapshots at epoch 0, every snapshot_every epochs, and the final epoch.
inline std::pair<Mlp, TrainRecord> train(Mlp net, const TaskSpec& spec, const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (cfg.epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (cfg.snapshot_every < 1) throw std::invalid_argument("snapshot_every must be >= 1");

  const AngleGrid grid = spec.domain == Domain::torus
                             ? make_torus_grid(cfg.grid_resolution)
                             : make_plane_grid(cfg.grid_resolution, cfg.plane_box);
  std::vector<char> held(grid.points.size(), 0);
  if (cfg.holdout) held = holdout_mask(grid, *cfg.holdout);

  auto embed = [&](const AnglePoint& p) {
    Vec x = embed_point(p, spec.domain, grid.box);
    return cfg.projection ? embed_highdim(x, *cfg.projection) : x;
  };

  std::vector<int> train_idx, hold_idx;
  for (size_t i = 0; i < grid.points.size(); ++i) (held[i] ? hold_idx : train_idx).push_back(i);
  if (train_idx.empty()) throw std::invalid_argument("holdout region leaves no training points");

  std::vector<Vec> train_x;
  std::vector<double> train_y;
  for (int i : train_idx) {
    train_x.push_back(embed(grid.points[i]));
    train_y.push_back(label(spec, grid.points[i]));
  }
  std::vector<Vec> hold_x;
  std::vector<double> hold_y;
  for (int i : hold_idx) {
    hold_x.push_back(embed(grid.points[i]));
    hold_y.push_back(label(spec, grid.points[i]));
  }

  // Mode direction for linear nets: unit row of the input-target correlation.
  Vec v1;
  if (net.is_linear()) {
    Vec row(net.n_in(), 0.0);
    for (size_t s = 0; s < train_x.size(); ++s)
      for (size_t j = 0; j < row.size(); ++j) row[j] += train_y[s] * train_x[s][j];
    for (double& v : row) v /= static_cast<double>(train_x.size());
    const double n = norm2(row);
    if (n > 1e-12) {
      v1 = row;
      for (double& v : v1) v /= n;
    }
  }

  auto accuracy = [&](const std::vector<Vec>& xs, const std::vector<double>& ys) {
    if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
    int correct = 0;
    for (size_t s = 0; s < xs.size(); ++s) {
      const double out = forward(net, xs[s]).output;
      if ((out > 0.5) == (ys[s] > 0.5)) ++correct;
    }
    return static_cast<double>(correct) / xs.size();
  };

  TrainRecord record;
  auto snapshot = [&](int epoch) {
    TrainSnapshot snap;
    snap.epoch = epoch;
    snap.loss = loss_and_gradient(net, train_x, train_y, cfg.loss).first;
    snap.train_accuracy = accuracy(train_x, train_y);
    snap.holdout_accuracy = accuracy(hold_x, hold_y);
    if (!v1.empty()) snap.u = dot(detail::linear_readout_row(net), v1);
    snap.weights = net;
    record.snapshots.push_back(std::move(snap));
  };

  snapshot(0);
  RngState rng(cfg.seed);
  std::vector<Vec> batch_x = train_x;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.noise_sigma > 0.0) {
      for (size_t s = 0; s < train_idx.size(); ++s) {
        const AnglePoint noisy =
            add_tangent_noise(grid.points[train_idx[s]], cfg.noise_sigma, rng);
        batch_x[s] = embed(noisy);
      }
    }
    auto [batch_loss, grads] =
        loss_and_gradient(net, cfg.noise_sigma > 0.0 ? batch_x : train_x, train_y, cfg.loss);
    if (!std::isfinite(batch_loss) || batch_loss > 1e6)
      throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch),
                             std::move(record));
    for (size_t l = 0; l < net.layers.size(); ++l) {
      Layer& layer = net.layers[l];
      for (size_t k = 0; k < layer.w.data.size(); ++k)
        layer.w.data[k] -= cfg.learning_rate * grads.w[l].data[k];
      if (cfg.train_biases)
        for (size_t k = 0; k < layer.b.size(); ++k)
          layer.b[k] -= cfg.learning_rate * grads.b[l][k];
    }
    if (epoch % cfg.snapshot_every == 0 || epoch == cfg.epochs) snapshot(epoch);
  }
  return {std::move(net), std::move(record)};
}

// Fraction of clean grid points classified correctly.
inline double grid_accuracy(const Mlp& net, const TaskSpec& spec, const AngleGrid& grid,
                            const Mat* projection = nullptr) {
  int correct = 0;
  for (const AnglePoint& p : grid.points) {
    Vec x = embed_point(p, spec.domain, grid.box);
    if (projection) x = embed_highdim(x, *projection);
    const double out = forward(net, x).output;
    if ((out > 0.5) == (label(spec, p) > 0)) ++correct;
  }
  return static_cast<double>(correct) / grid.points.size();
}

}  // namespace manigeo
