#include <algorithm>
#include <cmath>
#include <numeric>

#include "vbrisk/error.hpp"
#include "vbrisk/homeloc/learners.hpp"
#include "vbrisk/random.hpp"

namespace vbrisk::homeloc {
namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void dense_forward(const DenseLayer& L, const double* in, double* out) {
  for (std::size_t o = 0; o < L.outputs; ++o) {
    const double* w = &L.weights[o * L.inputs];
    double s = L.bias[o];
    for (std::size_t i = 0; i < L.inputs; ++i) s += w[i] * in[i];
    out[o] = s;
  }
}

}  // namespace

Network::Network(std::size_t inputs, const NetworkOptions& options) : dropout_(options.dropout) {
  std::size_t prev = inputs;
  std::vector<std::size_t> widths(options.hidden);
  widths.push_back(1);
  for (std::size_t w : widths) {
    DenseLayer L;
    L.inputs = prev;
    L.outputs = w;
    L.weights.assign(prev * w, 0.0);
    L.bias.assign(w, 0.0);
    layers_.push_back(std::move(L));
    prev = w;
  }
}

Network Network::from_layers(std::vector<DenseLayer> layers, double dropout) {
  if (layers.empty()) fail(Errc::format, "network: no layers");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& L = layers[k];
    if (L.weights.size() != L.inputs * L.outputs || L.bias.size() != L.outputs ||
        (k > 0 && L.inputs != layers[k - 1].outputs)) {
      fail(Errc::format, "network: inconsistent layer shapes");
    }
  }
  if (layers.back().outputs != 1) fail(Errc::format, "network: output layer must have one unit");
  Network net;
  net.layers_ = std::move(layers);
  net.dropout_ = dropout;
  return net;
}

double Network::predict(std::span<const double> x) const {
  if (layers_.empty()) fail(Errc::config, "network is not trained");
  if (x.size() != inputs()) fail(Errc::validation, "network: wrong input width");
  std::vector<double> a(x.begin(), x.end()), z;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    z.assign(layers_[k].outputs, 0.0);
    dense_forward(layers_[k], a.data(), z.data());
    if (k + 1 < layers_.size()) {
      for (double& v : z) v = std::max(v, 0.0);
    }
    a.swap(z);
  }
  return sigmoid(a[0]);
}

struct NetworkTrainer {
  static NetworkTraining run(std::span<const std::vector<double>> x, std::span<const double> y,
                             const NetworkOptions& opt, std::uint64_t seed) {
    if (x.size() != y.size()) fail(Errc::validation, "network: feature and label counts differ");
    if (x.empty()) fail(Errc::validation, "network: empty training set");
    if (!(opt.dropout >= 0.0 && opt.dropout < 1.0)) fail(Errc::config, "network: dropout must lie in [0, 1)");
    if (opt.batch_size == 0) fail(Errc::config, "network: batch size must be >= 1");
    if (!(opt.learning_rate > 0.0)) fail(Errc::config, "network: learning rate must be > 0");
    const std::size_t width = x.front().size();
    for (const auto& row : x) {
      if (row.size() != width) fail(Errc::validation, "network: ragged feature rows");
    }

    NetworkTraining out;
    Network& net = out.network;
    net = Network(width, opt);
    Rng rng(seed);
    // He-uniform for ReLU layers, Glorot-uniform for the sigmoid head.
    for (std::size_t k = 0; k < net.layers_.size(); ++k) {
      auto& L = net.layers_[k];
      const bool head = k + 1 == net.layers_.size();
      const double limit = head ? std::sqrt(6.0 / static_cast<double>(L.inputs + L.outputs))
                                : std::sqrt(6.0 / static_cast<double>(L.inputs));
      for (double& w : L.weights) w = rng.uniform(-limit, limit);
    }

    const std::size_t depth = net.layers_.size();
    std::vector<std::vector<double>> grad_w(depth), grad_b(depth), sq_w(depth), sq_b(depth);
    for (std::size_t k = 0; k < depth; ++k) {
      grad_w[k].assign(net.layers_[k].weights.size(), 0.0);
      grad_b[k].assign(net.layers_[k].bias.size(), 0.0);
      sq_w[k] = grad_w[k];
      sq_b[k] = grad_b[k];
    }
    // acts[k] is the input of layer k (after ReLU and dropout); acts[depth] holds the logit.
    std::vector<std::vector<double>> acts(depth + 1), pre(depth), masks(depth);
    for (std::size_t k = 0; k < depth; ++k) {
      acts[k + 1].assign(net.layers_[k].outputs, 0.0);
      pre[k].assign(net.layers_[k].outputs, 0.0);
      masks[k].assign(net.layers_[k].outputs, 1.0);
    }
    std::vector<std::vector<double>> delta(depth);
    for (std::size_t k = 0; k < depth; ++k) delta[k].assign(net.layers_[k].outputs, 0.0);

    const double keep = 1.0 - opt.dropout;
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
      rng.shuffle(std::span<std::size_t>(order));
      double epoch_loss = 0.0;
      for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
        const std::size_t stop = std::min(order.size(), start + opt.batch_size);
        for (std::size_t k = 0; k < depth; ++k) {
          std::fill(grad_w[k].begin(), grad_w[k].end(), 0.0);
          std::fill(grad_b[k].begin(), grad_b[k].end(), 0.0);
        }
        for (std::size_t s = start; s < stop; ++s) {
          const std::size_t row = order[s];
          acts[0] = x[row];
          for (std::size_t k = 0; k < depth; ++k) {
            const auto& L = net.layers_[k];
            dense_forward(L, acts[k].data(), pre[k].data());
            if (k + 1 < depth) {
              for (std::size_t o = 0; o < L.outputs; ++o) {
                // Inverted dropout: surviving units are rescaled by 1 / keep.
                masks[k][o] = opt.dropout > 0.0 ? (rng.uniform() < keep ? 1.0 / keep : 0.0) : 1.0;
                acts[k + 1][o] = std::max(pre[k][o], 0.0) * masks[k][o];
              }
            } else {
              acts[k + 1][0] = pre[k][0];
            }
          }
          const double p = sigmoid(acts[depth][0]);
          const double pc = std::clamp(p, 1e-12, 1.0 - 1e-12);
          epoch_loss += -(y[row] * std::log(pc) + (1.0 - y[row]) * std::log(1.0 - pc));

          delta[depth - 1][0] = p - y[row];
          for (std::size_t k = depth; k-- > 0;) {
            const auto& L = net.layers_[k];
            const double* in = acts[k].data();
            for (std::size_t o = 0; o < L.outputs; ++o) {
              const double d = delta[k][o];
              if (d == 0.0) continue;
              grad_b[k][o] += d;
              double* g = &grad_w[k][o * L.inputs];
              for (std::size_t i = 0; i < L.inputs; ++i) g[i] += d * in[i];
            }
            if (k == 0) break;
            auto& prev = delta[k - 1];
            std::fill(prev.begin(), prev.end(), 0.0);
            for (std::size_t o = 0; o < L.outputs; ++o) {
              const double d = delta[k][o];
              if (d == 0.0) continue;
              const double* w = &L.weights[o * L.inputs];
              for (std::size_t i = 0; i < L.inputs; ++i) prev[i] += d * w[i];
            }
            for (std::size_t i = 0; i < prev.size(); ++i) {
              prev[i] *= (pre[k - 1][i] > 0.0 ? 1.0 : 0.0) * masks[k - 1][i];
            }
          }
        }
        const double scale = 1.0 / static_cast<double>(stop - start);
        for (std::size_t k = 0; k < depth; ++k) {
          auto& L = net.layers_[k];
          update(L.weights, grad_w[k], sq_w[k], scale, opt);
          update(L.bias, grad_b[k], sq_b[k], scale, opt);
        }
      }
      out.loss_history.push_back(epoch_loss / static_cast<double>(order.size()));
    }
    return out;
  }

  static void update(std::vector<double>& param, const std::vector<double>& grad,
                     std::vector<double>& sq, double scale, const NetworkOptions& opt) {
    for (std::size_t i = 0; i < param.size(); ++i) {
      const double g = grad[i] * scale;
      if (opt.optimizer == Optimizer::sgd) {
        param[i] -= opt.learning_rate * g;
      } else {
        sq[i] = opt.rms_decay * sq[i] + (1.0 - opt.rms_decay) * g * g;
        param[i] -= opt.learning_rate * g / (std::sqrt(sq[i]) + opt.rms_epsilon);
      }
    }
  }
};

NetworkTraining train_network(std::span<const std::vector<double>> x, std::span<const double> y,
                              const NetworkOptions& options, std::uint64_t seed) {
  return NetworkTrainer::run(x, y, options, seed);
}

}  // namespace vbrisk::homeloc
