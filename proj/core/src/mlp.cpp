#include "segdecomp/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace segdecomp {

namespace {

using Matrix = std::vector<std::vector<double>>;

struct Cache {
  Matrix input;
  Matrix zhat;
  Matrix y;
  std::vector<double> inv_std;
};

Matrix dense(const Matrix& x, const Mlp::Layer& l) {
  Matrix z(x.size(), std::vector<double>(l.out));
  for (std::size_t n = 0; n < x.size(); ++n)
    for (std::size_t o = 0; o < l.out; ++o) {
      double s = l.bias[o];
      for (std::size_t i = 0; i < l.in; ++i) s += l.weight[o * l.in + i] * x[n][i];
      z[n][o] = s;
    }
  return z;
}

}  // namespace

Mlp Mlp::from_layers(std::vector<Layer> layers, double bn_epsilon) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.weight.size() != l.in * l.out || l.bias.size() != l.out)
      throw std::invalid_argument("mlp layer has inconsistent shape");
    const bool hidden = i + 1 < layers.size();
    if (hidden && (l.gamma.size() != l.out || l.beta.size() != l.out || l.mean.size() != l.out ||
                   l.var.size() != l.out))
      throw std::invalid_argument("mlp hidden layer lacks batch-norm parameters");
    if (i > 0 && layers[i - 1].out != l.in) throw std::invalid_argument("mlp layers do not chain");
  }
  Mlp m;
  m.layers_ = std::move(layers);
  m.eps_ = bn_epsilon;
  return m;
}

std::vector<double> Mlp::parameters() const {
  std::vector<double> p;
  for (const auto& l : layers_) {
    p.insert(p.end(), l.weight.begin(), l.weight.end());
    p.insert(p.end(), l.bias.begin(), l.bias.end());
    p.insert(p.end(), l.gamma.begin(), l.gamma.end());
    p.insert(p.end(), l.beta.begin(), l.beta.end());
  }
  return p;
}

void Mlp::set_parameters(std::span<const double> flat) {
  std::size_t k = 0;
  auto take = [&](std::vector<double>& v) {
    for (auto& x : v) x = flat[k++];
  };
  for (auto& l : layers_) {
    take(l.weight);
    take(l.bias);
    take(l.gamma);
    take(l.beta);
  }
  if (k != flat.size()) throw std::invalid_argument("mlp parameter vector has the wrong length");
}

double Mlp::loss_and_gradient(const Matrix& x, std::span<const std::size_t> labels, std::vector<double>* gradient) {
  const std::size_t n = x.size();
  const double nd = static_cast<double>(n);
  std::vector<Cache> caches(layers_.size());
  Matrix a = x;
  for (std::size_t li = 0; li + 1 < layers_.size(); ++li) {
    auto& l = layers_[li];
    auto& c = caches[li];
    c.input = a;
    Matrix z = dense(a, l);
    c.zhat = z;
    c.y = z;
    c.inv_std.assign(l.out, 0.0);
    for (std::size_t o = 0; o < l.out; ++o) {
      double mu = 0;
      for (std::size_t s = 0; s < n; ++s) mu += z[s][o];
      mu /= nd;
      double var = 0;
      for (std::size_t s = 0; s < n; ++s) var += (z[s][o] - mu) * (z[s][o] - mu);
      var /= nd;
      l.mean[o] = mu;
      l.var[o] = var;
      c.inv_std[o] = 1.0 / std::sqrt(var + eps_);
      for (std::size_t s = 0; s < n; ++s) {
        c.zhat[s][o] = (z[s][o] - mu) * c.inv_std[o];
        c.y[s][o] = l.gamma[o] * c.zhat[s][o] + l.beta[o];
      }
    }
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t o = 0; o < l.out; ++o) z[s][o] = std::max(0.0, c.y[s][o]);
    a = std::move(z);
  }
  auto& out_layer = layers_.back();
  caches.back().input = a;
  Matrix logits = dense(a, out_layer);
  double loss = 0;
  Matrix delta(n, std::vector<double>(out_layer.out));
  for (std::size_t s = 0; s < n; ++s) {
    const double top = *std::max_element(logits[s].begin(), logits[s].end());
    double sum = 0;
    for (double v : logits[s]) sum += std::exp(v - top);
    const double log_z = top + std::log(sum);
    loss -= logits[s][labels[s]] - log_z;
    for (std::size_t o = 0; o < out_layer.out; ++o)
      delta[s][o] = (std::exp(logits[s][o] - log_z) - (o == labels[s] ? 1.0 : 0.0)) / nd;
  }
  loss /= nd;
  if (!gradient) return loss;

  std::vector<std::vector<double>> grads(layers_.size());
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const auto& l = layers_[li];
    const bool hidden = li + 1 < layers_.size();
    const auto& c = caches[li];
    Matrix dz = delta;
    std::vector<double> dgamma, dbeta;
    if (hidden) {
      // delta holds dL/dA here; go back through ReLU and batch norm.
      dgamma.assign(l.out, 0.0);
      dbeta.assign(l.out, 0.0);
      for (std::size_t o = 0; o < l.out; ++o) {
        double sum_dxhat = 0, sum_dxhat_xhat = 0;
        std::vector<double> dxhat(n);
        for (std::size_t s = 0; s < n; ++s) {
          const double dy = c.y[s][o] > 0 ? delta[s][o] : 0.0;
          dgamma[o] += dy * c.zhat[s][o];
          dbeta[o] += dy;
          dxhat[s] = dy * l.gamma[o];
          sum_dxhat += dxhat[s];
          sum_dxhat_xhat += dxhat[s] * c.zhat[s][o];
        }
        for (std::size_t s = 0; s < n; ++s)
          dz[s][o] = c.inv_std[o] / nd * (nd * dxhat[s] - sum_dxhat - c.zhat[s][o] * sum_dxhat_xhat);
      }
    }
    std::vector<double> g(l.weight.size() + l.bias.size(), 0.0);
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t o = 0; o < l.out; ++o) {
        for (std::size_t i = 0; i < l.in; ++i) g[o * l.in + i] += dz[s][o] * c.input[s][i];
        g[l.weight.size() + o] += dz[s][o];
      }
    g.insert(g.end(), dgamma.begin(), dgamma.end());
    g.insert(g.end(), dbeta.begin(), dbeta.end());
    grads[li] = std::move(g);
    if (li > 0) {
      Matrix prev(n, std::vector<double>(l.in, 0.0));
      for (std::size_t s = 0; s < n; ++s)
        for (std::size_t o = 0; o < l.out; ++o)
          for (std::size_t i = 0; i < l.in; ++i) prev[s][i] += dz[s][o] * l.weight[o * l.in + i];
      delta = std::move(prev);
    }
  }
  gradient->clear();
  for (auto& g : grads) gradient->insert(gradient->end(), g.begin(), g.end());
  return loss;
}

Mlp Mlp::fit(const Matrix& x, std::span<const std::size_t> labels, std::size_t n_classes, const MlpOptions& options) {
  if (x.empty() || x.size() != labels.size()) throw std::invalid_argument("mlp needs matching, non-empty data");
  if (n_classes == 0) throw std::invalid_argument("mlp needs at least one class");
  for (auto y : labels)
    if (y >= n_classes) throw std::invalid_argument("mlp label out of range");
  const std::size_t dim = x.front().size();
  for (const auto& row : x)
    if (row.size() != dim) throw std::invalid_argument("mlp rows differ in length");

  std::mt19937_64 rng(options.seed);
  Mlp m;
  m.eps_ = options.bn_epsilon;
  std::size_t in = dim;
  for (std::size_t h = 0; h <= options.hidden_layers; ++h) {
    const bool hidden = h < options.hidden_layers;
    Layer l;
    l.in = in;
    l.out = hidden ? options.hidden_units : n_classes;
    std::normal_distribution<double> init(0.0, std::sqrt(2.0 / static_cast<double>(std::max<std::size_t>(in, 1))));
    l.weight.resize(l.in * l.out);
    for (auto& w : l.weight) w = init(rng);
    l.bias.assign(l.out, 0.0);
    if (hidden) {
      l.gamma.assign(l.out, 1.0);
      l.beta.assign(l.out, 0.0);
      l.mean.assign(l.out, 0.0);
      l.var.assign(l.out, 1.0);
    }
    m.layers_.push_back(std::move(l));
    in = options.hidden_units;
  }

  std::vector<double> params = m.parameters();
  std::vector<double> mom(params.size(), 0.0), vel(params.size(), 0.0), grad;
  constexpr double b1 = 0.9, b2 = 0.999, adam_eps = 1e-8;
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    m.loss_and_gradient(x, labels, &grad);
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(epoch));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(epoch));
    for (std::size_t i = 0; i < params.size(); ++i) {
      mom[i] = b1 * mom[i] + (1 - b1) * grad[i];
      vel[i] = b2 * vel[i] + (1 - b2) * grad[i] * grad[i];
      params[i] -= options.learning_rate * (mom[i] / c1) / (std::sqrt(vel[i] / c2) + adam_eps);
    }
    m.set_parameters(params);
  }
  m.loss_and_gradient(x, labels, nullptr);  // refresh batch-norm statistics
  return m;
}

std::vector<double> Mlp::predict_proba(std::span<const double> x) const {
  std::vector<double> a(x.begin(), x.end());
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const auto& l = layers_[li];
    if (a.size() != l.in) throw std::invalid_argument("mlp input has the wrong length");
    std::vector<double> z(l.out);
    for (std::size_t o = 0; o < l.out; ++o) {
      double s = l.bias[o];
      for (std::size_t i = 0; i < l.in; ++i) s += l.weight[o * l.in + i] * a[i];
      if (li + 1 < layers_.size()) {
        s = l.gamma[o] * (s - l.mean[o]) / std::sqrt(l.var[o] + eps_) + l.beta[o];
        s = std::max(0.0, s);
      }
      z[o] = s;
    }
    a = std::move(z);
  }
  const double top = *std::max_element(a.begin(), a.end());
  double sum = 0;
  for (auto& v : a) sum += (v = std::exp(v - top));
  for (auto& v : a) v /= sum;
  return a;
}

std::size_t Mlp::predict(std::span<const double> x) const {
  const auto p = predict_proba(x);
  return static_cast<std::size_t>(std::distance(p.begin(), std::max_element(p.begin(), p.end())));
}

}  // namespace segdecomp
