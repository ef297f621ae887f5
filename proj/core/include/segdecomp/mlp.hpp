#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace segdecomp {

struct MlpOptions {
  std::size_t hidden_units = 16;
  std::size_t hidden_layers = 3;
  std::size_t epochs = 400;
  double learning_rate = 0.01;
  double bn_epsilon = 1e-5;
  std::uint64_t seed = 7;
};

/// Small classifier: hidden_layers x (dense -> batch norm -> ReLU), then a
/// dense softmax output. Trained full batch with Adam on cross-entropy.
/// Batch-norm statistics at inference are those of the last training pass.
class Mlp {
 public:
  struct Layer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weight;  // out x in, row-major
    std::vector<double> bias;
    // Batch norm (hidden layers only).
    std::vector<double> gamma;
    std::vector<double> beta;
    std::vector<double> mean;
    std::vector<double> var;
  };

  Mlp() = default;
  /// Rows of `x` are samples; labels index 0..n_classes-1.
  static Mlp fit(const std::vector<std::vector<double>>& x, std::span<const std::size_t> labels,
                 std::size_t n_classes, const MlpOptions& options);

  std::vector<double> predict_proba(std::span<const double> x) const;
  std::size_t predict(std::span<const double> x) const;

  /// Full-batch cross-entropy and its gradient with respect to every
  /// parameter, flattened layer by layer (weight, bias, gamma, beta).
  double loss_and_gradient(const std::vector<std::vector<double>>& x, std::span<const std::size_t> labels,
                           std::vector<double>* gradient);
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> flat);

  const std::vector<Layer>& layers() const noexcept { return layers_; }
  static Mlp from_layers(std::vector<Layer> layers, double bn_epsilon);
  double bn_epsilon() const noexcept { return eps_; }

 private:
  std::vector<Layer> layers_;
  double eps_ = 1e-5;
};

}  // namespace segdecomp
