#pragma once
// Fully connected network with configurable layer sizes, tanh (default) or
// ReLU hidden activations and a linear output layer. Weights are stored
// [out x in] per layer; the flat parameter order is W0, b0, W1, b1, ...

#include "msf/nn/common.hpp"

namespace msf::nn {

enum class Activation { tanh_act, relu_act, linear_act };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

struct DenseLayer {
  Matrix W;  // out x in
  std::vector<double> b;
};

struct MlpModel {
  std::vector<int> layer_sizes;  // e.g. {144, 100, 100, 5}
  Activation hidden_activation = Activation::tanh_act;
  std::vector<DenseLayer> layers;

  static MlpModel create(std::vector<int> layer_sizes, SeededRng& rng,
                         Activation hidden = Activation::tanh_act);

  int n_inputs() const { return layer_sizes.front(); }
  int n_outputs() const { return layer_sizes.back(); }
  std::size_t n_params() const;
  std::size_t n_weights() const;  // excluding biases
  void get_params(std::vector<double>& out) const;
  void set_params(const std::vector<double>& in);
  // Sum of squared weights, biases excluded.
  double sum_sq_weights() const;

  struct Cache {
    std::vector<Matrix> act;  // act[0] = input, act[L] = output
  };

  Matrix forward(const Matrix& X) const;
  Matrix forward(const Matrix& X, Cache& cache) const;

  struct Grads {
    std::vector<Matrix> dW;
    std::vector<std::vector<double>> db;
    void zero();
  };
  Grads make_grads() const;

  // dY is dLoss/dOutput for the cached batch; fills data-term gradients.
  void backward(const Cache& cache, const Matrix& dY, Grads& g) const;
};

// Full-batch loss L = MSE + weight penalty and its gradient in flat parameter
// order. The penalty gradient contribution is exactly 2*lambda*w per weight
// in sum mode (0 per bias).
double mlp_loss(const MlpModel& m, const Matrix& X, const Matrix& Y,
                double lambda, L2Mode mode);
double mlp_loss_grad(MlpModel& m, const Matrix& X, const Matrix& Y,
                     double lambda, L2Mode mode, std::vector<double>& grad);

}  // namespace msf::nn
