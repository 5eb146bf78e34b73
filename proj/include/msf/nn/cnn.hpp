#pragma once
// Small convolutional network over single-channel square inputs. Convolutions
// are 3x3 valid, each followed by ReLU and a 2x2 stride-1 max pool; the last
// conv stage and the hidden dense layer carry inverted dropout. Activations
// are stored pixel-major with channels last, which makes the flatten between
// the pool stack and the dense head a plain copy.
//
// Convolutions run as patch-matrix GEMMs. The patch gather and the pooling /
// scatter passes parallelize over samples only, so every output element has a
// single writer and results are identical at any thread count.

#include "msf/nn/mlp.hpp"

namespace msf::nn {

struct CnnConfig {
  int input_h = 12;
  int input_w = 12;
  int input_ch = 1;
  std::vector<int> conv_channels = {64, 32, 32};
  int kernel = 3;
  int pool = 2;  // pool window; pooling stride is 1
  int fc_units = 100;
  int n_outputs = 5;
  double dropout_conv = 0.2;  // after the last conv ReLU
  double dropout_fc = 0.25;   // after the hidden dense ReLU

  void validate() const;
};

struct ConvLayer {
  int in_ch = 0, out_ch = 0, kernel = 0;
  Matrix W;  // out_ch x (in_ch * kernel * kernel)
  std::vector<double> b;
};

struct CnnModel {
  CnnConfig cfg;
  std::vector<ConvLayer> convs;
  DenseLayer fc1;  // fc_units x flatten
  DenseLayer out;  // n_outputs x fc_units

  static CnnModel create(const CnnConfig& cfg, SeededRng& rng);

  int n_inputs() const { return cfg.input_h * cfg.input_w * cfg.input_ch; }
  int n_outputs() const { return cfg.n_outputs; }
  // Flat element counts after every stage: conv/pool pairs, flatten, hidden
  // dense, output. Lets tests pin the whole shape chain at once.
  std::vector<int> activation_sizes() const;

  std::size_t n_params() const;
  std::size_t n_weights() const;  // excluding biases
  void get_params(std::vector<double>& out) const;
  void set_params(const std::vector<double>& in);

  struct Cache {
    int batch = 0;
    std::vector<Matrix> cols;      // per conv: patches x (in_ch*k*k)
    std::vector<Matrix> pool_in;   // per conv: post-ReLU (and dropout) stage
    std::vector<Matrix> pool_out;  // per conv: pooled stage
    std::vector<std::vector<int>> pool_argmax;  // flat index into pool_in.d
    Matrix conv_mask, fc_mask;     // dropout scales; empty when inactive
    Matrix flat;                   // batch x flatten
    Matrix fc_act;                 // batch x fc_units, post-ReLU/dropout
    Matrix output;                 // batch x n_outputs
  };

  // Inference path: dropout off.
  Matrix forward(const Matrix& X) const;
  // Training path: dropout is active when dropout_rng is non-null. Mask draws
  // are consumed in a fixed serial order, so a caller-seeded stream makes the
  // whole pass reproducible.
  Matrix forward(const Matrix& X, Cache& cache, SeededRng* dropout_rng) const;

  // Fills a flat gradient in parameter order (conv W,b ... fc1 W,b out W,b).
  void backward(const Cache& cache, const Matrix& dY,
                std::vector<double>& grad) const;
};

// MSE loss with dropout-aware gradient; no weight penalty. Returns the batch
// MSE measured on the (possibly dropped-out) forward pass.
double cnn_loss_grad(const CnnModel& m, const Matrix& X, const Matrix& Y,
                     SeededRng* dropout_rng, std::vector<double>& grad);

}  // namespace msf::nn
