#pragma once
// Momentum SGD with inverse-time learning-rate decay, and the mini-batch
// trainer for the convolutional model built on it.

#include "msf/nn/cnn.hpp"

namespace msf::nn {

// v = momentum * v + g ; w -= lr_t * v. The step counter t starts at zero,
// so the first update uses the base rate: lr_t = lr0 / (1 + decay * t).
struct SgdUpdater {
  double lr0 = 1e-3;
  double momentum = 0.9;
  double decay = 0.0;
  std::vector<double> velocity;
  long long step_count = 0;

  SgdUpdater(std::size_t n_params, const TrainConfig& cfg)
      : lr0(cfg.learning_rate),
        momentum(cfg.momentum),
        decay(cfg.lr_decay),
        velocity(n_params, 0.0) {}

  double current_lr() const { return lr0 / (1.0 + decay * double(step_count)); }

  // Throws numeric_error on a non-finite gradient entry.
  void apply(std::vector<double>& w, const std::vector<double>& g);
};

// Mini-batch training with a fresh shuffle per epoch and a validation check
// after every epoch; the returned model holds the weights of the best check.
// cfg fields used: learning_rate, momentum, lr_decay, batch_size, max_epochs,
// patience, seed. An empty validation set disables early stopping.
TrainResult train_sgd(CnnModel& model, const Matrix& X_train,
                      const Matrix& Y_train, const Matrix& X_val,
                      const Matrix& Y_val, const TrainConfig& cfg);

}  // namespace msf::nn
