#pragma once
// Radial basis network: Gaussian units exp(-|x-c|^2 / (2 sigma^2)) feeding a
// linear output layer with bias. Training is greedy: starting from the bias
// alone, each round plants a center on the training input with the largest
// residual and re-solves the output layer by regularized least squares,
// growing a Cholesky factor of the normal matrix one column at a time.

#include "msf/nn/common.hpp"

namespace msf::nn {

struct RbfModel {
  int n_in = 0;
  int n_out = 0;
  double sigma = 1.0;
  Matrix centers;            // n_centers x n_in
  Matrix weights;            // n_centers x n_out
  std::vector<double> bias;  // n_out

  int n_inputs() const { return n_in; }
  int n_outputs() const { return n_out; }
  int n_centers() const { return centers.rows; }

  Matrix forward(const Matrix& X) const;
};

struct RbfTrainReport {
  std::vector<double> mse_history;  // entry 0 is the bias-only fit
  double final_mse = 0.0;
  int n_centers = 0;
  int ridge_bumps = 0;
  // "goal" | "max_centers" | "exhausted"
  std::string stop_reason;
};

// cfg fields used: rbf_sigma, mse_goal, max_centers (0 caps at the sample
// count). The normal-equation ridge starts at 1e-12 and is bumped with a
// warning if the factorization breaks down.
RbfModel train_rbf(const Matrix& X, const Matrix& Y, const TrainConfig& cfg,
                   RbfTrainReport* report = nullptr);

// MSE and its gradient with respect to the linear output parameters only
// (weights row-major, then bias), centers held fixed. Gradient-check hook.
double rbf_output_loss_grad(const RbfModel& m, const Matrix& X,
                            const Matrix& Y, std::vector<double>& grad);

}  // namespace msf::nn
