#pragma once
// Scaled conjugate gradient minimizer: conjugate directions with step sizes
// from a finite-difference curvature estimate plus adaptive damping, so no
// line search is needed. Also the full-batch MLP trainer built on it, with
// per-iteration validation checks and best-validation weight tracking.

#include <functional>
#include <string>

#include "msf/nn/mlp.hpp"

namespace msf::nn {

// Minimization target. Implementations must be deterministic: the minimizer
// relies on repeated evaluations at identical points agreeing bit for bit.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual std::size_t dimension() const = 0;
  virtual double value(const std::vector<double>& w) = 0;
  virtual double value_grad(const std::vector<double>& w,
                            std::vector<double>& grad) = 0;
};

struct ScgOptions {
  int max_iterations = 1000;
  double grad_tol = 1e-8;      // stop when the gradient norm falls below this
  double sigma0 = 1e-4;        // finite-difference probe scale
  double lambda_init = 1e-6;   // initial damping
  // Called after every accepted step with (iteration, point, loss);
  // return false to stop.
  std::function<bool(int, const std::vector<double>&, double)> on_step;
};

struct ScgResult {
  std::vector<double> w;
  double loss = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  // "grad_tol" | "max_steps" | "callback" | "no_progress"
  std::string stop_reason;
};

ScgResult scg_minimize(Objective& obj, std::vector<double> w0,
                       const ScgOptions& opt);

// Full-batch training. Validation MSE is checked after every accepted step;
// the returned model holds the weights of the best check. cfg fields used:
// max_iterations, grad_tol, patience, l2_lambda, l2_mode. An empty validation
// set disables early stopping and best-weight tracking.
TrainResult train_scg(MlpModel& model, const Matrix& X_train,
                      const Matrix& Y_train, const Matrix& X_val,
                      const Matrix& Y_val, const TrainConfig& cfg);

}  // namespace msf::nn
