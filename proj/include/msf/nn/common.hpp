#pragma once
// Shared training types: configuration, history rows, loss helpers.

#include <cstdint>
#include <string>
#include <vector>

#include "msf/core.hpp"
#include "msf/nn/linalg.hpp"

namespace msf::nn {

// Weight-penalty convention. "sum" is the literal lambda * sum(w^2) with
// gradient 2*lambda*w, the right scale for small or ridge-style models.
// "mean" divides by the weight count, which keeps published lambda values
// meaningful on networks with tens of thousands of weights.
enum class L2Mode { sum, mean };

const char* l2_mode_name(L2Mode m);
L2Mode l2_mode_from_name(const std::string& name);

enum class Optimizer { scg, sgd };

const char* optimizer_name(Optimizer o);
Optimizer optimizer_from_name(const std::string& name);

struct TrainConfig {
  double learning_rate = 1e-3;  // SGD step size        [reference]
  double momentum = 0.9;        // SGD velocity decay   [reference]
  double lr_decay = 1e-4;       // per-step 1/(1+d*t)   [reference]
  int batch_size = 32;          // SGD                  [toolkit default]
  int max_epochs = 500;         // SGD cap              [toolkit default]
  int max_iterations = 1000;    // SCG cap              [toolkit default]
  // Consecutive non-improving validation checks tolerated before stopping;
  // 0 stops at the first non-improving check.
  int patience = 20;            //                      [toolkit default]
  double l2_lambda = 0.8;       // weight penalty       [reference]
  L2Mode l2_mode = L2Mode::sum;
  double grad_tol = 1e-8;       // SCG stop             [toolkit default]
  double mse_goal = 1e-11;      // RBF stop             [reference]
  double rbf_sigma = 1.0;       // RBF spread           [reference]
  int max_centers = 0;          // RBF cap, 0 = sample count [toolkit default]
  Optimizer optimizer = Optimizer::scg;
  std::uint64_t seed = 0;

  void validate() const;
};

struct HistoryRow {
  int step = 0;  // SCG iteration or SGD epoch
  double train_loss = 0.0;
  double train_mse = 0.0;
  double val_mse = 0.0;
  double lr = 0.0;  // 0 for SCG
};

struct TrainResult {
  std::vector<HistoryRow> history;
  int steps_run = 0;
  int best_step = 0;
  double best_val_mse = 0.0;
  double final_grad_norm = 0.0;  // SCG only
  std::string stop_reason;       // "max_steps" | "patience" | "grad_tol"
};

void write_history_csv(const std::vector<HistoryRow>& history,
                       const std::string& path);

// Mean squared error over all entries (batch x outputs).
double mse_of(const Matrix& pred, const Matrix& target);

// Penalty term for a flat weight vector; biases must not be included by the
// caller. n_weights is the count the "mean" mode divides by.
double l2_penalty(const double* w, std::size_t n, double lambda, L2Mode mode,
                  std::size_t n_weights);

// Uniform fan-in init on [-sqrt(1/fan_in), sqrt(1/fan_in)].
void init_scaled_uniform(double* w, std::size_t n, int fan_in, SeededRng& rng);

}  // namespace msf::nn
