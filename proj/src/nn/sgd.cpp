#include "msf/nn/sgd.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace msf::nn {

void SgdUpdater::apply(std::vector<double>& w, const std::vector<double>& g) {
  if (w.size() != velocity.size() || g.size() != velocity.size())
    throw validation_error("updater dimension mismatch");
  const double lr = current_lr();
  bool finite = true;
  for (std::size_t i = 0; i < w.size(); ++i) {
    finite = finite && std::isfinite(g[i]);
    velocity[i] = momentum * velocity[i] + g[i];
    w[i] -= lr * velocity[i];
  }
  if (!finite) throw numeric_error("non-finite gradient in SGD update");
  ++step_count;
}

TrainResult train_sgd(CnnModel& model, const Matrix& X_train,
                      const Matrix& Y_train, const Matrix& X_val,
                      const Matrix& Y_val, const TrainConfig& cfg) {
  cfg.validate();
  if (X_train.rows != Y_train.rows)
    throw validation_error("training features/targets row mismatch");
  if (X_val.rows != Y_val.rows)
    throw validation_error("validation features/targets row mismatch");
  if (X_train.rows == 0) throw validation_error("empty training set");
  if (Y_train.cols != model.n_outputs())
    throw validation_error("target width mismatch");

  const int n = X_train.rows;
  const bool have_val = X_val.rows > 0;

  TrainResult result;
  std::vector<double> w;
  model.get_params(w);
  SgdUpdater updater(w.size(), cfg);

  std::vector<double> best_w = w;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  int bad_checks = 0;
  std::string stop_reason = "max_steps";

  SeededRng rng(cfg.seed);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad;
  Matrix Xb, Yb;

  int epoch = 1;
  for (; epoch <= cfg.max_epochs; ++epoch) {
    SeededRng order_rng = rng.child("order", epoch);
    SeededRng dropout_rng = rng.child("dropout", epoch);
    order_rng.shuffle(order);

    double sq_err_sum = 0.0;
    std::size_t n_terms = 0;
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int rows = std::min(cfg.batch_size, n - start);
      Xb = Matrix(rows, X_train.cols);
      Yb = Matrix(rows, Y_train.cols);
      for (int r = 0; r < rows; ++r) {
        const int src = order[start + r];
        std::copy(X_train.row(src), X_train.row(src) + X_train.cols,
                  Xb.row(r));
        std::copy(Y_train.row(src), Y_train.row(src) + Y_train.cols,
                  Yb.row(r));
      }
      const double batch_mse = cnn_loss_grad(model, Xb, Yb, &dropout_rng, grad);
      updater.apply(w, grad);
      model.set_params(w);
      sq_err_sum += batch_mse * double(std::size_t(rows) * Yb.cols);
      n_terms += std::size_t(rows) * Yb.cols;
    }

    HistoryRow row;
    row.step = epoch;
    row.train_mse = sq_err_sum / double(n_terms);
    row.train_loss = row.train_mse;
    row.lr = updater.current_lr();
    if (have_val) {
      row.val_mse = mse_of(model.forward(X_val), Y_val);
      result.history.push_back(row);
      if (row.val_mse < best_val) {
        best_val = row.val_mse;
        best_w = w;
        best_epoch = epoch;
        bad_checks = 0;
      } else if (++bad_checks > cfg.patience) {
        stop_reason = "patience";
        break;
      }
    } else {
      result.history.push_back(row);
    }
  }

  result.steps_run = std::min(epoch, cfg.max_epochs);
  result.stop_reason = stop_reason;
  if (have_val) {
    model.set_params(best_w);
    result.best_step = best_epoch;
    result.best_val_mse = best_val;
  } else {
    model.set_params(w);
    result.best_step = result.steps_run;
    result.best_val_mse = std::numeric_limits<double>::quiet_NaN();
  }
  return result;
}

}  // namespace msf::nn
