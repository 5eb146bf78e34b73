#include "msf/nn/scg.hpp"

#include <cmath>
#include <limits>

namespace msf::nn {

ScgResult scg_minimize(Objective& obj, std::vector<double> w0,
                       const ScgOptions& opt) {
  const std::size_t n = obj.dimension();
  if (w0.size() != n)
    throw validation_error("initial point has wrong dimension");
  if (opt.max_iterations < 1)
    throw validation_error("max_iterations must be positive");

  ScgResult res;
  res.w = std::move(w0);

  std::vector<double> grad(n), grad_probe(n), grad_trial(n), r(n), p(n),
      w_try(n);

  double f = obj.value_grad(res.w, grad);
  if (!std::isfinite(f))
    throw numeric_error("objective is not finite at the initial point");
  for (std::size_t i = 0; i < n; ++i) r[i] = -grad[i];
  p = r;

  res.grad_norm = norm2(r);
  res.loss = f;
  if (res.grad_norm <= opt.grad_tol) {
    res.stop_reason = "grad_tol";
    return res;
  }

  double lambda = opt.lambda_init;
  double lambda_bar = 0.0;
  bool success = true;
  int successes = 0;
  // delta carries the damping already folded in via lambda_bar, so on failed
  // iterations only the lambda increment is re-applied.
  double delta = 0.0, mu = 0.0, p_norm2 = 0.0;

  for (int k = 1; k <= opt.max_iterations; ++k) {
    res.iterations = k;

    if (success) {
      p_norm2 = dot(p, p);
      mu = dot(p, r);
      if (mu <= 0.0) {
        // Conjugacy has degraded; fall back to the steepest direction.
        p = r;
        p_norm2 = dot(p, p);
        mu = p_norm2;
        successes = 0;
      }
      const double sigma = opt.sigma0 / std::sqrt(p_norm2);
      for (std::size_t i = 0; i < n; ++i) w_try[i] = res.w[i] + sigma * p[i];
      obj.value_grad(w_try, grad_probe);
      delta = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        delta += p[i] * (grad_probe[i] - grad[i]);
      delta /= sigma;
    }

    delta += (lambda - lambda_bar) * p_norm2;
    if (delta <= 0.0) {
      lambda_bar = 2.0 * (lambda - delta / p_norm2);
      delta = -delta + lambda * p_norm2;
      lambda = lambda_bar;
    }

    const double alpha = mu / delta;
    for (std::size_t i = 0; i < n; ++i)
      w_try[i] = res.w[i] + alpha * p[i];
    const double f_try = obj.value_grad(w_try, grad_trial);

    double comparison = std::isfinite(f_try)
                            ? 2.0 * delta * (f - f_try) / (mu * mu)
                            : -1.0;

    if (comparison >= 0.0) {
      res.w.swap(w_try);
      f = f_try;
      grad.swap(grad_trial);
      lambda_bar = 0.0;
      success = true;
      ++successes;

      double r_dot_old = 0.0;  // r_new . r_old
      double r_norm2_new = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double rn = -grad[i];
        r_dot_old += rn * r[i];
        r_norm2_new += rn * rn;
        r[i] = rn;
      }

      if (successes % static_cast<int>(n) == 0) {
        p = r;  // periodic restart keeps directions well conditioned
      } else {
        const double beta = (r_norm2_new - r_dot_old) / mu;
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
      }
      if (comparison >= 0.75) lambda *= 0.25;

      res.grad_norm = std::sqrt(r_norm2_new);
      res.loss = f;
      if (opt.on_step && !opt.on_step(k, res.w, f)) {
        res.stop_reason = "callback";
        return res;
      }
      if (res.grad_norm <= opt.grad_tol) {
        res.stop_reason = "grad_tol";
        return res;
      }
    } else {
      lambda_bar = lambda;
      success = false;
    }

    if (comparison < 0.25) lambda += delta * (1.0 - comparison) / p_norm2;
    if (!(lambda < 1e100)) {
      // Damping has exploded: steps are numerically zero.
      res.stop_reason = "no_progress";
      return res;
    }
  }

  res.stop_reason = "max_steps";
  return res;
}

namespace {

class MlpObjective final : public Objective {
 public:
  MlpObjective(MlpModel& m, const Matrix& X, const Matrix& Y, double lambda,
               L2Mode mode)
      : m_(m), X_(X), Y_(Y), lambda_(lambda), mode_(mode) {}

  std::size_t dimension() const override { return m_.n_params(); }

  double value(const std::vector<double>& w) override {
    m_.set_params(w);
    return mlp_loss(m_, X_, Y_, lambda_, mode_);
  }

  double value_grad(const std::vector<double>& w,
                    std::vector<double>& grad) override {
    m_.set_params(w);
    return mlp_loss_grad(m_, X_, Y_, lambda_, mode_, grad);
  }

 private:
  MlpModel& m_;
  const Matrix& X_;
  const Matrix& Y_;
  double lambda_;
  L2Mode mode_;
};

double penalty_of(const MlpModel& m, double lambda, L2Mode mode) {
  if (lambda <= 0.0) return 0.0;
  double pen = 0.0;
  for (const auto& l : m.layers)
    pen += l2_penalty(l.W.d.data(), l.W.size(), lambda, mode, m.n_weights());
  return pen;
}

}  // namespace

TrainResult train_scg(MlpModel& model, const Matrix& X_train,
                      const Matrix& Y_train, const Matrix& X_val,
                      const Matrix& Y_val, const TrainConfig& cfg) {
  cfg.validate();
  if (X_train.rows != Y_train.rows)
    throw validation_error("training features/targets row mismatch");
  if (X_val.rows != Y_val.rows)
    throw validation_error("validation features/targets row mismatch");
  if (X_train.rows == 0) throw validation_error("empty training set");

  MlpObjective obj(model, X_train, Y_train, cfg.l2_lambda, cfg.l2_mode);

  TrainResult result;
  std::vector<double> w0;
  model.get_params(w0);

  const bool have_val = X_val.rows > 0;
  std::vector<double> best_w = w0;
  double best_val = std::numeric_limits<double>::infinity();
  int best_step = 0;
  int bad_checks = 0;

  ScgOptions opt;
  opt.max_iterations = cfg.max_iterations;
  opt.grad_tol = cfg.grad_tol;
  opt.on_step = [&](int iter, const std::vector<double>& w, double loss) {
    model.set_params(w);
    HistoryRow row;
    row.step = iter;
    row.train_loss = loss;
    row.train_mse = loss - penalty_of(model, cfg.l2_lambda, cfg.l2_mode);
    row.lr = 0.0;
    if (have_val) {
      row.val_mse = mse_of(model.forward(X_val), Y_val);
      result.history.push_back(row);
      if (row.val_mse < best_val) {
        best_val = row.val_mse;
        best_w = w;
        best_step = iter;
        bad_checks = 0;
      } else if (++bad_checks > cfg.patience) {
        return false;
      }
    } else {
      result.history.push_back(row);
    }
    return true;
  };

  ScgResult sr = scg_minimize(obj, w0, opt);

  result.steps_run = sr.iterations;
  result.final_grad_norm = sr.grad_norm;
  result.stop_reason =
      sr.stop_reason == "callback" ? "patience" : sr.stop_reason;
  if (have_val) {
    model.set_params(best_w);
    result.best_step = best_step;
    result.best_val_mse = best_val;
  } else {
    model.set_params(sr.w);
    result.best_step = sr.iterations;
    result.best_val_mse = std::numeric_limits<double>::quiet_NaN();
  }
  return result;
}

}  // namespace msf::nn
