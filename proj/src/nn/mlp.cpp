#include "msf/nn/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace msf::nn {

const char* l2_mode_name(L2Mode m) {
  return m == L2Mode::sum ? "sum" : "mean";
}

L2Mode l2_mode_from_name(const std::string& name) {
  if (name == "sum") return L2Mode::sum;
  if (name == "mean") return L2Mode::mean;
  throw validation_error("unknown l2 mode: " + name);
}

const char* optimizer_name(Optimizer o) {
  return o == Optimizer::scg ? "scg" : "sgd";
}

Optimizer optimizer_from_name(const std::string& name) {
  if (name == "scg") return Optimizer::scg;
  if (name == "sgd") return Optimizer::sgd;
  throw validation_error("unknown optimizer: " + name);
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0)) throw validation_error("learning_rate must be positive");
  if (momentum < 0 || momentum >= 1)
    throw validation_error("momentum must lie in [0, 1)");
  if (lr_decay < 0) throw validation_error("lr_decay must be non-negative");
  if (batch_size < 1) throw validation_error("batch_size must be positive");
  if (max_epochs < 1) throw validation_error("max_epochs must be positive");
  if (max_iterations < 1)
    throw validation_error("max_iterations must be positive");
  if (patience < 0) throw validation_error("patience must be non-negative");
  if (l2_lambda < 0) throw validation_error("l2_lambda must be non-negative");
  if (!(grad_tol >= 0)) throw validation_error("grad_tol must be non-negative");
  if (!(mse_goal >= 0)) throw validation_error("mse_goal must be non-negative");
  if (!(rbf_sigma > 0)) throw validation_error("rbf_sigma must be positive");
  if (max_centers < 0)
    throw validation_error("max_centers must be non-negative");
}

void write_history_csv(const std::vector<HistoryRow>& history,
                       const std::string& path) {
  std::ostringstream out;
  out << "step,train_loss,train_mse,val_mse,lr\n";
  for (const auto& h : history)
    out << h.step << ',' << fmt9(h.train_loss) << ',' << fmt9(h.train_mse)
        << ',' << fmt9(h.val_mse) << ',' << fmt9(h.lr) << '\n';
  write_text_file(path, out.str());
}

double mse_of(const Matrix& pred, const Matrix& target) {
  if (!same_shape(pred, target))
    throw validation_error("mse_of shape mismatch");
  if (pred.size() == 0) throw validation_error("mse_of on empty matrices");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred.d[i] - target.d[i];
    s += e * e;
  }
  return s / double(pred.size());
}

double l2_penalty(const double* w, std::size_t n, double lambda, L2Mode mode,
                  std::size_t n_weights) {
  if (lambda == 0.0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += w[i] * w[i];
  if (mode == L2Mode::mean && n_weights > 0) return lambda * s / double(n_weights);
  return lambda * s;
}

void init_scaled_uniform(double* w, std::size_t n, int fan_in,
                         SeededRng& rng) {
  const double bound = std::sqrt(1.0 / double(fan_in > 0 ? fan_in : 1));
  for (std::size_t i = 0; i < n; ++i)
    w[i] = rng.uniform_range(-bound, bound);
}

// ---------------------------------------------------------------------------
// MlpModel
// ---------------------------------------------------------------------------

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::tanh_act: return "tanh";
    case Activation::relu_act: return "relu";
    default: return "linear";
  }
}

Activation activation_from_name(const std::string& name) {
  if (name == "tanh") return Activation::tanh_act;
  if (name == "relu") return Activation::relu_act;
  if (name == "linear") return Activation::linear_act;
  throw validation_error("unknown activation: " + name);
}

MlpModel MlpModel::create(std::vector<int> layer_sizes, SeededRng& rng,
                          Activation hidden) {
  if (layer_sizes.size() < 2)
    throw validation_error("MLP needs at least input and output sizes");
  for (int s : layer_sizes)
    if (s < 1) throw validation_error("MLP layer sizes must be positive");
  MlpModel m;
  m.layer_sizes = std::move(layer_sizes);
  m.hidden_activation = hidden;
  for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
    DenseLayer layer;
    layer.W = Matrix(m.layer_sizes[l + 1], m.layer_sizes[l]);
    layer.b.assign(m.layer_sizes[l + 1], 0.0);
    SeededRng lr = rng.child("mlp-init", l);
    init_scaled_uniform(layer.W.d.data(), layer.W.size(), m.layer_sizes[l],
                        lr);
    m.layers.push_back(std::move(layer));
  }
  return m;
}

std::size_t MlpModel::n_params() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.W.size() + l.b.size();
  return n;
}

std::size_t MlpModel::n_weights() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.W.size();
  return n;
}

void MlpModel::get_params(std::vector<double>& out) const {
  out.clear();
  out.reserve(n_params());
  for (const auto& l : layers) {
    out.insert(out.end(), l.W.d.begin(), l.W.d.end());
    out.insert(out.end(), l.b.begin(), l.b.end());
  }
}

void MlpModel::set_params(const std::vector<double>& in) {
  if (in.size() != n_params())
    throw validation_error("parameter vector length mismatch");
  std::size_t k = 0;
  for (auto& l : layers) {
    std::copy(in.begin() + k, in.begin() + k + l.W.size(), l.W.d.begin());
    k += l.W.size();
    std::copy(in.begin() + k, in.begin() + k + l.b.size(), l.b.begin());
    k += l.b.size();
  }
}

double MlpModel::sum_sq_weights() const {
  double s = 0.0;
  for (const auto& l : layers)
    for (double w : l.W.d) s += w * w;
  return s;
}

Matrix MlpModel::forward(const Matrix& X) const {
  Cache c;
  return forward(X, c);
}

Matrix MlpModel::forward(const Matrix& X, Cache& cache) const {
  if (X.cols != n_inputs())
    throw validation_error("input width " + std::to_string(X.cols) +
                           " does not match MLP input size " +
                           std::to_string(n_inputs()));
  cache.act.clear();
  cache.act.reserve(layers.size() + 1);
  cache.act.push_back(X);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Matrix z = matmul_nt(cache.act.back(), layers[l].W);
    add_row_vector(z, layers[l].b);
    const bool last = (l + 1 == layers.size());
    if (!last) {
      if (hidden_activation == Activation::tanh_act)
        tanh_inplace(z);
      else if (hidden_activation == Activation::relu_act)
        relu_inplace(z);
    }
    cache.act.push_back(std::move(z));
  }
  return cache.act.back();
}

MlpModel::Grads MlpModel::make_grads() const {
  Grads g;
  for (const auto& l : layers) {
    g.dW.emplace_back(l.W.rows, l.W.cols);
    g.db.emplace_back(l.b.size(), 0.0);
  }
  return g;
}

void MlpModel::Grads::zero() {
  for (auto& m : dW) m.zero();
  for (auto& v : db) std::fill(v.begin(), v.end(), 0.0);
}

void MlpModel::backward(const Cache& cache, const Matrix& dY,
                        Grads& g) const {
  if (cache.act.size() != layers.size() + 1)
    throw validation_error("backward called with stale cache");
  Matrix delta = dY;
  for (int l = static_cast<int>(layers.size()) - 1; l >= 0; --l) {
    if (l != static_cast<int>(layers.size()) - 1) {
      // delta currently holds dLoss/dAct of this hidden layer.
      if (hidden_activation == Activation::tanh_act)
        tanh_backward(cache.act[l + 1], delta);
      else if (hidden_activation == Activation::relu_act)
        relu_backward(cache.act[l + 1], delta);
    }
    // dW = delta^T * act_in ; db = column sums of delta.
    Matrix dW = matmul_tn(delta, cache.act[l]);
    g.dW[l] = std::move(dW);
    g.db[l] = column_sums(delta);
    if (l > 0) delta = matmul_nn(delta, layers[l].W);
  }
}

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

double mlp_loss(const MlpModel& m, const Matrix& X, const Matrix& Y,
                double lambda, L2Mode mode) {
  const Matrix pred = m.forward(X);
  double loss = mse_of(pred, Y);
  if (lambda > 0.0) {
    for (const auto& l : m.layers)
      loss += l2_penalty(l.W.d.data(), l.W.size(), lambda, mode,
                         m.n_weights());
  }
  return loss;
}

double mlp_loss_grad(MlpModel& m, const Matrix& X, const Matrix& Y,
                     double lambda, L2Mode mode, std::vector<double>& grad) {
  MlpModel::Cache cache;
  const Matrix pred = m.forward(X, cache);
  double loss = mse_of(pred, Y);

  Matrix dY(pred.rows, pred.cols);
  const double scale = 2.0 / double(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i)
    dY.d[i] = scale * (pred.d[i] - Y.d[i]);

  MlpModel::Grads g = m.make_grads();
  m.backward(cache, dY, g);

  const double reg_scale =
      mode == L2Mode::mean ? 2.0 * lambda / double(m.n_weights())
                           : 2.0 * lambda;
  grad.clear();
  grad.reserve(m.n_params());
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const auto& W = m.layers[l].W;
    if (lambda > 0.0) {
      double pen = 0.0;
      for (double w : W.d) pen += w * w;
      loss += (mode == L2Mode::mean) ? lambda * pen / double(m.n_weights())
                                     : lambda * pen;
      for (std::size_t i = 0; i < W.size(); ++i)
        grad.push_back(g.dW[l].d[i] + reg_scale * W.d[i]);
    } else {
      grad.insert(grad.end(), g.dW[l].d.begin(), g.dW[l].d.end());
    }
    grad.insert(grad.end(), g.db[l].begin(), g.db[l].end());
  }
  return loss;
}

}  // namespace msf::nn
