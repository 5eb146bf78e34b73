#include "msf/nn/cnn.hpp"

#include <cmath>
#include <cstring>
#include <limits>

namespace msf::nn {

namespace {

struct StageDims {
  int h = 0, w = 0, c = 0;
  int pixels(int batch) const { return batch * h * w; }
  int flat() const { return h * w * c; }
};

// Patch gather. Input is pixel-major rows of C channels; each output row is
// one k x k patch laid out [dh][dw][c], so every dh contributes one
// contiguous k*C run and the gather is k block copies per patch.
void im2col(const Matrix& in, int batch, StageDims d, int k, Matrix& cols) {
  const int oh = d.h - k + 1, ow = d.w - k + 1;
  const int run = k * d.c;
  cols = Matrix(batch * oh * ow, k * run);
#pragma omp parallel for schedule(static)
  for (int b = 0; b < batch; ++b) {
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        double* dst = cols.row(((b * oh) + y) * ow + x);
        for (int dh = 0; dh < k; ++dh) {
          const double* src = in.row(((b * d.h) + y + dh) * d.w + x);
          std::memcpy(dst + dh * run, src, sizeof(double) * run);
        }
      }
  }
}

// Reverse of im2col: scatter-add patch gradients back onto the input grid.
// Overlapping patches hit the same pixels, so parallelism stays per sample.
void col2im(const Matrix& cols, int batch, StageDims d, int k, Matrix& din) {
  const int oh = d.h - k + 1, ow = d.w - k + 1;
  const int run = k * d.c;
  din = Matrix(batch * d.h * d.w, d.c);
#pragma omp parallel for schedule(static)
  for (int b = 0; b < batch; ++b) {
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        const double* src = cols.row(((b * oh) + y) * ow + x);
        for (int dh = 0; dh < k; ++dh) {
          double* dst = din.row(((b * d.h) + y + dh) * d.w + x);
          for (int t = 0; t < run; ++t) dst[t] += src[dh * run + t];
        }
      }
  }
}

// 2x2-style max pool with stride 1. Ties keep the first window position in
// scan order. argmax holds flat indices into in.d for the backward scatter.
void maxpool(const Matrix& in, int batch, StageDims d, int p, Matrix& out,
             std::vector<int>& argmax) {
  const int oh = d.h - p + 1, ow = d.w - p + 1;
  out = Matrix(batch * oh * ow, d.c);
  argmax.assign(out.size(), 0);
#pragma omp parallel for schedule(static)
  for (int b = 0; b < batch; ++b) {
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        const int orow = ((b * oh) + y) * ow + x;
        for (int c = 0; c < d.c; ++c) {
          double best = -std::numeric_limits<double>::infinity();
          int best_idx = 0;
          for (int dh = 0; dh < p; ++dh)
            for (int dw = 0; dw < p; ++dw) {
              const int irow = ((b * d.h) + y + dh) * d.w + x + dw;
              const int idx = irow * d.c + c;
              if (in.d[idx] > best) {
                best = in.d[idx];
                best_idx = idx;
              }
            }
          out.d[std::size_t(orow) * d.c + c] = best;
          argmax[std::size_t(orow) * d.c + c] = best_idx;
        }
      }
  }
}

void pool_backward(const Matrix& dout, const std::vector<int>& argmax,
                   int batch, int out_rows_per_sample, Matrix& din) {
#pragma omp parallel for schedule(static)
  for (int b = 0; b < batch; ++b) {
    const std::size_t lo = std::size_t(b) * out_rows_per_sample * dout.cols;
    const std::size_t hi = lo + std::size_t(out_rows_per_sample) * dout.cols;
    for (std::size_t e = lo; e < hi; ++e) din.d[argmax[e]] += dout.d[e];
  }
}

// Inverted dropout: kept entries scale by 1/(1-p) so inference needs no
// correction. Mask draws are strictly sequential in element order.
void apply_dropout(Matrix& stage, double p, SeededRng& rng, Matrix& mask) {
  const double scale = 1.0 / (1.0 - p);
  mask = Matrix(stage.rows, stage.cols);
  for (std::size_t i = 0; i < stage.size(); ++i) {
    mask.d[i] = rng.uniform_double() < p ? 0.0 : scale;
    stage.d[i] *= mask.d[i];
  }
}

}  // namespace

void CnnConfig::validate() const {
  if (input_h < 1 || input_w < 1 || input_ch < 1)
    throw validation_error("input dimensions must be positive");
  if (conv_channels.empty())
    throw validation_error("at least one conv stage is required");
  for (int c : conv_channels)
    if (c < 1) throw validation_error("conv channel counts must be positive");
  if (kernel < 1 || pool < 1)
    throw validation_error("kernel and pool sizes must be positive");
  if (fc_units < 1 || n_outputs < 1)
    throw validation_error("dense layer sizes must be positive");
  if (dropout_conv < 0 || dropout_conv >= 1 || dropout_fc < 0 ||
      dropout_fc >= 1)
    throw validation_error("dropout rates must lie in [0, 1)");
  // Walk the stage chain; every conv and pool must leave room.
  int h = input_h, w = input_w;
  for (std::size_t l = 0; l < conv_channels.size(); ++l) {
    h -= kernel - 1;
    w -= kernel - 1;
    if (h < 1 || w < 1)
      throw validation_error("conv stage " + std::to_string(l) +
                             " underflows the input grid");
    h -= pool - 1;
    w -= pool - 1;
    if (h < 1 || w < 1)
      throw validation_error("pool stage " + std::to_string(l) +
                             " underflows the input grid");
  }
}

CnnModel CnnModel::create(const CnnConfig& cfg, SeededRng& rng) {
  cfg.validate();
  CnnModel m;
  m.cfg = cfg;
  int in_ch = cfg.input_ch;
  for (std::size_t l = 0; l < cfg.conv_channels.size(); ++l) {
    ConvLayer conv;
    conv.in_ch = in_ch;
    conv.out_ch = cfg.conv_channels[l];
    conv.kernel = cfg.kernel;
    const int fan_in = in_ch * cfg.kernel * cfg.kernel;
    conv.W = Matrix(conv.out_ch, fan_in);
    conv.b.assign(conv.out_ch, 0.0);
    SeededRng lr = rng.child("cnn-init", l);
    init_scaled_uniform(conv.W.d.data(), conv.W.size(), fan_in, lr);
    m.convs.push_back(std::move(conv));
    in_ch = cfg.conv_channels[l];
  }
  const std::vector<int> sizes = m.activation_sizes();
  const int flatten = sizes[sizes.size() - 3];
  m.fc1.W = Matrix(cfg.fc_units, flatten);
  m.fc1.b.assign(cfg.fc_units, 0.0);
  SeededRng fr = rng.child("cnn-init", cfg.conv_channels.size());
  init_scaled_uniform(m.fc1.W.d.data(), m.fc1.W.size(), flatten, fr);
  m.out.W = Matrix(cfg.n_outputs, cfg.fc_units);
  m.out.b.assign(cfg.n_outputs, 0.0);
  SeededRng orr = rng.child("cnn-init", cfg.conv_channels.size() + 1);
  init_scaled_uniform(m.out.W.d.data(), m.out.W.size(), cfg.fc_units, orr);
  return m;
}

std::vector<int> CnnModel::activation_sizes() const {
  std::vector<int> sizes;
  int h = cfg.input_h, w = cfg.input_w;
  for (int c : cfg.conv_channels) {
    h -= cfg.kernel - 1;
    w -= cfg.kernel - 1;
    sizes.push_back(c * h * w);
    h -= cfg.pool - 1;
    w -= cfg.pool - 1;
    sizes.push_back(c * h * w);
  }
  sizes.push_back(sizes.back());  // flatten
  sizes.push_back(cfg.fc_units);
  sizes.push_back(cfg.n_outputs);
  return sizes;
}

std::size_t CnnModel::n_params() const {
  std::size_t n = 0;
  for (const auto& c : convs) n += c.W.size() + c.b.size();
  n += fc1.W.size() + fc1.b.size();
  n += out.W.size() + out.b.size();
  return n;
}

std::size_t CnnModel::n_weights() const {
  std::size_t n = 0;
  for (const auto& c : convs) n += c.W.size();
  return n + fc1.W.size() + out.W.size();
}

void CnnModel::get_params(std::vector<double>& o) const {
  o.clear();
  o.reserve(n_params());
  for (const auto& c : convs) {
    o.insert(o.end(), c.W.d.begin(), c.W.d.end());
    o.insert(o.end(), c.b.begin(), c.b.end());
  }
  o.insert(o.end(), fc1.W.d.begin(), fc1.W.d.end());
  o.insert(o.end(), fc1.b.begin(), fc1.b.end());
  o.insert(o.end(), out.W.d.begin(), out.W.d.end());
  o.insert(o.end(), out.b.begin(), out.b.end());
}

void CnnModel::set_params(const std::vector<double>& in) {
  if (in.size() != n_params())
    throw validation_error("parameter vector length mismatch");
  std::size_t k = 0;
  auto take = [&](double* dst, std::size_t n) {
    std::copy(in.begin() + k, in.begin() + k + n, dst);
    k += n;
  };
  for (auto& c : convs) {
    take(c.W.d.data(), c.W.size());
    take(c.b.data(), c.b.size());
  }
  take(fc1.W.d.data(), fc1.W.size());
  take(fc1.b.data(), fc1.b.size());
  take(out.W.d.data(), out.W.size());
  take(out.b.data(), out.b.size());
}

Matrix CnnModel::forward(const Matrix& X, Cache& cache,
                         SeededRng* dropout_rng) const {
  if (X.cols != n_inputs())
    throw validation_error("input width " + std::to_string(X.cols) +
                           " does not match network input size " +
                           std::to_string(n_inputs()));
  const int B = X.rows;
  const int L = static_cast<int>(convs.size());
  cache.batch = B;
  cache.cols.assign(L, Matrix());
  cache.pool_in.assign(L, Matrix());
  cache.pool_out.assign(L, Matrix());
  cache.pool_argmax.assign(L, {});
  cache.conv_mask = Matrix();
  cache.fc_mask = Matrix();

  // Input rows are flattened [h][w][c]; reinterpret as pixel-major stage.
  StageDims d{cfg.input_h, cfg.input_w, cfg.input_ch};
  Matrix stage0(B * d.h * d.w, d.c);
  std::copy(X.d.begin(), X.d.end(), stage0.d.begin());

  const Matrix* cur = &stage0;
  for (int l = 0; l < L; ++l) {
    im2col(*cur, B, d, cfg.kernel, cache.cols[l]);
    Matrix act = matmul_nt(cache.cols[l], convs[l].W);
    add_row_vector(act, convs[l].b);
    relu_inplace(act);
    if (l == L - 1 && dropout_rng && cfg.dropout_conv > 0)
      apply_dropout(act, cfg.dropout_conv, *dropout_rng, cache.conv_mask);
    cache.pool_in[l] = std::move(act);
    d.h -= cfg.kernel - 1;
    d.w -= cfg.kernel - 1;
    d.c = convs[l].out_ch;
    maxpool(cache.pool_in[l], B, d, cfg.pool, cache.pool_out[l],
            cache.pool_argmax[l]);
    d.h -= cfg.pool - 1;
    d.w -= cfg.pool - 1;
    cur = &cache.pool_out[l];
  }

  // Pixel-major channels-last storage makes the flatten a straight copy.
  cache.flat = Matrix(B, d.flat());
  std::copy(cur->d.begin(), cur->d.end(), cache.flat.d.begin());

  Matrix h = matmul_nt(cache.flat, fc1.W);
  add_row_vector(h, fc1.b);
  relu_inplace(h);
  if (dropout_rng && cfg.dropout_fc > 0)
    apply_dropout(h, cfg.dropout_fc, *dropout_rng, cache.fc_mask);
  cache.fc_act = std::move(h);

  cache.output = matmul_nt(cache.fc_act, out.W);
  add_row_vector(cache.output, out.b);
  return cache.output;
}

Matrix CnnModel::forward(const Matrix& X) const {
  // Chunked inference keeps the patch matrices small on large batches.
  const int kChunk = 256;
  if (X.rows <= kChunk) {
    Cache c;
    return forward(X, c, nullptr);
  }
  Matrix out_all(X.rows, n_outputs());
  for (int start = 0; start < X.rows; start += kChunk) {
    const int rows = std::min(kChunk, X.rows - start);
    Matrix slice(rows, X.cols);
    std::copy(X.row(start), X.row(start) + std::size_t(rows) * X.cols,
              slice.d.begin());
    Cache c;
    const Matrix part = forward(slice, c, nullptr);
    std::copy(part.d.begin(), part.d.end(), out_all.row(start));
  }
  return out_all;
}

void CnnModel::backward(const Cache& cache, const Matrix& dY,
                        std::vector<double>& grad) const {
  const int B = cache.batch;
  const int L = static_cast<int>(convs.size());
  if (dY.rows != B || dY.cols != cfg.n_outputs)
    throw validation_error("output gradient shape mismatch");

  grad.assign(n_params(), 0.0);
  // Gradient segments follow the parameter order exactly.
  std::vector<double*> seg;
  {
    std::size_t k = 0;
    for (const auto& c : convs) {
      seg.push_back(grad.data() + k);
      k += c.W.size();
      seg.push_back(grad.data() + k);
      k += c.b.size();
    }
    seg.push_back(grad.data() + k);
    k += fc1.W.size();
    seg.push_back(grad.data() + k);
    k += fc1.b.size();
    seg.push_back(grad.data() + k);
    k += out.W.size();
    seg.push_back(grad.data() + k);
  }
  auto store = [](double* dst, const Matrix& m) {
    std::copy(m.d.begin(), m.d.end(), dst);
  };
  auto store_vec = [](double* dst, const std::vector<double>& v) {
    std::copy(v.begin(), v.end(), dst);
  };

  // Dense head.
  store(seg[2 * L + 2], matmul_tn(dY, cache.fc_act));
  store_vec(seg[2 * L + 3], column_sums(dY));
  Matrix dh = matmul_nn(dY, out.W);
  if (cache.fc_mask.size() > 0)
    for (std::size_t i = 0; i < dh.size(); ++i) dh.d[i] *= cache.fc_mask.d[i];
  relu_backward(cache.fc_act, dh);
  store(seg[2 * L], matmul_tn(dh, cache.flat));
  store_vec(seg[2 * L + 1], column_sums(dh));
  Matrix dflat = matmul_nn(dh, fc1.W);

  // Reshape the flatten gradient back onto the last pooled stage.
  Matrix dstage(cache.pool_out[L - 1].rows, cache.pool_out[L - 1].cols);
  std::copy(dflat.d.begin(), dflat.d.end(), dstage.d.begin());

  for (int l = L - 1; l >= 0; --l) {
    Matrix dpin(cache.pool_in[l].rows, cache.pool_in[l].cols);
    pool_backward(dstage, cache.pool_argmax[l], B,
                  cache.pool_out[l].rows / B, dpin);
    if (l == L - 1 && cache.conv_mask.size() > 0)
      for (std::size_t i = 0; i < dpin.size(); ++i)
        dpin.d[i] *= cache.conv_mask.d[i];
    relu_backward(cache.pool_in[l], dpin);
    store(seg[2 * l], matmul_tn(dpin, cache.cols[l]));
    store_vec(seg[2 * l + 1], column_sums(dpin));
    if (l > 0) {
      Matrix dcols = matmul_nn(dpin, convs[l].W);
      // Recover the stage dims feeding conv l.
      StageDims d{cfg.input_h, cfg.input_w, cfg.input_ch};
      for (int j = 0; j < l; ++j) {
        d.h -= cfg.kernel + cfg.pool - 2;
        d.w -= cfg.kernel + cfg.pool - 2;
        d.c = convs[j].out_ch;
      }
      col2im(dcols, B, d, cfg.kernel, dstage);
    }
  }
}

double cnn_loss_grad(const CnnModel& m, const Matrix& X, const Matrix& Y,
                     SeededRng* dropout_rng, std::vector<double>& grad) {
  if (Y.rows != X.rows || Y.cols != m.n_outputs())
    throw validation_error("target shape mismatch");
  CnnModel::Cache cache;
  const Matrix pred = m.forward(X, cache, dropout_rng);
  const double mse = mse_of(pred, Y);
  Matrix dY(pred.rows, pred.cols);
  const double scale = 2.0 / double(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i)
    dY.d[i] = scale * (pred.d[i] - Y.d[i]);
  m.backward(cache, dY, grad);
  return mse;
}

}  // namespace msf::nn
