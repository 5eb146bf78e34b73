#include "msf/nn/rbf.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace msf::nn {

namespace {

double gauss_basis(const double* x, const double* c, int dim, double sigma) {
  double d2 = 0.0;
  for (int k = 0; k < dim; ++k) {
    const double t = x[k] - c[k];
    d2 += t * t;
  }
  return std::exp(-d2 / (2.0 * sigma * sigma));
}

// Ragged lower-triangular store: row i holds entries [i][0..i].
using Triangular = std::vector<std::vector<double>>;

// Extends the factor by one row; returns false on a non-positive pivot.
bool cholesky_extend(const Triangular& A, double ridge, Triangular& L) {
  const std::size_t i = L.size();
  std::vector<double> row(i + 1, 0.0);
  for (std::size_t j = 0; j < i; ++j) {
    double s = A[i][j];
    for (std::size_t t = 0; t < j; ++t) s -= row[t] * L[j][t];
    row[j] = s / L[j][j];
  }
  double d = A[i][i] + ridge;
  for (std::size_t t = 0; t < i; ++t) d -= row[t] * row[t];
  if (!(d > 0.0)) return false;
  row[i] = std::sqrt(d);
  L.push_back(std::move(row));
  return true;
}

bool cholesky_full(const Triangular& A, double ridge, Triangular& L) {
  L.clear();
  L.reserve(A.size());
  for (std::size_t i = 0; i < A.size(); ++i)
    if (!cholesky_extend(A, ridge, L)) return false;
  return true;
}

// Solves (L L^T) w = rhs in place of w.
void cholesky_solve(const Triangular& L, const std::vector<double>& rhs,
                    std::vector<double>& w) {
  const std::size_t m = L.size();
  std::vector<double> z(m);
  for (std::size_t i = 0; i < m; ++i) {
    double s = rhs[i];
    for (std::size_t j = 0; j < i; ++j) s -= L[i][j] * z[j];
    z[i] = s / L[i][i];
  }
  w.assign(m, 0.0);
  for (std::size_t ii = m; ii-- > 0;) {
    double s = z[ii];
    for (std::size_t j = ii + 1; j < m; ++j) s -= L[j][ii] * w[j];
    w[ii] = s / L[ii][ii];
  }
}

}  // namespace

Matrix RbfModel::forward(const Matrix& X) const {
  if (X.cols != n_in)
    throw validation_error("input width " + std::to_string(X.cols) +
                           " does not match network input size " +
                           std::to_string(n_in));
  Matrix out(X.rows, n_out);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < X.rows; ++i) {
    double* o = out.row(i);
    for (int j = 0; j < n_out; ++j) o[j] = bias[j];
    for (int c = 0; c < centers.rows; ++c) {
      const double g = gauss_basis(X.row(i), centers.row(c), n_in, sigma);
      const double* w = weights.row(c);
      for (int j = 0; j < n_out; ++j) o[j] += g * w[j];
    }
  }
  return out;
}

RbfModel train_rbf(const Matrix& X, const Matrix& Y, const TrainConfig& cfg,
                   RbfTrainReport* report) {
  cfg.validate();
  if (X.rows != Y.rows)
    throw validation_error("features/targets row mismatch");
  if (X.rows == 0) throw validation_error("empty training set");

  const int n = X.rows, dim = X.cols, n_out = Y.cols;
  const int cap = cfg.max_centers > 0 ? std::min(cfg.max_centers, n) : n;
  const double sigma = cfg.rbf_sigma;

  // Column 0 is the all-ones bias column; center columns follow.
  std::vector<std::vector<double>> cols;
  std::vector<std::vector<double>> gty;  // per column: dot with each target
  Triangular A;  // G^T G without the ridge
  Triangular L;
  double ridge = 1e-12;
  int ridge_bumps = 0;

  std::vector<int> center_rows;
  std::vector<char> used(n, 0);

  auto add_column = [&](std::vector<double> g) {
    const std::size_t m = cols.size();
    std::vector<double> arow(m + 1);
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      const double* other = cols[j].data();
      for (int i = 0; i < n; ++i) s += g[i] * other[i];
      arow[j] = s;
    }
    double diag = 0.0;
    for (int i = 0; i < n; ++i) diag += g[i] * g[i];
    arow[m] = diag;
    A.push_back(std::move(arow));

    std::vector<double> dots(n_out, 0.0);
    for (int i = 0; i < n; ++i) {
      const double* y = Y.row(i);
      for (int j = 0; j < n_out; ++j) dots[j] += g[i] * y[j];
    }
    gty.push_back(std::move(dots));
    cols.push_back(std::move(g));

    if (!cholesky_extend(A, ridge, L)) {
      // Refactor from scratch with progressively heavier ridge.
      do {
        ridge *= 1000.0;
        ++ridge_bumps;
        std::fprintf(stderr,
                     "warning: normal equations near singular, ridge -> %g\n",
                     ridge);
        if (!(ridge < 1e30))
          throw numeric_error("normal equations unsalvageably singular");
      } while (!cholesky_full(A, ridge, L));
    }
  };

  add_column(std::vector<double>(n, 1.0));

  // Per-output solution vectors over the current columns.
  std::vector<std::vector<double>> w(n_out);
  Matrix residual(n, n_out);
  std::vector<double> res_norm(n);
  double mse = 0.0;

  auto resolve = [&]() {
    std::vector<double> rhs(cols.size());
    for (int j = 0; j < n_out; ++j) {
      for (std::size_t c = 0; c < cols.size(); ++c) rhs[c] = gty[c][j];
      cholesky_solve(L, rhs, w[j]);
    }
    const int m = static_cast<int>(cols.size());
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      double nrm = 0.0;
      for (int j = 0; j < n_out; ++j) {
        double pred = 0.0;
        for (int c = 0; c < m; ++c) pred += w[j][c] * cols[c][i];
        const double r = Y.at(i, j) - pred;
        residual.at(i, j) = r;
        nrm += r * r;
      }
      res_norm[i] = nrm;
    }
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += res_norm[i];
    mse = s / (double(n) * n_out);
  };

  resolve();
  RbfTrainReport rep;
  rep.mse_history.push_back(mse);

  std::string stop = "exhausted";
  while (true) {
    if (mse <= cfg.mse_goal) {
      stop = "goal";
      break;
    }
    if (static_cast<int>(center_rows.size()) >= cap) {
      stop = "max_centers";
      break;
    }
    // Largest residual among unused inputs; ties keep the lowest index.
    int pick = -1;
    double best = -1.0;
    for (int i = 0; i < n; ++i)
      if (!used[i] && res_norm[i] > best) {
        best = res_norm[i];
        pick = i;
      }
    if (pick < 0) break;
    used[pick] = 1;
    center_rows.push_back(pick);

    std::vector<double> g(n);
    for (int i = 0; i < n; ++i)
      g[i] = gauss_basis(X.row(i), X.row(pick), dim, sigma);
    add_column(std::move(g));
    resolve();
    rep.mse_history.push_back(mse);
  }

  RbfModel model;
  model.n_in = dim;
  model.n_out = n_out;
  model.sigma = sigma;
  const int m = static_cast<int>(center_rows.size());
  model.centers = Matrix(m, dim);
  model.weights = Matrix(m, n_out);
  model.bias.assign(n_out, 0.0);
  for (int c = 0; c < m; ++c) {
    std::copy(X.row(center_rows[c]), X.row(center_rows[c]) + dim,
              model.centers.row(c));
    for (int j = 0; j < n_out; ++j) model.weights.at(c, j) = w[j][c + 1];
  }
  for (int j = 0; j < n_out; ++j) model.bias[j] = w[j][0];

  rep.final_mse = mse;
  rep.n_centers = m;
  rep.ridge_bumps = ridge_bumps;
  rep.stop_reason = stop;
  if (report) *report = std::move(rep);
  return model;
}

double rbf_output_loss_grad(const RbfModel& m, const Matrix& X,
                            const Matrix& Y, std::vector<double>& grad) {
  if (Y.rows != X.rows || Y.cols != m.n_out)
    throw validation_error("target shape mismatch");
  // Basis activations, then the usual linear-layer gradients.
  Matrix phi(X.rows, m.centers.rows);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < X.rows; ++i)
    for (int c = 0; c < m.centers.rows; ++c)
      phi.at(i, c) = gauss_basis(X.row(i), m.centers.row(c), m.n_in, m.sigma);

  Matrix pred(X.rows, m.n_out);
  for (int i = 0; i < X.rows; ++i) {
    double* o = pred.row(i);
    for (int j = 0; j < m.n_out; ++j) o[j] = m.bias[j];
    for (int c = 0; c < m.centers.rows; ++c)
      for (int j = 0; j < m.n_out; ++j)
        o[j] += phi.at(i, c) * m.weights.at(c, j);
  }
  const double mse = mse_of(pred, Y);

  Matrix dY(pred.rows, pred.cols);
  const double scale = 2.0 / double(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i)
    dY.d[i] = scale * (pred.d[i] - Y.d[i]);

  // dW = phi^T dY (n_centers x n_out), db = column sums.
  Matrix dW = matmul_tn(dY, phi);  // n_out x n_centers
  grad.assign(std::size_t(m.centers.rows) * m.n_out + m.n_out, 0.0);
  for (int c = 0; c < m.centers.rows; ++c)
    for (int j = 0; j < m.n_out; ++j)
      grad[std::size_t(c) * m.n_out + j] = dW.at(j, c);
  const std::vector<double> db = column_sums(dY);
  std::copy(db.begin(), db.end(),
            grad.begin() + std::size_t(m.centers.rows) * m.n_out);
  return mse;
}

}  // namespace msf::nn
