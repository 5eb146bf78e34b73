#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "msf/nn/rbf.hpp"
#include "test_support.hpp"

using namespace msf;
using namespace msf::nn;

namespace {

// Distinct smooth 2-D -> 2-D regression sample.
void make_data(int n, std::uint64_t seed, Matrix& X, Matrix& Y) {
  X = Matrix(n, 2);
  Y = Matrix(n, 2);
  SeededRng rng(seed);
  for (int i = 0; i < n; ++i) {
    X.at(i, 0) = rng.uniform_range(-1.0, 1.0);
    X.at(i, 1) = rng.uniform_range(-1.0, 1.0);
    Y.at(i, 0) = std::sin(3.0 * X.at(i, 0)) + X.at(i, 1) * X.at(i, 1);
    Y.at(i, 1) = X.at(i, 0) * X.at(i, 1);
  }
}

double gauss(const double* x, const double* c, int dim, double sigma) {
  double d2 = 0.0;
  for (int k = 0; k < dim; ++k) d2 += (x[k] - c[k]) * (x[k] - c[k]);
  return std::exp(-d2 / (2.0 * sigma * sigma));
}

}  // namespace

TEST_CASE("forward matches a hand-built gaussian expansion") {
  RbfModel m;
  m.n_in = 2;
  m.n_out = 2;
  m.sigma = 0.8;
  m.centers = Matrix(2, 2);
  m.centers.d = {0.3, -0.4, -0.7, 0.2};
  m.weights = Matrix(2, 2);
  m.weights.d = {1.5, -2.0, 0.25, 3.0};
  m.bias = {0.1, -0.2};

  Matrix X(3, 2);
  X.d = {0.3, -0.4,  // exactly on the first center
         0.0, 0.0, -1.0, 1.0};
  const Matrix out = m.forward(X);
  REQUIRE(out.rows == 3);
  REQUIRE(out.cols == 2);

  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 2; ++j) {
      double expect = m.bias[j];
      for (int c = 0; c < 2; ++c)
        expect += gauss(X.row(i), m.centers.row(c), 2, m.sigma) *
                  m.weights.at(c, j);
      CHECK(out.at(i, j) == doctest::Approx(expect).epsilon(1e-14));
    }
  }
  // A unit sitting on its center contributes exactly its weight.
  CHECK(gauss(X.row(0), m.centers.row(0), 2, m.sigma) == 1.0);

  Matrix bad(1, 3);
  CHECK_THROWS_AS(m.forward(bad), validation_error);
}

TEST_CASE("uncapped training interpolates the sample") {
  Matrix X, Y;
  make_data(25, 5, X, Y);

  TrainConfig cfg;
  cfg.rbf_sigma = 0.7;
  cfg.mse_goal = 0.0;
  cfg.max_centers = 0;  // cap at the sample count
  RbfTrainReport rep;
  const RbfModel m = train_rbf(X, Y, cfg, &rep);

  CHECK(rep.stop_reason == "max_centers");
  CHECK(rep.n_centers == 25);
  CHECK(m.n_centers() == 25);
  // One history entry per solve: the bias-only fit plus one per center.
  CHECK(rep.mse_history.size() == 26);
  CHECK(rep.final_mse == rep.mse_history.back());
  // The ridge floor keeps the solution a hair away from exact interpolation.
  CHECK(rep.final_mse < 1e-10);

  const Matrix pred = m.forward(X);
  double worst = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    worst = std::max(worst, std::abs(pred.d[i] - Y.d[i]));
  CHECK(worst < 1e-5);

  // Centers are copies of training inputs.
  for (int c = 0; c < m.n_centers(); ++c) {
    bool found = false;
    for (int i = 0; i < X.rows && !found; ++i)
      found = m.centers.at(c, 0) == X.at(i, 0) &&
              m.centers.at(c, 1) == X.at(i, 1);
    CHECK(found);
  }
}

TEST_CASE("the first history entry is the best constant fit") {
  Matrix X, Y;
  make_data(40, 9, X, Y);

  TrainConfig cfg;
  cfg.rbf_sigma = 0.7;
  cfg.max_centers = 1;
  RbfTrainReport rep;
  (void)train_rbf(X, Y, cfg, &rep);

  // Least-squares constant = per-output mean, so the bias-only MSE is the
  // mean variance of the targets.
  std::vector<double> mean(2, 0.0);
  for (int i = 0; i < Y.rows; ++i)
    for (int j = 0; j < 2; ++j) mean[j] += Y.at(i, j);
  for (double& v : mean) v /= Y.rows;
  double var = 0.0;
  for (int i = 0; i < Y.rows; ++i)
    for (int j = 0; j < 2; ++j) {
      const double e = Y.at(i, j) - mean[j];
      var += e * e;
    }
  var /= double(Y.rows) * 2.0;
  CHECK(rep.mse_history[0] == doctest::Approx(var).epsilon(1e-9));
}

TEST_CASE("greedy growth never increases the residual") {
  Matrix X, Y;
  make_data(30, 21, X, Y);

  TrainConfig cfg;
  cfg.rbf_sigma = 0.6;
  cfg.mse_goal = 0.0;
  RbfTrainReport rep;
  (void)train_rbf(X, Y, cfg, &rep);
  REQUIRE(rep.mse_history.size() > 2);
  // Below ~1e-8 the ridge term dominates and the residual may wobble at the
  // last digit, so monotonicity is only meaningful above that floor.
  for (std::size_t i = 1; i < rep.mse_history.size(); ++i)
    if (rep.mse_history[i - 1] > 1e-8)
      CHECK(rep.mse_history[i] <= rep.mse_history[i - 1] + 1e-12);
  CHECK(rep.mse_history.back() <= rep.mse_history.front());
}

TEST_CASE("stop reasons reflect the terminating condition") {
  Matrix X, Y;
  make_data(25, 5, X, Y);

  TrainConfig goal;
  goal.rbf_sigma = 0.7;
  goal.mse_goal = 1e-2;
  RbfTrainReport rep_goal;
  (void)train_rbf(X, Y, goal, &rep_goal);
  CHECK(rep_goal.stop_reason == "goal");
  CHECK(rep_goal.final_mse <= 1e-2);
  CHECK(rep_goal.n_centers < 25);

  TrainConfig capped;
  capped.rbf_sigma = 0.7;
  capped.mse_goal = 0.0;
  capped.max_centers = 3;
  RbfTrainReport rep_cap;
  const RbfModel m = train_rbf(X, Y, capped, &rep_cap);
  CHECK(rep_cap.stop_reason == "max_centers");
  CHECK(rep_cap.n_centers == 3);
  CHECK(m.n_centers() == 3);
  CHECK(rep_cap.mse_history.size() == 4);

  // A cap above the sample count clamps to the sample count.
  TrainConfig over;
  over.rbf_sigma = 0.7;
  over.mse_goal = 0.0;
  over.max_centers = 1000;
  RbfTrainReport rep_over;
  (void)train_rbf(X, Y, over, &rep_over);
  CHECK(rep_over.stop_reason == "max_centers");
  CHECK(rep_over.n_centers == 25);
}

TEST_CASE("a degenerate spread still trains without diverging") {
  Matrix X, Y;
  make_data(25, 5, X, Y);

  // Near-flat basis columns: every unit looks like the bias. The solver must
  // stay finite and not end up worse than the constant fit.
  TrainConfig wide;
  wide.rbf_sigma = 1e6;
  wide.mse_goal = 0.0;
  wide.max_centers = 10;
  RbfTrainReport rep;
  const RbfModel m = train_rbf(X, Y, wide, &rep);
  CHECK(rep.n_centers == 10);
  CHECK(std::isfinite(rep.final_mse));
  CHECK(rep.final_mse <= rep.mse_history[0] + 1e-12);
  for (double w : m.weights.d) CHECK(std::isfinite(w));
  for (double b : m.bias) CHECK(std::isfinite(b));
}

TEST_CASE("output gradient matches the hand formula on one unit") {
  RbfModel m;
  m.n_in = 1;
  m.n_out = 1;
  m.sigma = 0.5;
  m.centers = Matrix(1, 1);
  m.centers.d = {0.2};
  m.weights = Matrix(1, 1);
  m.weights.d = {1.3};
  m.bias = {-0.4};

  Matrix X(1, 1), Y(1, 1);
  X.d = {0.6};
  Y.d = {2.0};

  std::vector<double> grad;
  const double mse = rbf_output_loss_grad(m, X, Y, grad);

  const double g = gauss(X.row(0), m.centers.row(0), 1, m.sigma);
  const double pred = m.bias[0] + g * m.weights.d[0];
  CHECK(mse == doctest::Approx((pred - 2.0) * (pred - 2.0)).epsilon(1e-14));
  REQUIRE(grad.size() == 2);  // weight then bias
  CHECK(grad[0] == doctest::Approx(2.0 * (pred - 2.0) * g).epsilon(1e-12));
  CHECK(grad[1] == doctest::Approx(2.0 * (pred - 2.0)).epsilon(1e-12));

  Matrix bad(1, 2);
  CHECK_THROWS_AS(rbf_output_loss_grad(m, X, bad, grad), validation_error);
}

TEST_CASE("output gradient matches central differences") {
  Matrix X, Y;
  make_data(25, 5, X, Y);
  TrainConfig cfg;
  cfg.rbf_sigma = 0.7;
  cfg.max_centers = 6;
  cfg.mse_goal = 0.0;
  RbfModel m = train_rbf(X, Y, cfg);
  REQUIRE(m.n_centers() == 6);

  // The trained output layer is a least-squares stationary point, where the
  // gradient vanishes and differences measure only noise; move off it first.
  for (double& w : m.weights.d) w = 1.5 * w + 0.1;
  for (double& b : m.bias) b -= 0.2;

  std::vector<double> analytic;
  (void)rbf_output_loss_grad(m, X, Y, analytic);

  std::vector<double> at(m.weights.d);
  at.insert(at.end(), m.bias.begin(), m.bias.end());
  REQUIRE(analytic.size() == at.size());

  auto f = [&m, &X, &Y](const std::vector<double>& w) {
    RbfModel probe = m;
    std::copy(w.begin(), w.begin() + probe.weights.size(),
              probe.weights.d.begin());
    std::copy(w.begin() + probe.weights.size(), w.end(), probe.bias.begin());
    return mse_of(probe.forward(X), Y);
  };

  // The loss is quadratic in the output parameters, so central differences
  // are exact to rounding.
  SeededRng probe_rng(3);
  const msftest::GradCheck r =
      msftest::check_gradient(f, at, analytic, int(at.size()), 1e-6,
                              probe_rng);
  INFO("worst index ", r.worst_index, ": numeric ", r.worst_numeric,
       " vs analytic ", r.worst_analytic);
  CHECK(r.max_rel < 1e-7);
}

TEST_CASE("training is deterministic") {
  Matrix X, Y;
  make_data(30, 13, X, Y);
  TrainConfig cfg;
  cfg.rbf_sigma = 0.7;
  cfg.max_centers = 8;
  cfg.mse_goal = 0.0;
  const RbfModel a = train_rbf(X, Y, cfg);
  const RbfModel b = train_rbf(X, Y, cfg);
  CHECK(a.centers.d == b.centers.d);
  CHECK(a.weights.d == b.weights.d);
  CHECK(a.bias == b.bias);
}

TEST_CASE("training validates its inputs") {
  Matrix X(3, 2), Y(4, 1);
  TrainConfig cfg;
  CHECK_THROWS_AS(train_rbf(X, Y, cfg), validation_error);
  Matrix empty_x(0, 2), empty_y(0, 1);
  CHECK_THROWS_AS(train_rbf(empty_x, empty_y, cfg), validation_error);
  Matrix Y3(3, 1);
  TrainConfig bad = cfg;
  bad.rbf_sigma = -1.0;
  CHECK_THROWS_AS(train_rbf(X, Y3, bad), validation_error);
}
