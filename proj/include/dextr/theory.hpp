#pragma once

#include <cstdint>
#include <vector>

#include "dextr/proxy.hpp"

namespace dextr {

// Width-m two-layer ReLU net f(x) = (1/sqrt(m)) * sum_r a_r relu(w_r . x)
// with w_r ~ N(0, I_d) and fixed signs a_r uniform on {-1, +1}. Only the
// first layer trains.
struct TwoLayerNet {
  int m = 0, d = 0;
  std::vector<double> w;  // m x d row-major
  std::vector<double> a;  // m signs
};

TwoLayerNet init_two_layer(int m, int d, std::uint64_t seed);

// Predictions for each row of x (n x d).
std::vector<double> predict(const TwoLayerNet& net, const Matrix& x);

struct TrainRun {
  std::vector<double> losses;  // per step, losses[0] is the initial loss
  bool diverged = false;

  // First step whose loss is <= frac * losses[0]; -1 if never reached.
  int steps_to(double frac) const;
};

// Full-batch gradient descent on L = sum_i 0.5 * (f(x_i) - y_i)^2 with the
// analytic first-layer gradient. Stops early (diverged=true) once the loss
// exceeds 1e8.
TrainRun train_two_layer(TwoLayerNet* net, const Matrix& x,
                         const std::vector<double>& y, double gamma,
                         int steps);

// Monte Carlo estimate of the infinite-width ReLU gram matrix
// H_ij = E_w[x_i.x_j * 1{w.x_i >= 0} * 1{w.x_j >= 0}] over m_draws
// Gaussian directions.
Matrix gram_h_infty(const Matrix& x, int m_draws, std::uint64_t seed);

// Unit-norm rows interpolated toward a shared random direction:
// alpha = 0 is raw Gaussian rows, alpha = 1 is exactly rank one.
Matrix collinear_cohort(int n, int d, double alpha, std::uint64_t seed);

struct CohortRun {
  double alpha = 0.0;
  double inv_cond = 0.0;  // of the training input matrix
  int steps = 0;          // steps to the loss threshold, cap+1 if censored
  double speed = 0.0;     // 1/steps, 0 for diverged runs
  bool diverged = false;
  double test_mse = 0.0;  // generalisation experiment only
};

struct CohortReport {
  std::vector<CohortRun> sets;
  double rho = 0.0;
};

// Trains identical-width nets on `sets` input cohorts of graded collinearity
// with seeded Gaussian labels and returns the Spearman correlation between
// squared inverse condition number and convergence speed. Throws if every
// run diverges.
CohortReport convergence_experiment(int sets, int m, int n, int d,
                                    double gamma, int steps, double tau,
                                    std::uint64_t seed);

// Same cohorts, labels from one fixed teacher net, fresh held-out inputs
// drawn per cohort; returns Spearman between inverse condition number and
// negative held-out MSE.
CohortReport generalisation_experiment(int sets, int m, int n, int d,
                                       int n_test, double gamma, int steps,
                                       std::uint64_t seed);

struct LemmaReport {
  int nets = 0;
  std::vector<double> fractions;  // per net: qualifying layers with
                                  // sigma_max >= 1, as a fraction
  double mean_fraction = 0.0;
  int skipped = 0;  // non-finite forwards
};

// Samples cell networks, forwards one seeded data sample each, and measures
// how often qualifying layer outputs have dominant singular value >= 1.
LemmaReport lemma1_check(const SpaceConfig& cfg, int num_nets,
                         std::uint64_t seed);

}  // namespace dextr
