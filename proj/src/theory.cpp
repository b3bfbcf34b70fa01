#include "dextr/theory.hpp"

#include <cmath>
#include <stdexcept>

#include "dextr/eval.hpp"

namespace dextr {

TwoLayerNet init_two_layer(int m, int d, std::uint64_t seed) {
  if (m < 1 || d < 1) throw std::invalid_argument("init_two_layer: bad size");
  TwoLayerNet net;
  net.m = m;
  net.d = d;
  net.w.resize(static_cast<std::size_t>(m) * d);
  net.a.resize(static_cast<std::size_t>(m));
  Rng rng(seed);
  for (double& v : net.w) v = rng.normal();
  for (double& v : net.a) v = rng.below(2) == 0 ? -1.0 : 1.0;
  return net;
}

std::vector<double> predict(const TwoLayerNet& net, const Matrix& x) {
  if (x.cols != net.d) throw std::invalid_argument("predict: dim mismatch");
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(net.m));
  std::vector<double> u(static_cast<std::size_t>(x.rows), 0.0);
  for (int r = 0; r < net.m; ++r) {
    const double* wr = &net.w[static_cast<std::size_t>(r) * net.d];
    for (int i = 0; i < x.rows; ++i) {
      double pre = 0.0;
      const double* xi = &x.a[static_cast<std::size_t>(i) * x.cols];
      for (int k = 0; k < net.d; ++k) pre += wr[k] * xi[k];
      if (pre > 0.0) u[static_cast<std::size_t>(i)] += net.a[r] * pre;
    }
  }
  for (double& v : u) v *= inv_sqrt_m;
  return u;
}

int TrainRun::steps_to(double frac) const {
  if (losses.empty()) return -1;
  const double target = frac * losses[0];
  for (std::size_t t = 1; t < losses.size(); ++t)
    if (losses[t] <= target) return static_cast<int>(t);
  return -1;
}

TrainRun train_two_layer(TwoLayerNet* net, const Matrix& x,
                         const std::vector<double>& y, double gamma,
                         int steps) {
  if (x.rows != static_cast<int>(y.size()))
    throw std::invalid_argument("train_two_layer: label count mismatch");
  if (x.cols != net->d)
    throw std::invalid_argument("train_two_layer: dim mismatch");
  const int n = x.rows, m = net->m, d = net->d;
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(m));

  TrainRun run;
  run.losses.reserve(static_cast<std::size_t>(steps) + 1);
  std::vector<double> pre(static_cast<std::size_t>(m) * n);
  std::vector<double> residual(static_cast<std::size_t>(n));

  for (int t = 0; t <= steps; ++t) {
    // Forward: cache preactivations, they double as the ReLU gate pattern
    // for the gradient.
    std::fill(residual.begin(), residual.end(), 0.0);
    for (int r = 0; r < m; ++r) {
      const double* wr = &net->w[static_cast<std::size_t>(r) * d];
      for (int i = 0; i < n; ++i) {
        double p = 0.0;
        const double* xi = &x.a[static_cast<std::size_t>(i) * d];
        for (int k = 0; k < d; ++k) p += wr[k] * xi[k];
        pre[static_cast<std::size_t>(r) * n + i] = p;
        if (p > 0.0) residual[static_cast<std::size_t>(i)] += net->a[r] * p;
      }
    }
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
      double& res = residual[static_cast<std::size_t>(i)];
      res = res * inv_sqrt_m - y[static_cast<std::size_t>(i)];
      loss += 0.5 * res * res;
    }
    run.losses.push_back(loss);
    if (!std::isfinite(loss) || loss > 1e8) {
      run.diverged = true;
      return run;
    }
    if (t == steps) break;

    // dL/dw_r = (a_r / sqrt(m)) * sum_i residual_i * 1{w_r.x_i > 0} * x_i
    for (int r = 0; r < m; ++r) {
      double* wr = &net->w[static_cast<std::size_t>(r) * d];
      const double scale = -gamma * net->a[r] * inv_sqrt_m;
      for (int i = 0; i < n; ++i) {
        if (pre[static_cast<std::size_t>(r) * n + i] <= 0.0) continue;
        const double coef = scale * residual[static_cast<std::size_t>(i)];
        const double* xi = &x.a[static_cast<std::size_t>(i) * d];
        for (int k = 0; k < d; ++k) wr[k] += coef * xi[k];
      }
    }
  }
  return run;
}

Matrix gram_h_infty(const Matrix& x, int m_draws, std::uint64_t seed) {
  if (m_draws < 1) throw std::invalid_argument("gram_h_infty: m_draws < 1");
  const int n = x.rows, d = x.cols;
  Rng rng(seed);
  std::vector<double> w(static_cast<std::size_t>(d));
  std::vector<char> active(static_cast<std::size_t>(n));
  Matrix counts(n, n);
  for (int t = 0; t < m_draws; ++t) {
    for (double& v : w) v = rng.normal();
    for (int i = 0; i < n; ++i) {
      double p = 0.0;
      const double* xi = &x.a[static_cast<std::size_t>(i) * d];
      for (int k = 0; k < d; ++k) p += w[static_cast<std::size_t>(k)] * xi[k];
      active[static_cast<std::size_t>(i)] = p >= 0.0 ? 1 : 0;
    }
    for (int i = 0; i < n; ++i) {
      if (!active[static_cast<std::size_t>(i)]) continue;
      for (int j = i; j < n; ++j)
        if (active[static_cast<std::size_t>(j)]) {
          counts.at(i, j) += 1.0;
        }
    }
  }
  Matrix h(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      double dot = 0.0;
      for (int k = 0; k < d; ++k) dot += x.at(i, k) * x.at(j, k);
      const double v = dot * counts.at(i, j) / m_draws;
      h.at(i, j) = v;
      h.at(j, i) = v;
    }
  return h;
}

Matrix collinear_cohort(int n, int d, double alpha, std::uint64_t seed) {
  if (alpha < 0.0 || alpha > 1.0)
    throw std::invalid_argument("collinear_cohort: alpha out of [0,1]");
  Rng rng(seed);
  std::vector<double> z(static_cast<std::size_t>(d));
  double zn = 0.0;
  for (double& v : z) {
    v = rng.normal();
    zn += v * v;
  }
  zn = std::sqrt(zn);
  for (double& v : z) v /= zn;

  Matrix x(n, d);
  for (int i = 0; i < n; ++i) {
    std::vector<double> g(static_cast<std::size_t>(d));
    double gn = 0.0;
    for (double& v : g) {
      v = rng.normal();
      gn += v * v;
    }
    gn = std::sqrt(gn);
    double norm = 0.0;
    for (int k = 0; k < d; ++k) {
      const double v = (1.0 - alpha) * g[static_cast<std::size_t>(k)] +
                       alpha * gn * z[static_cast<std::size_t>(k)];
      x.at(i, k) = v;
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (int k = 0; k < d; ++k) x.at(i, k) /= norm;
  }
  return x;
}

namespace {

constexpr double kAlphaLevels[5] = {0.0, 0.25, 0.5, 0.75, 0.95};

}  // namespace

CohortReport convergence_experiment(int sets, int m, int n, int d,
                                    double gamma, int steps, double tau,
                                    std::uint64_t seed) {
  if (sets < 5) throw std::invalid_argument("convergence_experiment: sets < 5");
  CohortReport rep;
  std::vector<double> inv_cond_sq, speed;
  int diverged = 0;
  for (int s = 0; s < sets; ++s) {
    CohortRun run;
    run.alpha = kAlphaLevels[s % 5];
    const Matrix x = collinear_cohort(
        n, d, run.alpha, mix_seed(seed, 10 + static_cast<std::uint64_t>(s)));
    run.inv_cond = spectrum(x).inv_cond;
    std::vector<double> y(static_cast<std::size_t>(n));
    Rng label_rng(mix_seed(seed, 200 + static_cast<std::uint64_t>(s)));
    for (double& v : y) v = label_rng.normal();
    TwoLayerNet net = init_two_layer(
        m, d, mix_seed(seed, 300 + static_cast<std::uint64_t>(s)));
    const TrainRun tr = train_two_layer(&net, x, y, gamma, steps);
    run.diverged = tr.diverged;
    if (tr.diverged) {
      ++diverged;
      run.steps = steps + 1;
      run.speed = 0.0;
    } else {
      const int st = tr.steps_to(tau);
      run.steps = st > 0 ? st : steps + 1;  // censored runs count as slowest
      run.speed = 1.0 / run.steps;
    }
    inv_cond_sq.push_back(run.inv_cond * run.inv_cond);
    speed.push_back(run.speed);
    rep.sets.push_back(run);
  }
  if (diverged == sets)
    throw std::runtime_error("convergence_experiment: all runs diverged");
  rep.rho = spearman(inv_cond_sq, speed);
  return rep;
}

CohortReport generalisation_experiment(int sets, int m, int n, int d,
                                       int n_test, double gamma, int steps,
                                       std::uint64_t seed) {
  if (sets < 5)
    throw std::invalid_argument("generalisation_experiment: sets < 5");
  const TwoLayerNet teacher = init_two_layer(16, d, mix_seed(seed, 1));
  CohortReport rep;
  std::vector<double> inv_cond, neg_mse;
  int diverged = 0;
  for (int s = 0; s < sets; ++s) {
    CohortRun run;
    run.alpha = kAlphaLevels[s % 5];
    const Matrix x_train = collinear_cohort(
        n, d, run.alpha, mix_seed(seed, 10 + static_cast<std::uint64_t>(s)));
    // Held-out inputs are always well spread: a net that only ever saw one
    // ray must still answer everywhere the teacher is defined.
    const Matrix x_test =
        collinear_cohort(n_test, d, 0.0,
                         mix_seed(seed, 5000 + static_cast<std::uint64_t>(s)));
    run.inv_cond = spectrum(x_train).inv_cond;
    const std::vector<double> y_train = predict(teacher, x_train);
    const std::vector<double> y_test = predict(teacher, x_test);
    TwoLayerNet net = init_two_layer(
        m, d, mix_seed(seed, 300 + static_cast<std::uint64_t>(s)));
    const TrainRun tr = train_two_layer(&net, x_train, y_train, gamma, steps);
    run.diverged = tr.diverged;
    if (tr.diverged) {
      ++diverged;
      rep.sets.push_back(run);
      continue;
    }
    const std::vector<double> u = predict(net, x_test);
    double mse = 0.0;
    for (int i = 0; i < n_test; ++i) {
      const double e =
          u[static_cast<std::size_t>(i)] - y_test[static_cast<std::size_t>(i)];
      mse += e * e;
    }
    run.test_mse = mse / n_test;
    inv_cond.push_back(run.inv_cond);
    neg_mse.push_back(-run.test_mse);
    rep.sets.push_back(run);
  }
  if (static_cast<int>(inv_cond.size()) < 5)
    throw std::runtime_error("generalisation_experiment: too many divergences");
  (void)diverged;
  rep.rho = spearman(inv_cond, neg_mse);
  return rep;
}

LemmaReport lemma1_check(const SpaceConfig& cfg, int num_nets,
                         std::uint64_t seed) {
  if (num_nets < 1) throw std::invalid_argument("lemma1_check: num_nets < 1");
  LemmaReport rep;
  for (int i = 0; i < num_nets; ++i) {
    const CellArch arch =
        sample_arch(mix_seed(seed, 2 * static_cast<std::uint64_t>(i)));
    const NetworkSpec net = instantiate(
        arch, cfg, mix_seed(seed, 2 * static_cast<std::uint64_t>(i) + 1));
    const TensorD data = make_data_sample(
        cfg, mix_seed(seed, 40000 + static_cast<std::uint64_t>(i)));
    const ForwardResult<double> fwd = forward(net, data);
    if (!fwd.finite || !fwd.spectra_ok) {
      ++rep.skipped;
      continue;
    }
    int qualifying = 0, strong = 0;
    for (const LayerRecord& r : fwd.records) {
      if (!r.qualifying) continue;
      ++qualifying;
      if (r.sigma_max >= 1.0) ++strong;
    }
    if (qualifying == 0) {
      ++rep.skipped;
      continue;
    }
    rep.fractions.push_back(static_cast<double>(strong) / qualifying);
  }
  rep.nets = static_cast<int>(rep.fractions.size());
  if (rep.nets == 0) throw std::runtime_error("lemma1_check: no usable nets");
  double sum = 0.0;
  for (double f : rep.fractions) sum += f;
  rep.mean_fraction = sum / rep.nets;
  return rep;
}

}  // namespace dextr
