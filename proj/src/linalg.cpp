#include "dextr/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dextr {

Matrix feature_matrix(const TensorD& t) {
  if (t.n != 1) throw std::invalid_argument("feature_matrix: batch must be 1");
  Matrix m(t.c, t.h * t.w);
  std::copy(t.data.begin(), t.data.end(), m.a.begin());
  return m;
}

Matrix feature_matrix(const TensorJ& t) {
  if (t.n != 1) throw std::invalid_argument("feature_matrix: batch must be 1");
  Matrix m(t.c, t.h * t.w);
  for (std::size_t i = 0; i < t.data.size(); ++i) m.a[i] = t.data[i].v;
  return m;
}

Matrix take_rows(const Matrix& m, const std::vector<int>& rows) {
  Matrix out(static_cast<int>(rows.size()), m.cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= m.rows)
      throw std::out_of_range("take_rows: row index");
    for (int c = 0; c < m.cols; ++c)
      out.at(static_cast<int>(i), c) = m.at(rows[i], c);
  }
  return out;
}

Matrix gram(const Matrix& x) {
  Matrix g(x.rows, x.rows);
  for (int i = 0; i < x.rows; ++i)
    for (int j = i; j < x.rows; ++j) {
      double s = 0.0;
      for (int k = 0; k < x.cols; ++k) s += x.at(i, k) * x.at(j, k);
      g.at(i, j) = s;
      g.at(j, i) = s;
    }
  return g;
}

namespace {

double frobenius(const Matrix& m) {
  double s = 0.0;
  for (double v : m.a) s += v * v;
  return std::sqrt(s);
}

double off_diagonal_sq(const Matrix& m) {
  double s = 0.0;
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j)
      if (i != j) s += m.at(i, j) * m.at(i, j);
  return s;
}

}  // namespace

EigResult sym_eig(const Matrix& g) {
  if (g.rows != g.cols) throw std::invalid_argument("sym_eig: not square");
  const int n = g.rows;
  double max_abs = 0.0;
  for (double v : g.a) max_abs = std::max(max_abs, std::fabs(v));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::fabs(g.at(i, j) - g.at(j, i)) > 1e-10 * std::max(1.0, max_abs))
        throw std::invalid_argument("sym_eig: input not symmetric");

  Matrix a = g;
  EigResult res;
  res.values.resize(n);
  if (n == 1) {
    res.values[0] = a.at(0, 0);
    res.converged = true;
    return res;
  }

  const double norm = frobenius(a);
  const double off_target = 1e-12 * norm;
  const int max_sweeps = 100;
  res.converged = false;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    if (off_diagonal_sq(a) <= off_target * off_target) {
      res.converged = true;
      break;
    }
    for (int p = 0; p < n - 1; ++p)
      for (int q = p + 1; q < n; ++q) {
        const double apq = a.at(p, q);
        if (apq == 0.0) continue;
        const double app = a.at(p, p);
        const double aqq = a.at(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const double tau = s / (1.0 + c);
        a.at(p, p) = app - t * apq;
        a.at(q, q) = aqq + t * apq;
        a.at(p, q) = 0.0;
        a.at(q, p) = 0.0;
        for (int k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = a.at(k, p);
          const double akq = a.at(k, q);
          a.at(k, p) = akp - s * (akq + tau * akp);
          a.at(p, k) = a.at(k, p);
          a.at(k, q) = akq + s * (akp - tau * akq);
          a.at(q, k) = a.at(k, q);
        }
      }
  }
  if (!res.converged && off_diagonal_sq(a) <= off_target * off_target)
    res.converged = true;

  for (int i = 0; i < n; ++i) res.values[i] = a.at(i, i);
  std::sort(res.values.begin(), res.values.end());

  // Round-off can push a zero eigenvalue slightly negative; anything within
  // 1e-12 of the dominant magnitude is noise, larger negatives are real.
  double lam_abs = 0.0;
  for (double v : res.values) lam_abs = std::max(lam_abs, std::fabs(v));
  for (double& v : res.values)
    if (v < 0.0 && v > -1e-12 * lam_abs) v = 0.0;
  return res;
}

SpectrumResult spectrum(const Matrix& x) {
  if (x.rows <= 0 || x.cols <= 0)
    throw std::invalid_argument("spectrum: empty matrix");
  SpectrumResult res;
  const bool use_rows = x.rows <= x.cols;
  Matrix g;
  if (use_rows) {
    g = gram(x);
  } else {
    // X^T X without materializing the transpose.
    g = Matrix(x.cols, x.cols);
    for (int i = 0; i < x.cols; ++i)
      for (int j = i; j < x.cols; ++j) {
        double s = 0.0;
        for (int k = 0; k < x.rows; ++k) s += x.at(k, i) * x.at(k, j);
        g.at(i, j) = s;
        g.at(j, i) = s;
      }
  }
  EigResult eig = sym_eig(g);
  res.converged = eig.converged;
  if (!eig.converged) return res;

  const double lam_max = eig.values.empty() ? 0.0 : eig.values.back();
  res.singular_values.resize(eig.values.size());
  for (std::size_t i = 0; i < eig.values.size(); ++i) {
    double lam = eig.values[i];
    if (lam < 1e-14 * lam_max) lam = 0.0;  // numerically rank deficient
    res.singular_values[i] = std::sqrt(std::max(0.0, lam));
  }
  res.sigma_min = res.singular_values.front();
  res.sigma_max = res.singular_values.back();
  res.inv_cond = res.sigma_max > 0.0 ? res.sigma_min / res.sigma_max : 0.0;
  return res;
}

}  // namespace dextr
