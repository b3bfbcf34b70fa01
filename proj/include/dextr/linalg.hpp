#pragma once

#include <vector>

#include "dextr/tensor.hpp"

namespace dextr {

// Row-major dense matrix of plain values. Feature maps live here as
// (channels x spatial) after flattening.
struct Matrix {
  int rows = 0, cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c) {}

  double& at(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const {
    return a[static_cast<std::size_t>(r) * cols + c];
  }
};

// Flattens a [1, C, H, W] tensor (values only) to a (C x H*W) matrix.
Matrix feature_matrix(const TensorD& t);
Matrix feature_matrix(const TensorJ& t);

// Selects a subset of rows (channel subsampling).
Matrix take_rows(const Matrix& m, const std::vector<int>& rows);

// X * X^T, symmetrized against round-off.
Matrix gram(const Matrix& x);

struct EigResult {
  std::vector<double> values;  // ascending
  bool converged = false;
};

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations. Sweeps until
// the off-diagonal Frobenius norm falls below 1e-12 * ||G||_F, capped at 100
// sweeps (converged=false past the cap). Tiny negative round-off values are
// clamped to zero; genuinely negative eigenvalues pass through. Throws if the
// input is not square or not symmetric.
EigResult sym_eig(const Matrix& g);

struct SpectrumResult {
  std::vector<double> singular_values;  // ascending, min(rows, cols) entries
  double sigma_max = 0.0;
  double sigma_min = 0.0;
  double inv_cond = 0.0;  // sigma_min / sigma_max, 0 when sigma_max == 0
  bool converged = false;
};

// Singular values of X via the eigenvalues of the smaller of X*X^T and
// X^T*X. Eigenvalues below 1e-14 * lambda_max count as exact zeros, so a
// numerically rank-deficient matrix reports inv_cond = 0.
SpectrumResult spectrum(const Matrix& x);

}  // namespace dextr
