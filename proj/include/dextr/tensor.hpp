#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dextr/jet.hpp"

namespace dextr {

// Dense NCHW tensor over a scalar type (double for plain values, Jet2 for
// derivative-carrying forwards). Flat vectors are carried as [n, c, 1, 1].
template <class T>
struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<T> data;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_)
      : n(n_), c(c_), h(h_), w(w_),
        data(static_cast<std::size_t>(n_) * c_ * h_ * w_) {
    if (n_ <= 0 || c_ <= 0 || h_ <= 0 || w_ <= 0)
      throw std::invalid_argument("tensor extents must be positive");
  }

  std::int64_t numel() const { return std::int64_t(n) * c * h * w; }

  T& at(int i, int j, int y, int x) {
    return data[((static_cast<std::size_t>(i) * c + j) * h + y) * w + x];
  }
  const T& at(int i, int j, int y, int x) const {
    return data[((static_cast<std::size_t>(i) * c + j) * h + y) * w + x];
  }

  bool same_shape(const Tensor& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }
};

using TensorD = Tensor<double>;
using TensorJ = Tensor<Jet2>;

// Lifts plain values to constant jets (derivative slots zero).
inline TensorJ lift(const TensorD& t) {
  TensorJ out(t.n, t.c, t.h, t.w);
  for (std::size_t i = 0; i < t.data.size(); ++i)
    out.data[i] = lift_constant(t.data[i]);
  return out;
}

inline TensorD values(const TensorJ& t) {
  TensorD out(t.n, t.c, t.h, t.w);
  for (std::size_t i = 0; i < t.data.size(); ++i) out.data[i] = t.data[i].v;
  return out;
}

template <class T>
bool all_finite(const Tensor<T>& t) {
  for (const T& x : t.data)
    if (!scalar_finite(x)) return false;
  return true;
}

}  // namespace dextr
