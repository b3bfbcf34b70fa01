#pragma once

#include <stdexcept>

#include "dextr/tensor.hpp"

namespace dextr {

// Primitive layer ops, templated over the scalar type so the same code path
// serves plain-value forwards and jet forwards. Weights are always plain
// doubles: they are constants of the curve parameter, so they never carry
// derivative slots.

// Cross-correlation with square kernel. weight is [Cout, Cin, k, k].
template <class T>
Tensor<T> conv2d(const Tensor<T>& in, const TensorD& weight, int stride = 1,
                 int pad = -1) {
  if (weight.h != weight.w || weight.h % 2 == 0)
    throw std::invalid_argument("conv2d: kernel must be square with odd side");
  if (weight.c != in.c)
    throw std::invalid_argument("conv2d: channel mismatch");
  const int k = weight.h;
  if (pad < 0) pad = (k - 1) / 2;
  const int oh = (in.h + 2 * pad - k) / stride + 1;
  const int ow = (in.w + 2 * pad - k) / stride + 1;
  if (oh <= 0 || ow <= 0)
    throw std::invalid_argument("conv2d: empty output");
  Tensor<T> out(in.n, weight.n, oh, ow);
  for (int b = 0; b < in.n; ++b)
    for (int co = 0; co < weight.n; ++co)
      for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
          T acc{};
          for (int ci = 0; ci < in.c; ++ci)
            for (int ky = 0; ky < k; ++ky) {
              const int iy = y * stride + ky - pad;
              if (iy < 0 || iy >= in.h) continue;
              for (int kx = 0; kx < k; ++kx) {
                const int ix = x * stride + kx - pad;
                if (ix < 0 || ix >= in.w) continue;
                acc += in.at(b, ci, iy, ix) * weight.at(co, ci, ky, kx);
              }
            }
          out.at(b, co, y, x) = acc;
        }
  return out;
}

template <class T>
Tensor<T> relu(const Tensor<T>& in) {
  Tensor<T> out(in.n, in.c, in.h, in.w);
  for (std::size_t i = 0; i < in.data.size(); ++i)
    out.data[i] = scalar_relu(in.data[i]);
  return out;
}

// 3x3 mean pool, stride 1, pad 1; padded cells count toward the divisor,
// so every window divides by 9.
template <class T>
Tensor<T> avg_pool3x3(const Tensor<T>& in) {
  Tensor<T> out(in.n, in.c, in.h, in.w);
  for (int b = 0; b < in.n; ++b)
    for (int ch = 0; ch < in.c; ++ch)
      for (int y = 0; y < in.h; ++y)
        for (int x = 0; x < in.w; ++x) {
          T acc{};
          for (int dy = -1; dy <= 1; ++dy) {
            const int iy = y + dy;
            if (iy < 0 || iy >= in.h) continue;
            for (int dx = -1; dx <= 1; ++dx) {
              const int ix = x + dx;
              if (ix < 0 || ix >= in.w) continue;
              acc += in.at(b, ch, iy, ix);
            }
          }
          out.at(b, ch, y, x) = acc * (1.0 / 9.0);
        }
  return out;
}

// 2x2 mean pool, stride 2, no padding (spatial halving on the shortcut path).
template <class T>
Tensor<T> avg_pool2x2s2(const Tensor<T>& in) {
  const int oh = in.h / 2, ow = in.w / 2;
  if (oh == 0 || ow == 0)
    throw std::invalid_argument("avg_pool2x2s2: input too small");
  Tensor<T> out(in.n, in.c, oh, ow);
  for (int b = 0; b < in.n; ++b)
    for (int ch = 0; ch < in.c; ++ch)
      for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
          T acc = in.at(b, ch, 2 * y, 2 * x);
          acc += in.at(b, ch, 2 * y, 2 * x + 1);
          acc += in.at(b, ch, 2 * y + 1, 2 * x);
          acc += in.at(b, ch, 2 * y + 1, 2 * x + 1);
          out.at(b, ch, y, x) = acc * 0.25;
        }
  return out;
}

template <class T>
Tensor<T> global_avg_pool(const Tensor<T>& in) {
  Tensor<T> out(in.n, in.c, 1, 1);
  const double inv = 1.0 / (static_cast<double>(in.h) * in.w);
  for (int b = 0; b < in.n; ++b)
    for (int ch = 0; ch < in.c; ++ch) {
      T acc{};
      for (int y = 0; y < in.h; ++y)
        for (int x = 0; x < in.w; ++x) acc += in.at(b, ch, y, x);
      out.at(b, ch, 0, 0) = acc * inv;
    }
  return out;
}

// Per-channel normalization over the spatial extent with biased variance:
// (x - mean) / sqrt(var + eps). Batch statistics at batch size 1 reduce to
// exactly this.
template <class T>
Tensor<T> instance_norm(const Tensor<T>& in, double eps = 1e-5) {
  Tensor<T> out(in.n, in.c, in.h, in.w);
  const double inv = 1.0 / (static_cast<double>(in.h) * in.w);
  for (int b = 0; b < in.n; ++b)
    for (int ch = 0; ch < in.c; ++ch) {
      T mean{};
      for (int y = 0; y < in.h; ++y)
        for (int x = 0; x < in.w; ++x) mean += in.at(b, ch, y, x);
      mean = mean * inv;
      T var{};
      for (int y = 0; y < in.h; ++y)
        for (int x = 0; x < in.w; ++x) {
          T d = in.at(b, ch, y, x) - mean;
          var += d * d;
        }
      var = var * inv;
      T denom = scalar_sqrt(var + eps);
      for (int y = 0; y < in.h; ++y)
        for (int x = 0; x < in.w; ++x)
          out.at(b, ch, y, x) = (in.at(b, ch, y, x) - mean) / denom;
    }
  return out;
}

// Fully connected layer on a flat [n, C, 1, 1] input. weight is
// [K, C, 1, 1], bias is [K, 1, 1, 1].
template <class T>
Tensor<T> linear(const Tensor<T>& in, const TensorD& weight,
                 const TensorD& bias) {
  if (in.h != 1 || in.w != 1)
    throw std::invalid_argument("linear: input must be flat");
  if (weight.c != in.c || bias.n != weight.n)
    throw std::invalid_argument("linear: shape mismatch");
  Tensor<T> out(in.n, weight.n, 1, 1);
  for (int b = 0; b < in.n; ++b)
    for (int k = 0; k < weight.n; ++k) {
      T acc{};
      for (int ch = 0; ch < in.c; ++ch)
        acc += in.at(b, ch, 0, 0) * weight.at(k, ch, 0, 0);
      out.at(b, k, 0, 0) = acc + bias.at(k, 0, 0, 0);
    }
  return out;
}

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("add: shape mismatch");
  Tensor<T> out(a.n, a.c, a.h, a.w);
  for (std::size_t i = 0; i < a.data.size(); ++i)
    out.data[i] = a.data[i] + b.data[i];
  return out;
}

// The "none" edge op: a zero tensor shaped like the input.
template <class T>
Tensor<T> zeroize(const Tensor<T>& in) {
  return Tensor<T>(in.n, in.c, in.h, in.w);
}

}  // namespace dextr
