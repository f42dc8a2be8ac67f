// Copyright (C) 2026 The TextSpotter Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "textspotter/ndops/tensor.hpp"

namespace textspotter::ndops {

namespace detail {

// C[m,n] += A * B[k,n], where A(i, p) = a[i * si + p * sp]. Four rows of C
// share each pass over a row of B; every C element still accumulates over p
// in increasing order, so results do not depend on the blocking.
inline void gemm_strided(std::size_t m, std::size_t n, std::size_t k, const double* __restrict a,
                         std::size_t si, std::size_t sp, const double* __restrict b,
                         double* __restrict c) {
  constexpr std::size_t kCols = 512;
  for (std::size_t j0 = 0; j0 < n; j0 += kCols) {
    const std::size_t nj = std::min(kCols, n - j0);
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) {
      double* c0 = c + i * n + j0;
      double* c1 = c0 + n;
      double* c2 = c1 + n;
      double* c3 = c2 + n;
      for (std::size_t p = 0; p < k; ++p) {
        const double a0 = a[i * si + p * sp], a1 = a[(i + 1) * si + p * sp],
                     a2 = a[(i + 2) * si + p * sp], a3 = a[(i + 3) * si + p * sp];
        if (a0 == 0.0 && a1 == 0.0 && a2 == 0.0 && a3 == 0.0) continue;
        const double* brow = b + p * n + j0;
        for (std::size_t j = 0; j < nj; ++j) {
          const double bv = brow[j];
          c0[j] += a0 * bv;
          c1[j] += a1 * bv;
          c2[j] += a2 * bv;
          c3[j] += a3 * bv;
        }
      }
    }
    for (; i < m; ++i) {
      double* crow = c + i * n + j0;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = a[i * si + p * sp];
        if (av == 0.0) continue;
        const double* brow = b + p * n + j0;
        for (std::size_t j = 0; j < nj; ++j) crow[j] += av * brow[j];
      }
    }
  }
}

// C[m,n] += A[m,k] * B[k,n]
inline void gemm_nn(std::size_t m, std::size_t n, std::size_t k,
                    const double* __restrict a, const double* __restrict b,
                    double* __restrict c) {
  gemm_strided(m, n, k, a, k, 1, b, c);
}

// C[m,n] += A[k,m]^T * B[k,n]
inline void gemm_tn(std::size_t m, std::size_t n, std::size_t k,
                    const double* __restrict a, const double* __restrict b,
                    double* __restrict c) {
  gemm_strided(m, n, k, a, 1, m, b, c);
}

// C[m,n] += A[m,k] * B[n,k]^T. Few rows of A (matrix-vector products): dot
// products with four partial sums. Otherwise B is transposed once and the
// product goes through gemm_nn.
inline void gemm_nt(std::size_t m, std::size_t n, std::size_t k,
                    const double* __restrict a, const double* __restrict b,
                    double* __restrict c) {
  if (m < 8) {
    for (std::size_t i = 0; i < m; ++i) {
      const double* arow = a + i * k;
      for (std::size_t j = 0; j < n; ++j) {
        const double* brow = b + j * k;
        double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
        std::size_t p = 0;
        for (; p + 4 <= k; p += 4) {
          s0 += arow[p] * brow[p];
          s1 += arow[p + 1] * brow[p + 1];
          s2 += arow[p + 2] * brow[p + 2];
          s3 += arow[p + 3] * brow[p + 3];
        }
        for (; p < k; ++p) s0 += arow[p] * brow[p];
        c[i * n + j] += (s0 + s1) + (s2 + s3);
      }
    }
    return;
  }
  std::vector<double> bt(k * n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t p = 0; p < k; ++p) bt[p * n + j] = b[j * k + p];
  }
  gemm_nn(m, n, k, a, bt.data(), c);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// affine

struct AffineGrads {
  Tensor dx;
  Tensor dW;
  Tensor db;
};

/// y[n,out] = x[n,in] * W[in,out] + b[out]
inline Tensor affine(const Tensor& x, const Tensor& W, const Tensor& b) {
  if (x.rank() != 2 || W.rank() != 2 || b.rank() != 1 || x.dim(1) != W.dim(0) ||
      W.dim(1) != b.dim(0)) {
    throw DimensionError("affine: incompatible shapes x" +
                         shape_string(x.shape()) + " W" +
                         shape_string(W.shape()) + " b" +
                         shape_string(b.shape()));
  }
  const std::size_t n = x.dim(0), in = x.dim(1), out = W.dim(1);
  Tensor y({n, out});
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(b.ptr(), b.ptr() + out, y.ptr() + i * out);
  }
  detail::gemm_nn(n, out, in, x.ptr(), W.ptr(), y.ptr());
  return y;
}

inline AffineGrads affine_backward(const Tensor& x, const Tensor& W,
                                   const Tensor& dy) {
  const std::size_t n = x.dim(0), in = x.dim(1), out = W.dim(1);
  if (dy.rank() != 2 || dy.dim(0) != n || dy.dim(1) != out) {
    throw DimensionError("affine_backward: dy shape " +
                         shape_string(dy.shape()));
  }
  AffineGrads g{Tensor({n, in}), Tensor({in, out}), Tensor({out})};
  detail::gemm_nt(n, in, out, dy.ptr(), W.ptr(), g.dx.ptr());
  detail::gemm_tn(in, out, n, x.ptr(), dy.ptr(), g.dW.ptr());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < out; ++j) g.db[j] += dy.at(i, j);
  }
  return g;
}

// ---------------------------------------------------------------------------
// conv2d

struct ConvGeometry {
  std::size_t stride_h = 1;
  std::size_t stride_w = 1;
  std::size_t pad_h = 0;
  std::size_t pad_w = 0;
  std::size_t dilation_h = 1;
  std::size_t dilation_w = 1;

  static ConvGeometry uniform(std::size_t stride, std::size_t pad,
                              std::size_t dilation = 1) {
    return {stride, stride, pad, pad, dilation, dilation};
  }
};

struct ConvGrads {
  Tensor dx;
  Tensor dk;
  Tensor db;  // only filled when a bias was used
};

namespace detail {

struct ConvDims {
  std::size_t C, H, W, F, kh, kw, Ho, Wo;
  std::size_t ext_h, ext_w;  // dilated kernel extent
};

inline ConvDims conv_dims(const Tensor& x, const Tensor& k,
                          const ConvGeometry& g) {
  if (x.rank() != 3 || k.rank() != 4 || x.dim(0) != k.dim(1)) {
    throw DimensionError("conv2d: incompatible shapes x" +
                         shape_string(x.shape()) + " k" +
                         shape_string(k.shape()));
  }
  if (g.stride_h == 0 || g.stride_w == 0 || g.dilation_h == 0 || g.dilation_w == 0) {
    throw DimensionError("conv2d: stride and dilation must be positive");
  }
  ConvDims d{x.dim(0), x.dim(1), x.dim(2), k.dim(0), k.dim(2), k.dim(3), 0, 0, 0, 0};
  d.ext_h = (d.kh - 1) * g.dilation_h + 1;
  d.ext_w = (d.kw - 1) * g.dilation_w + 1;
  if (d.ext_h > d.H + 2 * g.pad_h || d.ext_w > d.W + 2 * g.pad_w) {
    throw DimensionError("conv2d: kernel " + shape_string(k.shape()) +
                         " larger than padded input " +
                         shape_string(x.shape()));
  }
  d.Ho = (d.H + 2 * g.pad_h - d.ext_h) / g.stride_h + 1;
  d.Wo = (d.W + 2 * g.pad_w - d.ext_w) / g.stride_w + 1;
  return d;
}

// cols[(c*kh+i)*kw+j, oy*Wo+ox]
inline std::vector<double> im2col(const Tensor& x, const ConvDims& d,
                                  const ConvGeometry& g) {
  const std::size_t P = d.Ho * d.Wo;
  std::vector<double> cols(d.C * d.kh * d.kw * P, 0.0);
  const double* xp = x.ptr();
  for (std::size_t c = 0; c < d.C; ++c) {
    for (std::size_t i = 0; i < d.kh; ++i) {
      for (std::size_t j = 0; j < d.kw; ++j) {
        double* row = cols.data() + ((c * d.kh + i) * d.kw + j) * P;
        for (std::size_t oy = 0; oy < d.Ho; ++oy) {
          const long iy = static_cast<long>(oy * g.stride_h + i * g.dilation_h) -
                          static_cast<long>(g.pad_h);
          if (iy < 0 || iy >= static_cast<long>(d.H)) continue;
          const double* xrow = xp + (c * d.H + static_cast<std::size_t>(iy)) * d.W;
          for (std::size_t ox = 0; ox < d.Wo; ++ox) {
            const long ix = static_cast<long>(ox * g.stride_w + j * g.dilation_w) -
                            static_cast<long>(g.pad_w);
            if (ix < 0 || ix >= static_cast<long>(d.W)) continue;
            row[oy * d.Wo + ox] = xrow[ix];
          }
        }
      }
    }
  }
  return cols;
}

inline void col2im(const std::vector<double>& cols, const ConvDims& d,
                   const ConvGeometry& g, Tensor& dx) {
  const std::size_t P = d.Ho * d.Wo;
  double* xp = dx.ptr();
  for (std::size_t c = 0; c < d.C; ++c) {
    for (std::size_t i = 0; i < d.kh; ++i) {
      for (std::size_t j = 0; j < d.kw; ++j) {
        const double* row = cols.data() + ((c * d.kh + i) * d.kw + j) * P;
        for (std::size_t oy = 0; oy < d.Ho; ++oy) {
          const long iy = static_cast<long>(oy * g.stride_h + i * g.dilation_h) -
                          static_cast<long>(g.pad_h);
          if (iy < 0 || iy >= static_cast<long>(d.H)) continue;
          double* xrow = xp + (c * d.H + static_cast<std::size_t>(iy)) * d.W;
          for (std::size_t ox = 0; ox < d.Wo; ++ox) {
            const long ix = static_cast<long>(ox * g.stride_w + j * g.dilation_w) -
                            static_cast<long>(g.pad_w);
            if (ix < 0 || ix >= static_cast<long>(d.W)) continue;
            xrow[ix] += row[oy * d.Wo + ox];
          }
        }
      }
    }
  }
}

}  // namespace detail

/// Cross-correlation of x[C,H,W] with k[F,C,kh,kw]; optional bias[F].
inline Tensor conv2d(const Tensor& x, const Tensor& k, const ConvGeometry& g,
                     const Tensor* bias = nullptr) {
  const auto d = detail::conv_dims(x, k, g);
  if (bias && (bias->rank() != 1 || bias->dim(0) != d.F)) {
    throw DimensionError("conv2d: bias shape " + shape_string(bias->shape()));
  }
  const std::size_t P = d.Ho * d.Wo;
  Tensor y({d.F, d.Ho, d.Wo});
  if (bias) {
    for (std::size_t f = 0; f < d.F; ++f) {
      std::fill(y.ptr() + f * P, y.ptr() + (f + 1) * P, (*bias)[f]);
    }
  }
  const auto cols = detail::im2col(x, d, g);
  detail::gemm_nn(d.F, P, d.C * d.kh * d.kw, k.ptr(), cols.data(), y.ptr());
  return y;
}

inline ConvGrads conv2d_backward(const Tensor& x, const Tensor& k,
                                 const ConvGeometry& g, const Tensor& dy,
                                 bool with_bias = false, bool with_dx = true) {
  const auto d = detail::conv_dims(x, k, g);
  if (dy.shape() != Shape{d.F, d.Ho, d.Wo}) {
    throw DimensionError("conv2d_backward: dy shape " +
                         shape_string(dy.shape()));
  }
  const std::size_t P = d.Ho * d.Wo;
  const std::size_t R = d.C * d.kh * d.kw;
  ConvGrads out{Tensor(x.shape()), Tensor(k.shape()), Tensor()};
  const auto cols = detail::im2col(x, d, g);
  detail::gemm_nt(d.F, R, P, dy.ptr(), cols.data(), out.dk.ptr());
  if (with_dx) {
    std::vector<double> dcols(R * P, 0.0);
    detail::gemm_tn(R, P, d.F, k.ptr(), dy.ptr(), dcols.data());
    detail::col2im(dcols, d, g, out.dx);
  }
  if (with_bias) {
    out.db = Tensor({d.F});
    for (std::size_t f = 0; f < d.F; ++f) {
      double s = 0.0;
      for (std::size_t p = 0; p < P; ++p) s += dy[f * P + p];
      out.db[f] = s;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// softmax

namespace detail {

struct AxisView {
  std::size_t outer, len, inner;
};

inline AxisView axis_view(const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) {
    throw DimensionError("softmax: axis " + std::to_string(axis) +
                         " out of range for shape " + shape_string(shape));
  }
  AxisView v{1, shape[axis], 1};
  for (std::size_t i = 0; i < axis; ++i) v.outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) v.inner *= shape[i];
  return v;
}

}  // namespace detail

/// Softmax along `axis`, computed with max-subtraction.
inline Tensor softmax(const Tensor& x, std::size_t axis) {
  const auto v = detail::axis_view(x.shape(), axis);
  Tensor y(x.shape());
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t in = 0; in < v.inner; ++in) {
      const std::size_t base = o * v.len * v.inner + in;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < v.len; ++k) {
        mx = std::max(mx, x[base + k * v.inner]);
      }
      double sum = 0.0;
      for (std::size_t k = 0; k < v.len; ++k) {
        const double e = std::exp(x[base + k * v.inner] - mx);
        y[base + k * v.inner] = e;
        sum += e;
      }
      for (std::size_t k = 0; k < v.len; ++k) y[base + k * v.inner] /= sum;
    }
  }
  return y;
}

inline Tensor softmax(const Tensor& x) { return softmax(x, x.rank() - 1); }

/// Given y = softmax(x) and dL/dy, returns dL/dx.
inline Tensor softmax_backward(const Tensor& y, const Tensor& dy,
                               std::size_t axis) {
  y.require_same_shape(dy, "softmax_backward");
  const auto v = detail::axis_view(y.shape(), axis);
  Tensor dx(y.shape());
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t in = 0; in < v.inner; ++in) {
      const std::size_t base = o * v.len * v.inner + in;
      double dot = 0.0;
      for (std::size_t k = 0; k < v.len; ++k) {
        dot += y[base + k * v.inner] * dy[base + k * v.inner];
      }
      for (std::size_t k = 0; k < v.len; ++k) {
        const std::size_t idx = base + k * v.inner;
        dx[idx] = y[idx] * (dy[idx] - dot);
      }
    }
  }
  return dx;
}

/// log-sum-exp of a contiguous run, stable.
inline double log_sum_exp(const double* x, std::size_t n) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, x[i]);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(x[i] - mx);
  return mx + std::log(s);
}

// ---------------------------------------------------------------------------
// elementwise activations

inline double sigmoid(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

/// ELU with alpha = 1. Continuously differentiable, which keeps finite
/// difference checks of whole networks well behaved.
inline Tensor elu(const Tensor& x) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = x[i] > 0 ? x[i] : std::expm1(x[i]);
  }
  return y;
}

/// Backward of elu given its output y.
inline Tensor elu_backward(const Tensor& y, const Tensor& dy) {
  y.require_same_shape(dy, "elu_backward");
  Tensor dx(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i) {
    dx[i] = y[i] > 0 ? dy[i] : dy[i] * (y[i] + 1.0);
  }
  return dx;
}

inline Tensor tanh(const Tensor& x) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
  return y;
}

// ---------------------------------------------------------------------------
// layout helpers

/// [C,H,W] -> [H,W,C]
inline Tensor chw_to_hwc(const Tensor& x) {
  const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
  Tensor y({H, W, C});
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t i = 0; i < H; ++i) {
      for (std::size_t j = 0; j < W; ++j) y.at(i, j, c) = x.at(c, i, j);
    }
  }
  return y;
}

/// [H,W,C] -> [C,H,W]
inline Tensor hwc_to_chw(const Tensor& x) {
  const std::size_t H = x.dim(0), W = x.dim(1), C = x.dim(2);
  Tensor y({C, H, W});
  for (std::size_t i = 0; i < H; ++i) {
    for (std::size_t j = 0; j < W; ++j) {
      for (std::size_t c = 0; c < C; ++c) y.at(c, i, j) = x.at(i, j, c);
    }
  }
  return y;
}

}  // namespace textspotter::ndops
