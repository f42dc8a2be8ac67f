// Copyright (C) 2026 The TextSpotter Authors
// SPDX-License-Identifier: Apache-2.0
//
// Brute-force reference computations used only by tests. Nothing here calls
// into the library's numeric kernels.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

inline Matrix matmul_bias(const Matrix& x, const Matrix& W, const std::vector<double>& b) {
  Matrix y(x.size(), std::vector<double>(W[0].size(), 0.0));
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < W[0].size(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < W.size(); ++k) s += x[i][k] * W[k][j];
      y[i][j] = s + b[j];
    }
  }
  return y;
}

// x[c][h][w], k[f][c][i][j]
using Volume = std::vector<std::vector<std::vector<double>>>;
using Kernel = std::vector<Volume>;

inline Volume conv2d(const Volume& x, const Kernel& k, std::size_t sh, std::size_t sw,
                     std::size_t ph, std::size_t pw, std::size_t dh = 1, std::size_t dw = 1) {
  const long C = static_cast<long>(x.size()), H = static_cast<long>(x[0].size()),
             W = static_cast<long>(x[0][0].size());
  const long F = static_cast<long>(k.size()), kh = static_cast<long>(k[0][0].size()),
             kw = static_cast<long>(k[0][0][0].size());
  const long eh = (kh - 1) * static_cast<long>(dh) + 1, ew = (kw - 1) * static_cast<long>(dw) + 1;
  const long Ho = (H + 2 * static_cast<long>(ph) - eh) / static_cast<long>(sh) + 1;
  const long Wo = (W + 2 * static_cast<long>(pw) - ew) / static_cast<long>(sw) + 1;
  Volume y(F, std::vector<std::vector<double>>(Ho, std::vector<double>(Wo, 0.0)));
  for (long f = 0; f < F; ++f)
    for (long oy = 0; oy < Ho; ++oy)
      for (long ox = 0; ox < Wo; ++ox) {
        double s = 0.0;
        for (long c = 0; c < C; ++c)
          for (long i = 0; i < kh; ++i)
            for (long j = 0; j < kw; ++j) {
              const long iy =
                  oy * static_cast<long>(sh) + i * static_cast<long>(dh) - static_cast<long>(ph);
              const long ix =
                  ox * static_cast<long>(sw) + j * static_cast<long>(dw) - static_cast<long>(pw);
              if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
              s += x[c][iy][ix] * k[f][c][i][j];
            }
        y[f][oy][ox] = s;
      }
  return y;
}

inline std::vector<double> softmax(const std::vector<double>& z) {
  std::vector<double> e(z.size());
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += (e[i] = std::exp(z[i]));
  for (double& v : e) v /= s;
  return e;
}

inline double sig(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Scalar LSTM cell. Wx[d][4m], Wh[m][4m], b[4m]; gates i, f, g, o.
struct Lstm {
  Matrix Wx, Wh;
  std::vector<double> b;
};

inline void lstm_step(const Lstm& p, const std::vector<double>& x, std::vector<double>& h,
                      std::vector<double>& c) {
  const std::size_t m = h.size();
  std::vector<double> hn(m), cn(m);
  for (std::size_t u = 0; u < m; ++u) {
    double zi = p.b[u], zf = p.b[m + u], zg = p.b[2 * m + u], zo = p.b[3 * m + u];
    for (std::size_t k = 0; k < x.size(); ++k) {
      zi += x[k] * p.Wx[k][u];
      zf += x[k] * p.Wx[k][m + u];
      zg += x[k] * p.Wx[k][2 * m + u];
      zo += x[k] * p.Wx[k][3 * m + u];
    }
    for (std::size_t k = 0; k < m; ++k) {
      zi += h[k] * p.Wh[k][u];
      zf += h[k] * p.Wh[k][m + u];
      zg += h[k] * p.Wh[k][2 * m + u];
      zo += h[k] * p.Wh[k][3 * m + u];
    }
    cn[u] = sig(zf) * c[u] + sig(zi) * std::tanh(zg);
    hn[u] = sig(zo) * std::tanh(cn[u]);
  }
  h = hn;
  c = cn;
}

struct P2 {
  double x, y;
};

inline bool inside_convex(const std::array<P2, 4>& q, P2 p) {
  bool pos = false, neg = false;
  for (std::size_t i = 0; i < 4; ++i) {
    const P2 a = q[i], b = q[(i + 1) % 4];
    const double c = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    if (c > 0) pos = true;
    if (c < 0) neg = true;
  }
  return !(pos && neg);
}

// Monte Carlo estimate of the area of a convex quad and of the IoU of two.
inline double mc_area(const std::array<P2, 4>& q, std::size_t samples, std::uint64_t seed) {
  double x0 = q[0].x, x1 = x0, y0 = q[0].y, y1 = y0;
  for (auto p : q) {
    x0 = std::min(x0, p.x); x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y); y1 = std::max(y1, p.y);
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(x0, x1), uy(y0, y1);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < samples; ++i) hit += inside_convex(q, {ux(rng), uy(rng)});
  return (x1 - x0) * (y1 - y0) * static_cast<double>(hit) / static_cast<double>(samples);
}

inline double mc_iou(const std::array<P2, 4>& a, const std::array<P2, 4>& b,
                     std::size_t samples, std::uint64_t seed) {
  double x0 = a[0].x, x1 = x0, y0 = a[0].y, y1 = y0;
  for (const auto* q : {&a, &b})
    for (auto p : *q) {
      x0 = std::min(x0, p.x); x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y); y1 = std::max(y1, p.y);
    }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(x0, x1), uy(y0, y1);
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    const P2 p{ux(rng), uy(rng)};
    const bool ia = inside_convex(a, p), ib = inside_convex(b, p);
    inter += ia && ib;
    uni += ia || ib;
  }
  return uni ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

inline unsigned levenshtein(const std::string& a, const std::string& b) {
  std::vector<std::vector<unsigned>> d(a.size() + 1, std::vector<unsigned>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = static_cast<unsigned>(i);
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = static_cast<unsigned>(j);
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                          d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0u : 1u)});
  return d[a.size()][b.size()];
}

}  // namespace oracle
