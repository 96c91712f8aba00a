// Copyright 2026 The CamLens Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Straight-line reference implementations used only by tests. They work on
// plain nested std::vector / flat arrays with explicit index arithmetic and
// share no code with the library kernels.

#ifndef CAMLENS_TESTS_ORACLES_HPP
#define CAMLENS_TESTS_ORACLES_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;

struct Volume {
  int h = 0, w = 0, c = 0;
  Vec v;  // [y][x][c]
  double& operator()(int y, int x, int ch) { return v[(y * w + x) * c + ch]; }
  double operator()(int y, int x, int ch) const { return v[(y * w + x) * c + ch]; }
};

inline Volume make_volume(int h, int w, int c, const std::vector<float>& data) {
  Volume out{h, w, c, Vec(data.begin(), data.end())};
  return out;
}

// Output size and leading pad: SAME -> ceil(in/s) with the odd pad cell at the
// end, VALID -> floor((in-k)/s)+1.
inline void geometry(int in, int k, int s, bool same, int& out, int& pad) {
  if (same) {
    out = (in + s - 1) / s;
    int total = (out - 1) * s + k - in;
    if (total < 0) total = 0;
    pad = total / 2;
  } else {
    out = (in - k) / s + 1;
    pad = 0;
  }
}

// kernel indexed [ky][kx][ic][oc] (flattened), bias [oc].
inline Volume conv2d(const Volume& x, const std::vector<float>& kernel, int kh, int kw, int oc_n,
                     const std::vector<float>& bias, int s, bool same) {
  int oh, ow, ph, pw;
  geometry(x.h, kh, s, same, oh, ph);
  geometry(x.w, kw, s, same, ow, pw);
  Volume y{oh, ow, oc_n, Vec(static_cast<size_t>(oh * ow * oc_n))};
  for (int oy = 0; oy < oh; ++oy)
    for (int ox = 0; ox < ow; ++ox)
      for (int oc = 0; oc < oc_n; ++oc) {
        double acc = bias[oc];
        for (int ky = 0; ky < kh; ++ky)
          for (int kx = 0; kx < kw; ++kx)
            for (int ic = 0; ic < x.c; ++ic) {
              const int iy = oy * s + ky - ph;
              const int ix = ox * s + kx - pw;
              if (iy < 0 || ix < 0 || iy >= x.h || ix >= x.w) continue;
              acc += x(iy, ix, ic) * kernel[((ky * kw + kx) * x.c + ic) * oc_n + oc];
            }
        y(oy, ox, oc) = acc;
      }
  return y;
}

// kernel indexed [ky][kx][c][0].
inline Volume depthwise(const Volume& x, const std::vector<float>& kernel, int kh, int kw,
                        const std::vector<float>& bias, int s, bool same) {
  int oh, ow, ph, pw;
  geometry(x.h, kh, s, same, oh, ph);
  geometry(x.w, kw, s, same, ow, pw);
  Volume y{oh, ow, x.c, Vec(static_cast<size_t>(oh * ow * x.c))};
  for (int ch = 0; ch < x.c; ++ch)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        double acc = bias[ch];
        for (int ky = 0; ky < kh; ++ky)
          for (int kx = 0; kx < kw; ++kx) {
            const int iy = oy * s + ky - ph;
            const int ix = ox * s + kx - pw;
            if (iy < 0 || ix < 0 || iy >= x.h || ix >= x.w) continue;
            acc += x(iy, ix, ch) * kernel[(ky * kw + kx) * x.c + ch];
          }
        y(oy, ox, ch) = acc;
      }
  return y;
}

inline double batch_norm_scalar(double x, double gamma, double beta, double mean, double var,
                                double eps) {
  return gamma * (x - mean) / std::sqrt(var + eps) + beta;
}

inline Vec global_average_pool(const Volume& x) {
  Vec out(x.c, 0.0);
  for (int ch = 0; ch < x.c; ++ch) {
    double sum = 0.0;
    for (int y = 0; y < x.h; ++y)
      for (int xx = 0; xx < x.w; ++xx) sum += x(y, xx, ch);
    out[ch] = sum / (x.h * x.w);
  }
  return out;
}

// weights [n][m] flattened.
inline Vec matvec(const Vec& in, const std::vector<float>& weights, const std::vector<float>& bias) {
  const size_t m = bias.size();
  Vec out(m);
  for (size_t c = 0; c < m; ++c) {
    double acc = bias[c];
    for (size_t k = 0; k < in.size(); ++k) acc += weights[k * m + c] * in[k];
    out[c] = acc;
  }
  return out;
}

inline Vec softmax(const Vec& x) {
  Vec e(x.size());
  double sum = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    e[i] = std::exp(x[i]);
    sum += e[i];
  }
  for (double& v : e) v /= sum;
  return e;
}

// Half-pixel-center bilinear sample evaluated per output pixel.
inline double bilinear_pixel(const Volume& x, int oy, int ox, int ch, int out_h, int out_w) {
  auto src = [](int d, int in, int out) {
    double s = (d + 0.5) * static_cast<double>(in) / out - 0.5;
    if (s < 0) s = 0;
    if (s > in - 1) s = in - 1;
    return s;
  };
  const double sy = src(oy, x.h, out_h), sx = src(ox, x.w, out_w);
  const int y0 = static_cast<int>(sy), x0 = static_cast<int>(sx);
  const int y1 = y0 + 1 < x.h ? y0 + 1 : y0;
  const int x1 = x0 + 1 < x.w ? x0 + 1 : x0;
  const double fy = sy - y0, fx = sx - x0;
  return (1 - fy) * ((1 - fx) * x(y0, x0, ch) + fx * x(y0, x1, ch)) +
         fy * ((1 - fx) * x(y1, x0, ch) + fx * x(y1, x1, ch));
}

inline Volume resize(const Volume& x, int out_h, int out_w) {
  Volume y{out_h, out_w, x.c, Vec(static_cast<size_t>(out_h * out_w * x.c))};
  for (int oy = 0; oy < out_h; ++oy)
    for (int ox = 0; ox < out_w; ++ox)
      for (int ch = 0; ch < x.c; ++ch) y(oy, ox, ch) = bilinear_pixel(x, oy, ox, ch, out_h, out_w);
  return y;
}

// M_c(y, x) = sum_k w[k][c] f(y, x, k)
inline Vec cam(const Volume& f, const std::vector<float>& weights, int classes, int c) {
  Vec out(static_cast<size_t>(f.h * f.w), 0.0);
  for (int y = 0; y < f.h; ++y)
    for (int x = 0; x < f.w; ++x)
      for (int k = 0; k < f.c; ++k) out[y * f.w + x] += weights[k * classes + c] * f(y, x, k);
  return out;
}

}  // namespace oracle

#endif  // CAMLENS_TESTS_ORACLES_HPP
