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

// Inference kernels for the layer types a CAM-compatible CNN needs. All
// functions are pure; accumulation happens in double and results are stored
// as float.

#ifndef CAMLENS_KERNELS_HPP
#define CAMLENS_KERNELS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "camlens/tensor.hpp"

namespace camlens {

enum class Padding { kValid, kSame };

enum class ActivationKind { kRelu, kRelu6 };

inline std::string_view to_string(Padding p) {
  return p == Padding::kSame ? "same" : "valid";
}

inline std::string_view to_string(ActivationKind a) {
  return a == ActivationKind::kRelu6 ? "relu6" : "relu";
}

/// Parameters shared by conv2d and depthwise_conv2d. The kernel is
/// (kh, kw, in_ch, out_ch) for a full convolution and (kh, kw, ch, 1) for a
/// depthwise one.
struct ConvParams {
  Tensor kernel;
  Tensor bias;
  std::size_t stride = 1;
  Padding padding = Padding::kValid;
};

/// Output extent and leading pad of one spatial axis.
struct AxisGeometry {
  std::size_t out = 0;
  std::size_t pad_before = 0;
};

/// "same" pads so out = ceil(in / stride), with any odd cell of padding placed
/// after (bottom/right). "valid" gives floor((in - k) / stride) + 1.
inline AxisGeometry conv_axis(std::size_t in, std::size_t k,
                              std::size_t stride, Padding padding) {
  if (stride == 0) throw ArgumentError("stride must be >= 1");
  AxisGeometry g;
  if (padding == Padding::kSame) {
    g.out = (in + stride - 1) / stride;
    const std::size_t needed = (g.out - 1) * stride + k;
    const std::size_t total = needed > in ? needed - in : 0;
    g.pad_before = total / 2;
  } else {
    if (in < k) {
      throw ShapeError("valid convolution output dimension <= 0 (input " +
                       std::to_string(in) + ", kernel " + std::to_string(k) +
                       ")");
    }
    g.out = (in - k) / stride + 1;
  }
  return g;
}

namespace detail {

inline void check_conv(const Tensor& input, const ConvParams& params,
                       bool depthwise) {
  require_rank(input, 3, "convolution input");
  require_rank(params.kernel, 4, "convolution kernel");
  if (params.stride == 0) throw ArgumentError("stride must be >= 1");
  const Shape& k = params.kernel.shape();
  if (k[2] != input.channels()) {
    throw ShapeError("kernel expects " + std::to_string(k[2]) +
                     " input channels, input has " +
                     std::to_string(input.channels()));
  }
  if (depthwise && k[3] != 1) {
    throw ShapeError("depthwise kernel must have shape (kh, kw, ch, 1), got " +
                     shape_to_string(k));
  }
  const std::size_t out_ch = depthwise ? k[2] : k[3];
  if (params.bias.rank() != 1 || params.bias.size() != out_ch) {
    throw ShapeError("bias must have length " + std::to_string(out_ch) +
                     ", got " + shape_to_string(params.bias.shape()));
  }
}

// Maps output index o with kernel offset k to an input index, or -1 if the
// tap falls into zero padding.
inline long input_index(std::size_t o, std::size_t k, std::size_t stride,
                        std::size_t pad, std::size_t in) {
  const long i = static_cast<long>(o * stride + k) - static_cast<long>(pad);
  return (i < 0 || i >= static_cast<long>(in)) ? -1 : i;
}

}  // namespace detail

inline Tensor conv2d(const Tensor& input, const ConvParams& params) {
  detail::check_conv(input, params, /*depthwise=*/false);
  const Shape& ks = params.kernel.shape();
  const std::size_t kh = ks[0], kw = ks[1], in_ch = ks[2], out_ch = ks[3];
  const AxisGeometry gy =
      conv_axis(input.height(), kh, params.stride, params.padding);
  const AxisGeometry gx =
      conv_axis(input.width(), kw, params.stride, params.padding);

  Tensor out = Tensor::hwc(gy.out, gx.out, out_ch);
  const float* kernel = params.kernel.data().data();
  std::vector<double> acc(out_ch);
  for (std::size_t oy = 0; oy < gy.out; ++oy) {
    for (std::size_t ox = 0; ox < gx.out; ++ox) {
      for (std::size_t oc = 0; oc < out_ch; ++oc) acc[oc] = params.bias[oc];
      for (std::size_t ky = 0; ky < kh; ++ky) {
        const long iy = detail::input_index(oy, ky, params.stride,
                                            gy.pad_before, input.height());
        if (iy < 0) continue;
        for (std::size_t kx = 0; kx < kw; ++kx) {
          const long ix = detail::input_index(ox, kx, params.stride,
                                              gx.pad_before, input.width());
          if (ix < 0) continue;
          const float* src = input.pixel(iy, ix);
          const float* w = kernel + (ky * kw + kx) * in_ch * out_ch;
          for (std::size_t ic = 0; ic < in_ch; ++ic) {
            const double v = src[ic];
            const float* wrow = w + ic * out_ch;
            for (std::size_t oc = 0; oc < out_ch; ++oc) acc[oc] += v * wrow[oc];
          }
        }
      }
      float* dst = &out.at(oy, ox, 0);
      for (std::size_t oc = 0; oc < out_ch; ++oc) {
        dst[oc] = static_cast<float>(acc[oc]);
      }
    }
  }
  return out;
}

inline Tensor depthwise_conv2d(const Tensor& input, const ConvParams& params) {
  detail::check_conv(input, params, /*depthwise=*/true);
  const Shape& ks = params.kernel.shape();
  const std::size_t kh = ks[0], kw = ks[1], ch = ks[2];
  const AxisGeometry gy =
      conv_axis(input.height(), kh, params.stride, params.padding);
  const AxisGeometry gx =
      conv_axis(input.width(), kw, params.stride, params.padding);

  Tensor out = Tensor::hwc(gy.out, gx.out, ch);
  const float* kernel = params.kernel.data().data();
  std::vector<double> acc(ch);
  for (std::size_t oy = 0; oy < gy.out; ++oy) {
    for (std::size_t ox = 0; ox < gx.out; ++ox) {
      for (std::size_t c = 0; c < ch; ++c) acc[c] = params.bias[c];
      for (std::size_t ky = 0; ky < kh; ++ky) {
        const long iy = detail::input_index(oy, ky, params.stride,
                                            gy.pad_before, input.height());
        if (iy < 0) continue;
        for (std::size_t kx = 0; kx < kw; ++kx) {
          const long ix = detail::input_index(ox, kx, params.stride,
                                              gx.pad_before, input.width());
          if (ix < 0) continue;
          const float* src = input.pixel(iy, ix);
          const float* w = kernel + (ky * kw + kx) * ch;
          for (std::size_t c = 0; c < ch; ++c) {
            acc[c] += static_cast<double>(src[c]) * w[c];
          }
        }
      }
      float* dst = &out.at(oy, ox, 0);
      for (std::size_t c = 0; c < ch; ++c) dst[c] = static_cast<float>(acc[c]);
    }
  }
  return out;
}

/// Per-channel parameters of inference-mode batch normalization.
struct BatchNormParams {
  Tensor gamma;
  Tensor beta;
  Tensor mean;
  Tensor variance;
  float epsilon = 1e-3f;
};

/// y = gamma * (x - mean) / sqrt(variance + epsilon) + beta, with the channel
/// being the last axis of `input`.
inline Tensor batch_norm(const Tensor& input, const BatchNormParams& p) {
  if (!(p.epsilon > 0.0f)) {
    throw ArgumentError("batch_norm epsilon must be positive");
  }
  const std::size_t ch = input.shape().back();
  for (const Tensor* t : {&p.gamma, &p.beta, &p.mean, &p.variance}) {
    if (t->rank() != 1 || t->size() != ch) {
      throw ShapeError("batch_norm parameters must have length " +
                       std::to_string(ch) + ", got " +
                       shape_to_string(t->shape()));
    }
  }
  std::vector<double> scale(ch), shift(ch);
  for (std::size_t c = 0; c < ch; ++c) {
    const double inv =
        1.0 / std::sqrt(static_cast<double>(p.variance[c]) + p.epsilon);
    scale[c] = p.gamma[c] * inv;
    shift[c] = p.beta[c] - p.mean[c] * scale[c];
  }
  Tensor out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) {
    const std::size_t c = i % ch;
    out[i] = static_cast<float>(input[i] * scale[c] + shift[c]);
  }
  return out;
}

inline Tensor activation(const Tensor& input, ActivationKind kind) {
  Tensor out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) {
    const float v = std::max(0.0f, input[i]);
    out[i] = kind == ActivationKind::kRelu6 ? std::min(v, 6.0f) : v;
  }
  return out;
}

/// output[k] = mean over (y, x) of input[y, x, k].
inline Tensor global_average_pool(const Tensor& input) {
  require_rank(input, 3, "global_average_pool");
  const std::size_t hw = input.height() * input.width();
  const std::size_t ch = input.channels();
  std::vector<double> sums(ch, 0.0);
  for (std::size_t p = 0; p < hw; ++p) {
    for (std::size_t c = 0; c < ch; ++c) sums[c] += input[p * ch + c];
  }
  Tensor out({ch});
  for (std::size_t c = 0; c < ch; ++c) {
    out[c] = static_cast<float>(sums[c] / static_cast<double>(hw));
  }
  return out;
}

/// output[c] = sum_k weights[k][c] * input[k] + bias[c]; weights is (n, m).
inline Tensor dense(const Tensor& input, const Tensor& weights,
                    const Tensor& bias) {
  require_rank(input, 1, "dense input");
  require_rank(weights, 2, "dense weights");
  require_rank(bias, 1, "dense bias");
  const std::size_t n = weights.dim(0), m = weights.dim(1);
  if (input.size() != n || bias.size() != m) {
    throw ShapeError("dense expects input " + std::to_string(n) +
                     " and bias " + std::to_string(m) + ", got " +
                     shape_to_string(input.shape()) + " and " +
                     shape_to_string(bias.shape()));
  }
  std::vector<double> acc(bias.values().begin(), bias.values().end());
  for (std::size_t k = 0; k < n; ++k) {
    const double v = input[k];
    const float* row = weights.data().data() + k * m;
    for (std::size_t c = 0; c < m; ++c) acc[c] += v * row[c];
  }
  Tensor out({m});
  for (std::size_t c = 0; c < m; ++c) out[c] = static_cast<float>(acc[c]);
  return out;
}

inline Tensor softmax(const Tensor& input) {
  if (input.empty()) throw ShapeError("softmax of an empty tensor");
  require_rank(input, 1, "softmax");
  const float max = *std::max_element(input.data().begin(), input.data().end());
  std::vector<double> e(input.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < input.size(); ++i) {
    e[i] = std::exp(static_cast<double>(input[i]) - max);
    sum += e[i];
  }
  Tensor out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) {
    out[i] = static_cast<float>(e[i] / sum);
  }
  return out;
}

/// Bilinear resize with half-pixel centers: src = (dst + 0.5) * in / out - 0.5,
/// clamped to the valid range.
inline Tensor resize_bilinear(const Tensor& input, std::size_t out_h,
                              std::size_t out_w) {
  require_rank(input, 3, "resize_bilinear");
  if (out_h == 0 || out_w == 0) {
    throw ArgumentError("resize target dimensions must be positive");
  }
  const std::size_t in_h = input.height(), in_w = input.width();
  const std::size_t ch = input.channels();

  struct Tap {
    std::size_t lo, hi;
    double frac;
  };
  auto taps = [](std::size_t in, std::size_t out) {
    std::vector<Tap> t(out);
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (std::size_t d = 0; d < out; ++d) {
      double s = (static_cast<double>(d) + 0.5) * scale - 0.5;
      s = std::clamp(s, 0.0, static_cast<double>(in - 1));
      const auto lo = static_cast<std::size_t>(std::floor(s));
      t[d] = {lo, std::min(lo + 1, in - 1), s - static_cast<double>(lo)};
    }
    return t;
  };
  const std::vector<Tap> ty = taps(in_h, out_h);
  const std::vector<Tap> tx = taps(in_w, out_w);

  Tensor out = Tensor::hwc(out_h, out_w, ch);
  for (std::size_t y = 0; y < out_h; ++y) {
    for (std::size_t x = 0; x < out_w; ++x) {
      for (std::size_t c = 0; c < ch; ++c) {
        const double a = input.at(ty[y].lo, tx[x].lo, c);
        const double b = input.at(ty[y].lo, tx[x].hi, c);
        const double d = input.at(ty[y].hi, tx[x].lo, c);
        const double e = input.at(ty[y].hi, tx[x].hi, c);
        const double top = a + tx[x].frac * (b - a);
        const double bottom = d + tx[x].frac * (e - d);
        out.at(y, x, c) = static_cast<float>(top + ty[y].frac * (bottom - top));
      }
    }
  }
  return out;
}

}  // namespace camlens

#endif  // CAMLENS_KERNELS_HPP
