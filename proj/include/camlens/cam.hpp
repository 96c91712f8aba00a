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

// Class activation maps.
//
// For a network ending in global average pooling and a single dense layer,
// the logit of class c is
//
//   S_c = sum_k w[k][c] * F_k + b_c,   F_k = mean_{x,y} f_k(x, y)
//
// so the per-location contribution M_c(x, y) = sum_k w[k][c] * f_k(x, y)
// averages to S_c - b_c. M_c is the raw map; the bias is spatially uniform and
// is left out.

#ifndef CAMLENS_CAM_HPP
#define CAMLENS_CAM_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "camlens/image.hpp"
#include "camlens/tensor.hpp"

namespace camlens {

inline constexpr float kDefaultAlpha = 0.45f;
inline constexpr float kDefaultThreshold = 0.6f;
inline constexpr std::size_t kDefaultTopK = 3;

/// Per-class map over the last convolutional grid, row-major (height, width).
struct ClassActivationMap {
  std::size_t class_index = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> raw;
  std::vector<float> normalized;

  float raw_at(std::size_t y, std::size_t x) const { return raw[y * width + x]; }
  float normalized_at(std::size_t y, std::size_t x) const {
    return normalized[y * width + x];
  }
};

/// Boolean grid of cells whose normalized activation reaches the threshold.
struct CamMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> cells;

  bool active(std::size_t y, std::size_t x) const { return cells[y * width + x] != 0; }
  std::size_t active_count() const {
    return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), 1));
  }
  bool operator==(const CamMask&) const = default;
};

/// raw[y][x] = sum_k classifier_weights[k][class_index] * activations[y][x][k].
inline ClassActivationMap compute_cam(const Tensor& activations,
                                      const Tensor& classifier_weights,
                                      std::size_t class_index) {
  require_rank(activations, 3, "compute_cam activations");
  require_rank(classifier_weights, 2, "compute_cam classifier weights");
  const std::size_t k_count = activations.channels();
  const std::size_t classes = classifier_weights.dim(1);
  if (classifier_weights.dim(0) != k_count) {
    throw ShapeError("classifier has " + std::to_string(classifier_weights.dim(0)) +
                     " input channels but activations have " + std::to_string(k_count));
  }
  if (class_index >= classes) {
    throw ArgumentError("class index " + std::to_string(class_index) +
                        " out of range [0, " + std::to_string(classes) + ")");
  }
  ClassActivationMap cam;
  cam.class_index = class_index;
  cam.height = activations.height();
  cam.width = activations.width();
  cam.raw.resize(cam.height * cam.width);
  const float* w = classifier_weights.data().data();
  for (std::size_t p = 0; p < cam.raw.size(); ++p) {
    const float* f = activations.data().data() + p * k_count;
    double sum = 0.0;
    for (std::size_t k = 0; k < k_count; ++k) {
      sum += static_cast<double>(w[k * classes + class_index]) * f[k];
    }
    cam.raw[p] = static_cast<float>(sum);
  }
  return cam;
}

/// Min-max scales raw into [0, 1]. Negative values are kept; a constant map
/// normalizes to all zeros.
inline ClassActivationMap normalize_cam(ClassActivationMap cam) {
  cam.normalized.assign(cam.raw.size(), 0.0f);
  if (cam.raw.empty()) return cam;
  const auto [lo, hi] = std::minmax_element(cam.raw.begin(), cam.raw.end());
  const double min = *lo, range = static_cast<double>(*hi) - min;
  if (range > 0.0) {
    for (std::size_t i = 0; i < cam.raw.size(); ++i) {
      cam.normalized[i] = static_cast<float>((cam.raw[i] - min) / range);
    }
  }
  return cam;
}

inline CamMask threshold_mask(const ClassActivationMap& cam, float threshold) {
  if (!(threshold >= 0.0f && threshold <= 1.0f)) {
    throw ArgumentError("threshold must be within [0, 1]");
  }
  if (cam.normalized.size() != cam.height * cam.width) {
    throw ArgumentError("threshold_mask needs a normalized map");
  }
  CamMask mask{cam.height, cam.width, std::vector<std::uint8_t>(cam.normalized.size())};
  for (std::size_t i = 0; i < cam.normalized.size(); ++i) {
    mask.cells[i] = cam.normalized[i] >= threshold ? 1 : 0;
  }
  return mask;
}

/// First pixel row/column covered by grid cell `cell` when `pixels` are split
/// into `cells` blocks (floor partition; blocks tile the axis exactly).
inline std::size_t block_start(std::size_t cell, std::size_t cells, std::size_t pixels) {
  return cell * pixels / cells;
}

/// Blends pure red over every pixel of the active cells:
/// out = round((1 - alpha) * pixel + alpha * (255, 0, 0)), evaluated in double
/// with alpha taken at its decimal value and halves rounded up. Other pixels
/// are copied unchanged.
inline RgbImage render_overlay(const RgbImage& image, const CamMask& mask, float alpha) {
  if (!(alpha >= 0.0f && alpha <= 1.0f)) {
    throw ArgumentError("alpha must be within [0, 1]");
  }
  if (mask.height == 0 || mask.width == 0 || mask.cells.size() != mask.height * mask.width) {
    throw ShapeError("overlay mask is empty or malformed");
  }
  static constexpr double kRed[3] = {255.0, 0.0, 0.0};
  const double a = decimal_value(alpha);
  RgbImage out = image;
  for (std::size_t gy = 0; gy < mask.height; ++gy) {
    const std::size_t y0 = block_start(gy, mask.height, image.height);
    const std::size_t y1 = block_start(gy + 1, mask.height, image.height);
    for (std::size_t gx = 0; gx < mask.width; ++gx) {
      if (!mask.active(gy, gx)) continue;
      const std::size_t x0 = block_start(gx, mask.width, image.width);
      const std::size_t x1 = block_start(gx + 1, mask.width, image.width);
      for (std::size_t y = y0; y < y1; ++y) {
        for (std::size_t x = x0; x < x1; ++x) {
          std::uint8_t* px = out.at(x, y);
          for (int c = 0; c < 3; ++c) {
            px[c] = static_cast<std::uint8_t>(std::lround((1.0 - a) * px[c] + a * kRed[c]));
          }
        }
      }
    }
  }
  return out;
}

}  // namespace camlens

#endif  // CAMLENS_CAM_HPP
