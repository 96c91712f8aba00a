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

// The decode -> preprocess -> forward -> top-k -> CAM pipeline shared by the
// CLI and the HTTP service, plus its JSON rendering. Both front ends print
// through classification_to_json so their numeric payloads are identical.

#ifndef CAMLENS_CLASSIFY_HPP
#define CAMLENS_CLASSIFY_HPP

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "camlens/cam.hpp"
#include "camlens/image.hpp"
#include "camlens/model.hpp"

namespace camlens {

struct Classification {
  std::vector<Prediction> predictions;
  /// One normalized map per prediction, same order.
  std::vector<ClassActivationMap> cams;
  std::vector<CamMask> masks;
  Tensor probabilities;
  Tensor last_conv_activations;
  std::size_t grid_height = 0;
  std::size_t grid_width = 0;
  float threshold = kDefaultThreshold;
};

inline Classification classify(const Model& model, const RgbImage& image,
                               std::size_t k = kDefaultTopK,
                               float threshold = kDefaultThreshold) {
  const InputShape& in = model.manifest().input;
  if (in.channels != 3) {
    throw ShapeError("image classification needs a 3-channel model input");
  }
  // Validate before running the network.
  if (!(threshold >= 0.0f && threshold <= 1.0f)) {
    throw ArgumentError("threshold must be within [0, 1]");
  }
  const ForwardResult fwd = model.forward(preprocess(image, in.height, in.width));
  Classification out;
  out.predictions = top_k(fwd.probabilities, model.labels(), k);
  out.probabilities = fwd.probabilities;
  out.last_conv_activations = fwd.last_conv_activations;
  out.grid_height = model.grid_height();
  out.grid_width = model.grid_width();
  out.threshold = threshold;
  for (const Prediction& p : out.predictions) {
    out.cams.push_back(normalize_cam(
        compute_cam(fwd.last_conv_activations, model.classifier_weights(), p.index)));
    out.masks.push_back(threshold_mask(out.cams.back(), threshold));
  }
  return out;
}

/// JSON number carrying the shortest decimal that round-trips to `v`.
inline nlohmann::json json_float(float v) { return decimal_value(v); }

inline nlohmann::json grid_to_json(const std::vector<float>& values, std::size_t height,
                                   std::size_t width) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t y = 0; y < height; ++y) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t x = 0; x < width; ++x) row.push_back(json_float(values[y * width + x]));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline nlohmann::json mask_to_json(const CamMask& mask) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t y = 0; y < mask.height; ++y) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t x = 0; x < mask.width; ++x) row.push_back(mask.active(y, x) ? 1 : 0);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline nlohmann::json prediction_to_json(const Prediction& p) {
  return {{"index", p.index}, {"label", p.label}, {"probability", json_float(p.probability)}};
}

inline nlohmann::json classification_to_json(const Classification& c) {
  nlohmann::json predictions = nlohmann::json::array();
  nlohmann::json cams = nlohmann::json::array();
  nlohmann::json masks = nlohmann::json::array();
  for (const Prediction& p : c.predictions) predictions.push_back(prediction_to_json(p));
  for (const ClassActivationMap& cam : c.cams) {
    cams.push_back(grid_to_json(cam.normalized, cam.height, cam.width));
  }
  for (const CamMask& m : c.masks) masks.push_back(mask_to_json(m));
  return {
      {"grid", {{"h", c.grid_height}, {"w", c.grid_width}}},
      {"threshold", json_float(c.threshold)},
      {"predictions", std::move(predictions)},
      {"cams", std::move(cams)},
      {"masks", std::move(masks)},
  };
}

}  // namespace camlens

#endif  // CAMLENS_CLASSIFY_HPP
