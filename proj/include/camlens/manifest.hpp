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

#ifndef CAMLENS_MANIFEST_HPP
#define CAMLENS_MANIFEST_HPP

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "camlens/kernels.hpp"
#include "camlens/tensor.hpp"

namespace camlens {

enum class ModelErrorKind {
  kParse,
  kUnknownLayer,
  kMissingWeight,
  kWeightShape,
  kCamIncompatible,
  kShape,
};

/// Raised while loading or validating a model.
class ModelError : public Error {
 public:
  ModelError(ModelErrorKind kind, const std::string& message)
      : Error(message), kind_(kind) {}
  ModelErrorKind kind() const { return kind_; }

 private:
  ModelErrorKind kind_;
};

enum class LayerKind {
  kConv,
  kDepthwiseConv,
  kBatchNorm,
  kActivation,
  kGlobalAveragePool,
  kDense,
  kSoftmax,
};

inline constexpr std::pair<LayerKind, std::string_view> kLayerKindNames[] = {
    {LayerKind::kConv, "conv"},
    {LayerKind::kDepthwiseConv, "depthwise_conv"},
    {LayerKind::kBatchNorm, "batch_norm"},
    {LayerKind::kActivation, "activation"},
    {LayerKind::kGlobalAveragePool, "global_average_pool"},
    {LayerKind::kDense, "dense"},
    {LayerKind::kSoftmax, "softmax"},
};

inline std::string_view to_string(LayerKind kind) {
  for (const auto& [k, name] : kLayerKindNames) {
    if (k == kind) return name;
  }
  return "?";
}

inline std::optional<LayerKind> parse_layer_kind(std::string_view name) {
  for (const auto& [k, n] : kLayerKindNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

/// One layer of the manifest. Weight references map a role ("kernel",
/// "bias", "gamma", ...) to a tensor name in the weight blob.
struct LayerSpec {
  LayerKind kind = LayerKind::kConv;
  std::size_t stride = 1;
  Padding padding = Padding::kSame;
  ActivationKind activation = ActivationKind::kRelu;
  float epsilon = 1e-3f;
  std::map<std::string, std::string> weights;

  bool operator==(const LayerSpec&) const = default;
};

struct InputShape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;

  bool operator==(const InputShape&) const = default;
};

struct ModelManifest {
  std::string name;
  InputShape input;
  std::vector<std::string> labels;
  std::vector<LayerSpec> layers;

  bool operator==(const ModelManifest&) const = default;
};

/// Weight roles each layer kind must reference. Conv biases are optional and
/// default to zero.
inline std::vector<std::string_view> required_weight_roles(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv:
    case LayerKind::kDepthwiseConv:
      return {"kernel"};
    case LayerKind::kBatchNorm:
      return {"gamma", "beta", "mean", "variance"};
    case LayerKind::kDense:
      return {"kernel", "bias"};
    default:
      return {};
  }
}

inline bool is_conv(LayerKind kind) {
  return kind == LayerKind::kConv || kind == LayerKind::kDepthwiseConv;
}

/// Checks the classifier tail required for class activation maps: a single
/// global_average_pool feeding the only dense layer, followed by softmax as
/// the final layer, with at least one convolution before the pool. Returns
/// the violation, or nullopt when the architecture is compatible.
inline std::optional<std::string> validate_cam_compatible(
    const ModelManifest& manifest) {
  const auto& layers = manifest.layers;
  if (layers.empty()) return "model has no layers";

  auto count = [&](LayerKind k) {
    return std::count_if(layers.begin(), layers.end(),
                         [k](const LayerSpec& l) { return l.kind == k; });
  };
  auto first = [&](LayerKind k) {
    return std::find_if(layers.begin(), layers.end(),
                        [k](const LayerSpec& l) { return l.kind == k; }) -
           layers.begin();
  };

  const auto dense_count = count(LayerKind::kDense);
  const auto gap_count = count(LayerKind::kGlobalAveragePool);
  if (dense_count == 0) return "missing dense classifier layer";
  if (dense_count > 1) return "multiple dense layers";
  if (gap_count > 1) return "multiple global average pool layers";
  if (gap_count == 1 && first(LayerKind::kDense) < first(LayerKind::kGlobalAveragePool)) {
    return "dense layer before global average pool";
  }
  if (layers.back().kind != LayerKind::kSoftmax) {
    return "model must end with softmax";
  }
  if (count(LayerKind::kSoftmax) > 1) return "multiple softmax layers";
  const std::size_t n = layers.size();
  if (n < 2 || layers[n - 2].kind != LayerKind::kDense) {
    return "softmax must directly follow the dense classifier";
  }
  if (n < 3 || layers[n - 3].kind != LayerKind::kGlobalAveragePool) {
    return "missing global average pool before classifier";
  }
  const bool has_conv = std::any_of(layers.begin(), layers.end() - 3,
                                    [](const LayerSpec& l) { return is_conv(l.kind); });
  if (!has_conv) return "no convolutional layer before global average pool";
  return std::nullopt;
}

namespace detail {

[[noreturn]] inline void parse_fail(const std::string& what) {
  throw ModelError(ModelErrorKind::kParse, "manifest: " + what);
}

inline std::size_t positive_field(const nlohmann::json& obj, const char* key,
                                  const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_number_unsigned() || obj[key].get<std::size_t>() == 0) {
    parse_fail(where + "." + key + " must be a positive integer");
  }
  return obj[key].get<std::size_t>();
}

inline LayerSpec parse_layer(const nlohmann::json& j, std::size_t index) {
  const std::string where = "layers[" + std::to_string(index) + "]";
  if (!j.is_object()) parse_fail(where + " must be an object");
  if (!j.contains("kind") || !j["kind"].is_string()) {
    parse_fail(where + ".kind must be a string");
  }
  const std::string kind_name = j["kind"].get<std::string>();
  const auto kind = parse_layer_kind(kind_name);
  if (!kind) {
    throw ModelError(ModelErrorKind::kUnknownLayer,
                     "manifest: " + where + " has unknown layer kind '" + kind_name + "'");
  }
  LayerSpec layer;
  layer.kind = *kind;

  const nlohmann::json params = j.value("params", nlohmann::json::object());
  if (!params.is_object()) parse_fail(where + ".params must be an object");
  if (is_conv(layer.kind)) {
    layer.stride = params.contains("stride") ? positive_field(params, "stride", where + ".params") : 1;
    const std::string padding = params.value("padding", std::string("same"));
    if (padding == "same") {
      layer.padding = Padding::kSame;
    } else if (padding == "valid") {
      layer.padding = Padding::kValid;
    } else {
      parse_fail(where + ".params.padding must be \"same\" or \"valid\"");
    }
  } else if (layer.kind == LayerKind::kActivation) {
    const std::string act = params.value("activation", std::string());
    if (act == "relu") {
      layer.activation = ActivationKind::kRelu;
    } else if (act == "relu6") {
      layer.activation = ActivationKind::kRelu6;
    } else {
      parse_fail(where + ".params.activation must be \"relu\" or \"relu6\"");
    }
  } else if (layer.kind == LayerKind::kBatchNorm) {
    if (params.contains("epsilon")) {
      if (!params["epsilon"].is_number()) parse_fail(where + ".params.epsilon must be a number");
      layer.epsilon = params["epsilon"].get<float>();
    }
    if (!(layer.epsilon > 0.0f)) parse_fail(where + ".params.epsilon must be positive");
  }

  const nlohmann::json weights = j.value("weights", nlohmann::json::object());
  if (!weights.is_object()) parse_fail(where + ".weights must be an object");
  for (const auto& [role, name] : weights.items()) {
    if (!name.is_string()) parse_fail(where + ".weights." + role + " must be a string");
    layer.weights[role] = name.get<std::string>();
  }
  for (std::string_view role : required_weight_roles(layer.kind)) {
    if (!layer.weights.contains(std::string(role))) {
      parse_fail(where + " (" + std::string(to_string(layer.kind)) +
                 ") is missing weight reference '" + std::string(role) + "'");
    }
  }
  return layer;
}

}  // namespace detail

/// Parses the JSON manifest. Structural errors raise ModelError; the CAM
/// architecture check is separate (validate_cam_compatible).
inline ModelManifest parse_manifest(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    detail::parse_fail(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) detail::parse_fail("top level must be an object");

  ModelManifest m;
  m.name = j.value("name", std::string());
  if (!j.contains("input") || !j["input"].is_object()) {
    detail::parse_fail("input must be an object");
  }
  m.input.height = detail::positive_field(j["input"], "height", "input");
  m.input.width = detail::positive_field(j["input"], "width", "input");
  m.input.channels = detail::positive_field(j["input"], "channels", "input");

  if (!j.contains("labels") || !j["labels"].is_array()) {
    detail::parse_fail("labels must be an array");
  }
  for (const auto& label : j["labels"]) {
    if (!label.is_string()) detail::parse_fail("labels must be strings");
    m.labels.push_back(label.get<std::string>());
  }
  if (!j.contains("layers") || !j["layers"].is_array()) {
    detail::parse_fail("layers must be an array");
  }
  for (std::size_t i = 0; i < j["layers"].size(); ++i) {
    m.layers.push_back(detail::parse_layer(j["layers"][i], i));
  }
  return m;
}

inline nlohmann::json manifest_to_json(const ModelManifest& m) {
  nlohmann::json layers = nlohmann::json::array();
  for (const LayerSpec& l : m.layers) {
    nlohmann::json layer = {{"kind", to_string(l.kind)}};
    nlohmann::json params = nlohmann::json::object();
    if (is_conv(l.kind)) {
      params["stride"] = l.stride;
      params["padding"] = to_string(l.padding);
    } else if (l.kind == LayerKind::kActivation) {
      params["activation"] = to_string(l.activation);
    } else if (l.kind == LayerKind::kBatchNorm) {
      params["epsilon"] = l.epsilon;
    }
    if (!params.empty()) layer["params"] = params;
    if (!l.weights.empty()) layer["weights"] = l.weights;
    layers.push_back(std::move(layer));
  }
  return {
      {"name", m.name},
      {"input", {{"height", m.input.height}, {"width", m.input.width}, {"channels", m.input.channels}}},
      {"labels", m.labels},
      {"layers", std::move(layers)},
  };
}

}  // namespace camlens

#endif  // CAMLENS_MANIFEST_HPP
