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

#ifndef CAMLENS_MODEL_HPP
#define CAMLENS_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "camlens/kernels.hpp"
#include "camlens/manifest.hpp"
#include "camlens/tensor.hpp"
#include "camlens/weights.hpp"

namespace camlens {

class Model;
inline Model load_model(std::string_view manifest_text,
                        std::span<const std::uint8_t> weights_blob);

/// Outputs of one forward pass. `last_conv_activations` is the (H_f, W_f, K)
/// volume entering global average pooling.
struct ForwardResult {
  Tensor logits;
  Tensor probabilities;
  Tensor last_conv_activations;
};

struct Prediction {
  std::size_t index = 0;
  std::string label;
  float probability = 0.0f;

  bool operator==(const Prediction&) const = default;
};

/// A layer with its weights resolved from the blob.
struct BoundLayer {
  LayerSpec spec;
  ConvParams conv;
  BatchNormParams norm;
  Shape output_shape;
  std::size_t parameter_count = 0;
};

/// An immutable, validated CAM-compatible model.
class Model {
 public:
  const ModelManifest& manifest() const { return manifest_; }
  const WeightMap& weights() const { return weights_; }
  const std::vector<BoundLayer>& layers() const { return layers_; }
  const std::vector<std::string>& labels() const { return manifest_.labels; }

  /// Classifier matrix (K, C) and bias (C).
  const Tensor& classifier_weights() const { return classifier_weights_; }
  const Tensor& classifier_bias() const { return classifier_bias_; }

  std::size_t feature_channels() const { return classifier_weights_.dim(0); }
  std::size_t class_count() const { return classifier_weights_.dim(1); }
  std::size_t grid_height() const { return grid_height_; }
  std::size_t grid_width() const { return grid_width_; }

  ForwardResult forward(const Tensor& image) const {
    const InputShape& in = manifest_.input;
    if (image.shape() != Shape{in.height, in.width, in.channels}) {
      throw ShapeError("model input must be " +
                       shape_to_string({in.height, in.width, in.channels}) +
                       ", got " + shape_to_string(image.shape()));
    }
    ForwardResult result;
    Tensor x = image;
    for (const BoundLayer& layer : layers_) {
      switch (layer.spec.kind) {
        case LayerKind::kConv:
          x = conv2d(x, layer.conv);
          break;
        case LayerKind::kDepthwiseConv:
          x = depthwise_conv2d(x, layer.conv);
          break;
        case LayerKind::kBatchNorm:
          x = batch_norm(x, layer.norm);
          break;
        case LayerKind::kActivation:
          x = activation(x, layer.spec.activation);
          break;
        case LayerKind::kGlobalAveragePool:
          result.last_conv_activations = x;
          x = global_average_pool(x);
          break;
        case LayerKind::kDense:
          x = dense(x, classifier_weights_, classifier_bias_);
          result.logits = x;
          break;
        case LayerKind::kSoftmax:
          x = softmax(x);
          break;
      }
    }
    result.probabilities = std::move(x);
    return result;
  }

 private:
  friend Model load_model(std::string_view, std::span<const std::uint8_t>);

  ModelManifest manifest_;
  WeightMap weights_;
  std::vector<BoundLayer> layers_;
  Tensor classifier_weights_;
  Tensor classifier_bias_;
  std::size_t grid_height_ = 0;
  std::size_t grid_width_ = 0;
};

namespace detail {

inline std::string shape_pattern(const Shape& pattern) {
  std::string out = "[";
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    if (i != 0) out += "x";
    out += pattern[i] == 0 ? std::string("?") : std::to_string(pattern[i]);
  }
  return out + "]";
}

class Binder {
 public:
  Binder(const WeightMap& weights, std::size_t index, const LayerSpec& spec)
      : weights_(weights), index_(index), spec_(spec) {}

  const Tensor& get(const std::string& role, const Shape& expected) const {
    const std::string& name = spec_.weights.at(role);
    auto it = weights_.find(name);
    if (it == weights_.end()) {
      throw ModelError(ModelErrorKind::kMissingWeight,
                       "missing weight tensor '" + name + "' referenced by " +
                           where() + " as " + role);
    }
    if (it->second.shape() != expected) {
      throw ModelError(ModelErrorKind::kWeightShape,
                       "weight tensor '" + name + "' (" + where() + " " + role +
                           ") has shape " + shape_to_string(it->second.shape()) +
                           ", expected " + shape_to_string(expected));
    }
    return it->second;
  }

  /// Like get() but only the rank and the positions of `pattern` that are
  /// non-zero are enforced.
  const Tensor& get_like(const std::string& role, const Shape& pattern) const {
    const std::string& name = spec_.weights.at(role);
    auto it = weights_.find(name);
    if (it == weights_.end()) return get(role, pattern);
    const Shape& actual = it->second.shape();
    bool ok = actual.size() == pattern.size();
    for (std::size_t i = 0; ok && i < pattern.size(); ++i) {
      ok = pattern[i] == 0 || pattern[i] == actual[i];
    }
    if (!ok) {
      throw ModelError(ModelErrorKind::kWeightShape,
                       "weight tensor '" + name + "' (" + where() + " " + role +
                           ") has shape " + shape_to_string(actual) +
                           ", expected " + shape_pattern(pattern));
    }
    return it->second;
  }

  std::string where() const {
    return "layer " + std::to_string(index_) + " (" +
           std::string(to_string(spec_.kind)) + ")";
  }

 private:
  const WeightMap& weights_;
  std::size_t index_;
  const LayerSpec& spec_;
};

}  // namespace detail

/// Parses and validates the manifest, then binds every referenced tensor from
/// the weight blob with shape inference through the layer sequence.
inline Model load_model(std::string_view manifest_text,
                        std::span<const std::uint8_t> weights_blob) {
  Model model;
  model.manifest_ = parse_manifest(manifest_text);
  if (auto violation = validate_cam_compatible(model.manifest_)) {
    throw ModelError(ModelErrorKind::kCamIncompatible,
                     "model is not CAM-compatible: " + *violation);
  }
  try {
    model.weights_ = read_weights(weights_blob);
  } catch (const WeightFormatError& e) {
    throw ModelError(ModelErrorKind::kParse, e.what());
  }

  const InputShape& in = model.manifest_.input;
  std::size_t h = in.height, w = in.width, c = in.channels;
  bool pooled = false;
  for (std::size_t i = 0; i < model.manifest_.layers.size(); ++i) {
    const LayerSpec& spec = model.manifest_.layers[i];
    detail::Binder bind(model.weights_, i, spec);
    BoundLayer layer;
    layer.spec = spec;
    switch (spec.kind) {
      case LayerKind::kConv:
      case LayerKind::kDepthwiseConv: {
        const bool depthwise = spec.kind == LayerKind::kDepthwiseConv;
        const Tensor& kernel = bind.get_like(
            "kernel", depthwise ? Shape{0, 0, c, 1} : Shape{0, 0, c, 0});
        const std::size_t out_ch = depthwise ? c : kernel.dim(3);
        layer.conv.kernel = kernel;
        layer.conv.bias = spec.weights.contains("bias")
                              ? bind.get("bias", {out_ch})
                              : Tensor({out_ch});
        layer.conv.stride = spec.stride;
        layer.conv.padding = spec.padding;
        try {
          h = conv_axis(h, kernel.dim(0), spec.stride, spec.padding).out;
          w = conv_axis(w, kernel.dim(1), spec.stride, spec.padding).out;
        } catch (const ShapeError& e) {
          throw ModelError(ModelErrorKind::kShape, bind.where() + ": " + e.what());
        }
        c = out_ch;
        layer.parameter_count = kernel.size() + layer.conv.bias.size();
        break;
      }
      case LayerKind::kBatchNorm:
        layer.norm.gamma = bind.get("gamma", {c});
        layer.norm.beta = bind.get("beta", {c});
        layer.norm.mean = bind.get("mean", {c});
        layer.norm.variance = bind.get("variance", {c});
        layer.norm.epsilon = spec.epsilon;
        layer.parameter_count = 4 * c;
        break;
      case LayerKind::kActivation:
      case LayerKind::kSoftmax:
        break;
      case LayerKind::kGlobalAveragePool:
        model.grid_height_ = h;
        model.grid_width_ = w;
        pooled = true;
        break;
      case LayerKind::kDense: {
        const Tensor& kernel = bind.get_like("kernel", {c, 0});
        const std::size_t classes = kernel.dim(1);
        model.classifier_weights_ = kernel;
        model.classifier_bias_ = bind.get("bias", {classes});
        if (model.manifest_.labels.size() != classes) {
          throw ModelError(ModelErrorKind::kShape,
                           "manifest lists " + std::to_string(model.manifest_.labels.size()) +
                               " labels but the dense layer outputs " +
                               std::to_string(classes) + " classes");
        }
        c = classes;
        layer.parameter_count = kernel.size() + classes;
        break;
      }
    }
    layer.output_shape = pooled ? Shape{c} : Shape{h, w, c};
    model.layers_.push_back(std::move(layer));
  }
  return model;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline Model load_model_files(const std::filesystem::path& manifest_path,
                              const std::filesystem::path& weights_path) {
  const std::vector<std::uint8_t> manifest = read_file_bytes(manifest_path);
  const std::vector<std::uint8_t> blob = read_file_bytes(weights_path);
  return load_model(
      std::string_view(reinterpret_cast<const char*>(manifest.data()), manifest.size()),
      blob);
}

/// The k most probable classes, descending; ties go to the lower index.
inline std::vector<Prediction> top_k(const Tensor& probabilities,
                                     std::span<const std::string> labels,
                                     std::size_t k) {
  const std::size_t classes = probabilities.size();
  if (k == 0 || k > classes) {
    throw ArgumentError("top_k: k must be in [1, " + std::to_string(classes) +
                        "], got " + std::to_string(k));
  }
  if (labels.size() != classes) {
    throw ShapeError("top_k: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(classes) + " classes");
  }
  std::vector<std::size_t> order(classes);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return probabilities[a] > probabilities[b];
  });
  std::vector<Prediction> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    out.push_back({order[i], labels[order[i]], probabilities[order[i]]});
  }
  return out;
}

}  // namespace camlens

#endif  // CAMLENS_MODEL_HPP
