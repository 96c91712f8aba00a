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

// Deterministic synthetic models. The desk-scale fixture (8x8x3 input, 2x2
// CAM grid, 4 classes) ships under data/fixture; the reference-scale model
// mirrors a MobileNet-style 224x224x3 -> 7x7xK -> 1000-way classifier with
// random weights and is generated on demand.

#ifndef CAMLENS_FIXTURES_HPP
#define CAMLENS_FIXTURES_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "camlens/image.hpp"
#include "camlens/manifest.hpp"
#include "camlens/model.hpp"
#include "camlens/weights.hpp"

namespace camlens {

/// Portable uniform floats: std::mt19937 is fully specified, the standard
/// distributions are not.
class SeededRng {
 public:
  explicit SeededRng(std::uint32_t seed) : engine_(seed) {}

  /// Uniform in [lo, hi).
  float uniform(float lo, float hi) {
    const double u = static_cast<double>(engine_() >> 8) * (1.0 / 16777216.0);
    return static_cast<float>(lo + (hi - lo) * u);
  }

  std::uint32_t next() { return engine_(); }

  Tensor tensor(Shape shape, float lo, float hi) {
    Tensor t(std::move(shape));
    for (float& v : t.data()) v = uniform(lo, hi);
    return t;
  }

 private:
  std::mt19937 engine_;
};

/// Manifest plus the tensors it references.
struct ModelFiles {
  ModelManifest manifest;
  WeightMap weights;

  std::string manifest_text() const { return manifest_to_json(manifest).dump(2) + "\n"; }
  std::vector<std::uint8_t> weights_blob() const { return write_weights(weights); }
  Model load() const { return load_model(manifest_text(), weights_blob()); }

  void save(const std::filesystem::path& manifest_path,
            const std::filesystem::path& weights_path) const {
    std::ofstream m(manifest_path, std::ios::binary);
    m << manifest_text();
    const auto blob = weights_blob();
    std::ofstream w(weights_path, std::ios::binary);
    w.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
    if (!m || !w) throw Error("failed to write model files");
  }
};

/// Incrementally assembles a manifest and its weights.
class ModelBuilder {
 public:
  ModelBuilder(std::string name, InputShape input, std::uint32_t seed)
      : rng_(seed) {
    files_.manifest.name = std::move(name);
    files_.manifest.input = input;
    channels_ = input.channels;
  }

  SeededRng& rng() { return rng_; }
  std::size_t channels() const { return channels_; }

  ModelBuilder& conv(std::size_t k, std::size_t out_ch, std::size_t stride,
                     Padding padding = Padding::kSame) {
    const std::string p = prefix("conv");
    const float scale = 1.0f / std::sqrt(static_cast<float>(k * k * channels_));
    add(p + "/kernel", rng_.tensor({k, k, channels_, out_ch}, -scale, scale));
    add(p + "/bias", rng_.tensor({out_ch}, -0.1f, 0.1f));
    layer(LayerKind::kConv, stride, padding, {{"kernel", p + "/kernel"}, {"bias", p + "/bias"}});
    channels_ = out_ch;
    return *this;
  }

  ModelBuilder& depthwise(std::size_t k, std::size_t stride, Padding padding = Padding::kSame) {
    const std::string p = prefix("depthwise");
    const float scale = 1.0f / static_cast<float>(k);
    add(p + "/kernel", rng_.tensor({k, k, channels_, 1}, -scale, scale));
    add(p + "/bias", rng_.tensor({channels_}, -0.1f, 0.1f));
    layer(LayerKind::kDepthwiseConv, stride, padding,
          {{"kernel", p + "/kernel"}, {"bias", p + "/bias"}});
    return *this;
  }

  ModelBuilder& batch_norm(float epsilon = 1e-3f) {
    const std::string p = prefix("bn");
    add(p + "/gamma", rng_.tensor({channels_}, 0.5f, 1.5f));
    add(p + "/beta", rng_.tensor({channels_}, -0.2f, 0.2f));
    add(p + "/mean", rng_.tensor({channels_}, -0.2f, 0.2f));
    add(p + "/variance", rng_.tensor({channels_}, 0.5f, 2.0f));
    LayerSpec spec;
    spec.kind = LayerKind::kBatchNorm;
    spec.epsilon = epsilon;
    spec.weights = {{"gamma", p + "/gamma"}, {"beta", p + "/beta"},
                    {"mean", p + "/mean"}, {"variance", p + "/variance"}};
    files_.manifest.layers.push_back(spec);
    return *this;
  }

  ModelBuilder& act(ActivationKind kind) {
    LayerSpec spec;
    spec.kind = LayerKind::kActivation;
    spec.activation = kind;
    files_.manifest.layers.push_back(spec);
    return *this;
  }

  /// Appends global_average_pool -> dense -> softmax and the labels.
  ModelBuilder& classifier(std::vector<std::string> labels) {
    const std::size_t classes = labels.size();
    const float scale = 1.0f / std::sqrt(static_cast<float>(channels_));
    add("classifier/kernel", rng_.tensor({channels_, classes}, -scale, scale));
    add("classifier/bias", rng_.tensor({classes}, -0.1f, 0.1f));
    LayerSpec gap;
    gap.kind = LayerKind::kGlobalAveragePool;
    LayerSpec fc;
    fc.kind = LayerKind::kDense;
    fc.weights = {{"kernel", "classifier/kernel"}, {"bias", "classifier/bias"}};
    LayerSpec sm;
    sm.kind = LayerKind::kSoftmax;
    files_.manifest.layers.insert(files_.manifest.layers.end(), {gap, fc, sm});
    files_.manifest.labels = std::move(labels);
    return *this;
  }

  Tensor& weight(const std::string& name) { return files_.weights.at(name); }

  ModelFiles build() const { return files_; }

 private:
  std::string prefix(const char* kind) {
    return std::string(kind) + std::to_string(files_.manifest.layers.size());
  }

  void add(const std::string& name, Tensor t) { files_.weights[name] = std::move(t); }

  void layer(LayerKind kind, std::size_t stride, Padding padding,
             std::map<std::string, std::string> weights) {
    LayerSpec spec;
    spec.kind = kind;
    spec.stride = stride;
    spec.padding = padding;
    spec.weights = std::move(weights);
    files_.manifest.layers.push_back(std::move(spec));
  }

  ModelFiles files_;
  SeededRng rng_;
  std::size_t channels_ = 0;
};

inline constexpr std::uint32_t kFixtureSeed = 20210513;

inline const std::vector<std::string>& fixture_labels() {
  static const std::vector<std::string> labels = {"remote control", "sandal", "snorkel",
                                                  "analog clock"};
  return labels;
}

/// 8x8x3 -> conv s2 -> bn -> relu6 -> depthwise s2 -> pointwise -> relu6 ->
/// 2x2x6 -> GAP -> dense(4) -> softmax.
///
/// Channel 0 of the last convolution ignores its input and sits at a constant
/// 5.0; class 0 weighs it +0.8 and every other class -0.4. The remaining
/// classifier weights are scaled down so they can shift a logit gap by at most
/// 5 * 6 * 0.082 per side, less than the 6.0 margin channel 0 provides, so
/// class 0 wins on every input.
inline ModelFiles make_fixture_model(std::uint32_t seed = kFixtureSeed) {
  ModelBuilder b("camlens-fixture", {8, 8, 3}, seed);
  b.conv(3, 8, 2).batch_norm().act(ActivationKind::kRelu6);
  b.depthwise(3, 2);
  b.conv(1, 6, 1).act(ActivationKind::kRelu6);
  const std::string last_conv = "conv4";
  b.weight(last_conv + "/bias")[0] = 5.0f;
  Tensor& pw = b.weight(last_conv + "/kernel");
  for (std::size_t ic = 0; ic < 8; ++ic) pw[ic * 6 + 0] = 0.0f;
  b.classifier(fixture_labels());
  Tensor& w = b.weight("classifier/kernel");
  for (std::size_t k = 0; k < 6; ++k) {
    for (std::size_t c = 0; c < 4; ++c) w[k * 4 + c] *= 0.2f;
  }
  w[0] = 0.8f;
  for (std::size_t c = 1; c < 4; ++c) w[c] = -0.4f;
  return b.build();
}

inline std::vector<std::string> numbered_labels(std::size_t count) {
  std::vector<std::string> labels;
  labels.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "class_%04zu", i);
    labels.emplace_back(buf);
  }
  return labels;
}

/// MobileNet-shaped stack with random weights: five stride-2 stages take
/// 224x224 to a 7x7 grid, followed by a 1000-way classifier.
inline ModelFiles make_reference_scale_model(std::uint32_t seed = kFixtureSeed,
                                             std::size_t classes = 1000) {
  ModelBuilder b("reference-scale-synthetic", {224, 224, 3}, seed);
  b.conv(3, 8, 2).batch_norm().act(ActivationKind::kRelu6);
  const std::size_t widths[] = {16, 32, 32, 64};
  b.depthwise(3, 2).batch_norm().act(ActivationKind::kRelu6);
  b.conv(1, widths[0], 1).batch_norm().act(ActivationKind::kRelu6);
  for (std::size_t i = 1; i < 4; ++i) {
    b.depthwise(3, 2).act(ActivationKind::kRelu6);
    b.conv(1, widths[i], 1).batch_norm().act(ActivationKind::kRelu6);
  }
  b.classifier(numbered_labels(classes));
  return b.build();
}

/// 16x16 test card: a warm gradient background with a bright square in the
/// upper-left quadrant.
inline RgbImage make_fixture_image(std::size_t width = 16, std::size_t height = 16) {
  RgbImage img(width, height);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      std::uint8_t* px = img.at(x, y);
      px[0] = static_cast<std::uint8_t>(40 + 200 * x / width);
      px[1] = static_cast<std::uint8_t>(30 + 150 * y / height);
      px[2] = 90;
      if (x >= width / 8 && x < width / 2 && y >= height / 8 && y < height / 2) {
        px[0] = px[1] = px[2] = 250;
      }
    }
  }
  return img;
}

}  // namespace camlens

#endif  // CAMLENS_FIXTURES_HPP
