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

#ifndef CAMLENS_TENSOR_HPP
#define CAMLENS_TENSOR_HPP

#include <charconv>
#include <cstddef>
#include <cstdlib>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace camlens {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when tensor shapes do not fit an operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Raised when a scalar argument is outside its domain (epsilon, alpha, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

using Shape = std::vector<std::size_t>;

inline std::string shape_to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i != 0) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

inline std::size_t shape_volume(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

/// Dense row-major float32 tensor. Rank-3 tensors are (height, width,
/// channels); kernels are rank 4 (kh, kw, in, out); classifier matrices are
/// rank 2 (in, out).
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape, float fill = 0.0f)
      : shape_(std::move(shape)), data_(checked_volume(shape_), fill) {}

  Tensor(Shape shape, std::vector<float> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != checked_volume(shape_)) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_to_string(shape_));
    }
  }

  static Tensor hwc(std::size_t h, std::size_t w, std::size_t c,
                    float fill = 0.0f) {
    return Tensor({h, w, c}, fill);
  }

  static Tensor vector(std::vector<float> values) {
    const std::size_t n = values.size();
    return Tensor({n}, std::move(values));
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  const std::vector<float>& values() const { return data_; }

  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  // Rank-3 accessors.
  std::size_t height() const { return shape_[0]; }
  std::size_t width() const { return shape_[1]; }
  std::size_t channels() const { return shape_[2]; }

  float& at(std::size_t y, std::size_t x, std::size_t c) {
    return data_[(y * shape_[1] + x) * shape_[2] + c];
  }
  float at(std::size_t y, std::size_t x, std::size_t c) const {
    return data_[(y * shape_[1] + x) * shape_[2] + c];
  }

  /// Pointer to the channel vector at (y, x) of a rank-3 tensor.
  const float* pixel(std::size_t y, std::size_t x) const {
    return data_.data() + (y * shape_[1] + x) * shape_[2];
  }

  bool operator==(const Tensor&) const = default;

 private:
  static std::size_t checked_volume(const Shape& shape) {
    if (shape.empty()) throw ShapeError("tensor rank must be at least 1");
    for (std::size_t d : shape) {
      if (d == 0) {
        throw ShapeError("tensor dimensions must be positive, got " +
                         shape_to_string(shape));
      }
    }
    return shape_volume(shape);
  }

  Shape shape_;
  std::vector<float> data_;
};

/// The double closest to the shortest decimal that round-trips to `v`, so
/// 0.45f widens to 0.45 rather than 0.449999988079071.
inline double decimal_value(float v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf) - 1, v);
  *res.ptr = '\0';
  return std::strtod(buf, nullptr);
}

inline void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(what) + " expects a rank-" +
                     std::to_string(rank) + " tensor, got " +
                     shape_to_string(t.shape()));
  }
}

}  // namespace camlens

#endif  // CAMLENS_TENSOR_HPP
