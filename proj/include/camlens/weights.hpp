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

// CAMW weight blob:
//
//   "CAMW" | version u32 = 1 | tensor_count u32
//   per tensor: name_len u32 | name (UTF-8) | rank u32 | dims u32 x rank |
//               data f32 x prod(dims)
//
// All integers and floats are little-endian; records are packed.

#ifndef CAMLENS_WEIGHTS_HPP
#define CAMLENS_WEIGHTS_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "camlens/tensor.hpp"

namespace camlens {

class WeightFormatError : public Error {
 public:
  using Error::Error;
};

/// Named weight tensors, ordered by name so serialization is deterministic.
using WeightMap = std::map<std::string, Tensor>;

inline constexpr char kWeightMagic[4] = {'C', 'A', 'M', 'W'};
inline constexpr std::uint32_t kWeightVersion = 1;

namespace detail {

class BlobReader {
 public:
  explicit BlobReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw WeightFormatError(std::string("weight blob truncated while reading ") +
                              what + " at offset " + std::to_string(pos_));
    }
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  std::uint32_t u32(const char* what) {
    auto b = take(4, what);
    return static_cast<std::uint32_t>(b[0]) |
           static_cast<std::uint32_t>(b[1]) << 8 |
           static_cast<std::uint32_t>(b[2]) << 16 |
           static_cast<std::uint32_t>(b[3]) << 24;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

}  // namespace detail

inline WeightMap read_weights(std::span<const std::uint8_t> blob) {
  detail::BlobReader r(blob);
  auto magic = r.take(4, "magic");
  if (std::memcmp(magic.data(), kWeightMagic, 4) != 0) {
    throw WeightFormatError("weight blob does not start with magic \"CAMW\"");
  }
  const std::uint32_t version = r.u32("version");
  if (version != kWeightVersion) {
    throw WeightFormatError("unsupported weight blob version " +
                            std::to_string(version));
  }
  const std::uint32_t count = r.u32("tensor count");
  WeightMap weights;
  for (std::uint32_t t = 0; t < count; ++t) {
    const std::uint32_t name_len = r.u32("name length");
    auto name_bytes = r.take(name_len, "tensor name");
    std::string name(name_bytes.begin(), name_bytes.end());
    const std::uint32_t rank = r.u32("rank");
    if (rank == 0 || rank > 8) {
      throw WeightFormatError("tensor '" + name + "' has unsupported rank " +
                              std::to_string(rank));
    }
    Shape shape(rank);
    std::uint64_t volume = 1;
    for (auto& d : shape) {
      d = r.u32("dimension");
      if (d == 0) {
        throw WeightFormatError("tensor '" + name + "' has a zero dimension");
      }
      volume *= d;
      if (volume * 4 > r.remaining()) {
        throw WeightFormatError("weight blob truncated in tensor '" + name + "'");
      }
    }
    auto raw = r.take(static_cast<std::size_t>(volume) * 4, "tensor data");
    std::vector<float> data(static_cast<std::size_t>(volume));
    for (std::size_t i = 0; i < data.size(); ++i) {
      const std::uint8_t* p = raw.data() + 4 * i;
      const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) |
                                 static_cast<std::uint32_t>(p[1]) << 8 |
                                 static_cast<std::uint32_t>(p[2]) << 16 |
                                 static_cast<std::uint32_t>(p[3]) << 24;
      data[i] = std::bit_cast<float>(bits);
    }
    if (!weights.emplace(name, Tensor(std::move(shape), std::move(data))).second) {
      throw WeightFormatError("duplicate tensor name '" + name + "'");
    }
  }
  if (r.remaining() != 0) {
    throw WeightFormatError("weight blob has " + std::to_string(r.remaining()) +
                            " trailing bytes");
  }
  return weights;
}

inline std::vector<std::uint8_t> write_weights(const WeightMap& weights) {
  std::vector<std::uint8_t> out(std::begin(kWeightMagic), std::end(kWeightMagic));
  detail::put_u32(out, kWeightVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(weights.size()));
  for (const auto& [name, tensor] : weights) {
    detail::put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    detail::put_u32(out, static_cast<std::uint32_t>(tensor.rank()));
    for (std::size_t d : tensor.shape()) {
      detail::put_u32(out, static_cast<std::uint32_t>(d));
    }
    for (float v : tensor.data()) detail::put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

}  // namespace camlens

#endif  // CAMLENS_WEIGHTS_HPP
