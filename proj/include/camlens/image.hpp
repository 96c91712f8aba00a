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

#ifndef CAMLENS_IMAGE_HPP
#define CAMLENS_IMAGE_HPP

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "camlens/kernels.hpp"
#include "camlens/tensor.hpp"

namespace camlens {

class DecodeError : public Error {
 public:
  using Error::Error;
};

/// 8-bit RGB image, row-major, three bytes per pixel.
struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  RgbImage() = default;
  RgbImage(std::size_t w, std::size_t h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(w * h * 3, fill) {}

  std::uint8_t* at(std::size_t x, std::size_t y) {
    return &pixels[(y * width + x) * 3];
  }
  const std::uint8_t* at(std::size_t x, std::size_t y) const {
    return &pixels[(y * width + x) * 3];
  }

  bool operator==(const RgbImage&) const = default;
};

enum class ImageFormat { kUnknown, kPng, kPpm };

inline ImageFormat sniff_image_format(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSignature, 8) == 0) {
    return ImageFormat::kPng;
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return ImageFormat::kPpm;
  return ImageFormat::kUnknown;
}

inline constexpr std::uint64_t kMaxDecodedPixels = 64ull << 20;

namespace detail {

class PpmHeaderReader {
 public:
  explicit PpmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  unsigned long number(const char* what) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
      throw DecodeError(std::string("PPM (P6): truncated or malformed header, expected ") + what);
    }
    unsigned long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (v > 1'000'000) throw DecodeError(std::string("PPM (P6): ") + what + " too large");
    }
    return v;
  }

  // Exactly one whitespace byte separates the header from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw DecodeError("PPM (P6): truncated header");
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

inline RgbImage decode_ppm(std::span<const std::uint8_t> bytes) {
  PpmHeaderReader r(bytes);
  const unsigned long width = r.number("width");
  const unsigned long height = r.number("height");
  const unsigned long maxval = r.number("maxval");
  if (width == 0 || height == 0) throw DecodeError("PPM (P6): zero image dimension");
  if (maxval == 0 || maxval > 65535) throw DecodeError("PPM (P6): maxval out of range");
  if (static_cast<std::uint64_t>(width) * height > kMaxDecodedPixels) {
    throw DecodeError("PPM (P6): image too large");
  }
  const std::size_t offset = r.raster_offset();
  const std::size_t sample_bytes = maxval > 255 ? 2 : 1;
  const std::size_t samples = width * height * 3;
  if (bytes.size() - offset < samples * sample_bytes) {
    throw DecodeError("PPM (P6): truncated pixel data");
  }
  RgbImage img(width, height);
  for (std::size_t i = 0; i < samples; ++i) {
    unsigned v = sample_bytes == 2
                     ? (bytes[offset + 2 * i] << 8 | bytes[offset + 2 * i + 1])
                     : bytes[offset + i];
    if (v > maxval) throw DecodeError("PPM (P6): sample exceeds maxval");
    img.pixels[i] = maxval == 255 ? static_cast<std::uint8_t>(v)
                                  : static_cast<std::uint8_t>((v * 255 + maxval / 2) / maxval);
  }
  return img;
}

inline RgbImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    std::string msg = std::string("PNG: ") + image.message;
    png_image_free(&image);
    throw DecodeError(msg);
  }
  if (static_cast<std::uint64_t>(image.width) * image.height > kMaxDecodedPixels) {
    png_image_free(&image);
    throw DecodeError("PNG: image too large");
  }
  image.format = PNG_FORMAT_RGBA;
  std::vector<std::uint8_t> rgba(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, rgba.data(), 0, nullptr)) {
    std::string msg = std::string("PNG: ") + image.message;
    png_image_free(&image);
    throw DecodeError(msg);
  }
  RgbImage img(image.width, image.height);
  for (std::size_t p = 0; p < img.width * img.height; ++p) {
    std::memcpy(&img.pixels[3 * p], &rgba[4 * p], 3);
  }
  return img;
}

}  // namespace detail

/// Decodes a PNG or binary PPM (P6) payload. Any alpha channel is dropped.
inline RgbImage decode_image(std::span<const std::uint8_t> bytes) {
  switch (sniff_image_format(bytes)) {
    case ImageFormat::kPng:
      return detail::decode_png(bytes);
    case ImageFormat::kPpm:
      return detail::decode_ppm(bytes);
    default:
      throw DecodeError("unsupported image format (expected PNG or binary PPM 'P6')");
  }
}

inline std::vector<std::uint8_t> encode_ppm(const RgbImage& img) {
  const std::string header = "P6\n" + std::to_string(img.width) + " " +
                             std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

inline std::vector<std::uint8_t> encode_png(const RgbImage& img) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, img.pixels.data(), 0, nullptr)) {
    throw Error(std::string("PNG encode failed: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, img.pixels.data(), 0, nullptr)) {
    throw Error(std::string("PNG encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

inline Tensor image_to_tensor(const RgbImage& img) {
  Tensor t = Tensor::hwc(img.height, img.width, 3);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) t[i] = img.pixels[i];
  return t;
}

/// Resizes to (target_h, target_w) and maps v -> v / 127.5 - 1 into [-1, 1].
inline Tensor preprocess(const RgbImage& img, std::size_t target_h,
                         std::size_t target_w) {
  if (target_h == 0 || target_w == 0) {
    throw ArgumentError("preprocess target dimensions must be positive");
  }
  Tensor t = resize_bilinear(image_to_tensor(img), target_h, target_w);
  for (float& v : t.data()) {
    v = std::clamp(static_cast<float>(v / 127.5 - 1.0), -1.0f, 1.0f);
  }
  return t;
}

}  // namespace camlens

#endif  // CAMLENS_IMAGE_HPP
