#pragma once

#include <cassert>
#include <cstdint>
#include <vector>

#include "splat/errors.hpp"

namespace splat {

// Dense row-major image, interleaved channels. (0,0) is the top-left pixel.
template <typename T>
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<T> data;

  Image() = default;
  Image(int w, int h, int c, T fill = T{})
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {
    if (w < 0 || h < 0 || c < 1) throw InvalidInputError("image: bad dimensions");
  }

  static Image zeros(int w, int h, int c = 1) { return Image(w, h, c, T{}); }

  T& at(int y, int x, int c = 0) {
    assert(x >= 0 && x < width && y >= 0 && y < height && c >= 0 && c < channels);
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  const T& at(int y, int x, int c = 0) const {
    assert(x >= 0 && x < width && y >= 0 && y < height && c >= 0 && c < channels);
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }

  bool same_shape(const Image& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }
};

using ImageD = Image<double>;
using MaskImage = Image<std::uint8_t>;

inline void require_same_shape(const ImageD& a, const ImageD& b, const char* what) {
  if (!a.same_shape(b)) throw InvalidInputError(std::string(what) + ": image shape mismatch");
}

}  // namespace splat
