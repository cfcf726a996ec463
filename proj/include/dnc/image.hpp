#pragma once

#include <cstdint>
#include <vector>

namespace dnc {

// Row-major single-channel float raster. Pixel (x, y) lives at y*width + x;
// y runs top to bottom.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(int w, int h, float fill = 0.0f)
      : width(w), height(h), pixels(size_t(w) * size_t(h), fill) {}

  float& at(int x, int y) { return pixels[size_t(y) * size_t(width) + size_t(x)]; }
  float at(int x, int y) const {
    return pixels[size_t(y) * size_t(width) + size_t(x)];
  }
  bool same_size(const Image& o) const {
    return width == o.width && height == o.height;
  }
};

// Boolean raster with the same layout as Image.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> bits;

  Mask() = default;
  Mask(int w, int h, bool fill = false)
      : width(w), height(h), bits(size_t(w) * size_t(h), fill ? 1 : 0) {}

  void set(int x, int y, bool v) {
    bits[size_t(y) * size_t(width) + size_t(x)] = v ? 1 : 0;
  }
  bool get(int x, int y) const {
    return bits[size_t(y) * size_t(width) + size_t(x)] != 0;
  }
  bool same_size(const Image& o) const {
    return width == o.width && height == o.height;
  }
};

}  // namespace dnc
