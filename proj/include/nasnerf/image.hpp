#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <vector>

namespace nasnerf {

// Interleaved float image, row-major, values nominally in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<float> data;

  Image() = default;
  Image(int w, int h, int c = 3, float fill = 0.0f)
      : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

  float& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  float at(int x, int y, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  bool same_shape(const Image& o) const { return width == o.width && height == o.height && channels == o.channels; }
};

// 8-bit PNG (gray, RGB or RGBA) to float [0,1]; channel count preserved.
Image read_png(const std::filesystem::path& path);
// Writes 8-bit RGB/RGBA; values are clamped and rounded. Output bytes depend
// only on pixel values.
void write_png(const Image& image, const std::filesystem::path& path);

// Little-endian PFM ("PF" colour / "Pf" gray), bottom-to-top rows.
void write_pfm(const Image& image, const std::filesystem::path& path);
Image read_pfm(const std::filesystem::path& path);

// Composites an RGBA image onto `background` (straight alpha) and drops alpha.
Image composite_alpha(const Image& rgba, const std::array<float, 3>& background);

// Box-filter downsample by an integer factor.
Image downsample(const Image& image, int factor);

}  // namespace nasnerf
