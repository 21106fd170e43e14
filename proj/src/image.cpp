#include "nasnerf/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "nasnerf/error.hpp"

namespace nasnerf {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

Image read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open image " + path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw IoError("not a PNG file: " + path.string());
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng init failed for " + path.string());
  }
  Image img;
  std::vector<png_byte> pixels;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("corrupt PNG: " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_packing(png);
  const int color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_read_update_info(png, info);
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.channels = png_get_channels(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  pixels.resize(stride * img.height);
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y) rows[y] = pixels.data() + y * stride;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);

  img.data.resize(img.pixel_count() * img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (std::size_t i = 0; i < static_cast<std::size_t>(img.width) * img.channels; ++i) {
      img.data[y * static_cast<std::size_t>(img.width) * img.channels + i] = rows[y][i] / 255.0f;
    }
  }
  return img;
}

void write_png(const Image& image, const std::filesystem::path& path) {
  if (image.channels != 3 && image.channels != 4 && image.channels != 1) {
    throw IoError("write_png: unsupported channel count");
  }
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot write image " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng init failed for " + path.string());
  }
  const std::size_t stride = static_cast<std::size_t>(image.width) * image.channels;
  std::vector<png_byte> bytes(stride * image.height);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const float v = std::clamp(image.data[i], 0.0f, 1.0f);
    bytes[i] = static_cast<png_byte>(std::lround(v * 255.0f));
  }
  std::vector<png_bytep> rows(image.height);
  for (int y = 0; y < image.height; ++y) rows[y] = bytes.data() + y * stride;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed writing PNG " + path.string());
  }
  png_init_io(png, fp.get());
  const int color = image.channels == 4 ? PNG_COLOR_TYPE_RGBA
                    : image.channels == 3 ? PNG_COLOR_TYPE_RGB
                                          : PNG_COLOR_TYPE_GRAY;
  png_set_IHDR(png, info, image.width, image.height, 8, color, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_pfm(const Image& image, const std::filesystem::path& path) {
  if (image.channels != 3 && image.channels != 1) throw IoError("write_pfm: needs 1 or 3 channels");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << (image.channels == 3 ? "PF" : "Pf") << '\n' << image.width << ' ' << image.height << "\n-1.0\n";
  const std::size_t stride = static_cast<std::size_t>(image.width) * image.channels;
  for (int y = image.height - 1; y >= 0; --y) {
    out.write(reinterpret_cast<const char*>(image.data.data() + y * stride),
              static_cast<std::streamsize>(stride * sizeof(float)));
  }
  if (!out) throw IoError("failed writing " + path.string());
}

Image read_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::string tag;
  Image img;
  double scale = 0.0;
  in >> tag >> img.width >> img.height >> scale;
  in.get();
  if ((tag != "PF" && tag != "Pf") || scale >= 0.0) throw IoError("unsupported PFM: " + path.string());
  img.channels = tag == "PF" ? 3 : 1;
  const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
  img.data.resize(stride * img.height);
  for (int y = img.height - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(img.data.data() + y * stride), static_cast<std::streamsize>(stride * sizeof(float)));
  }
  if (!in) throw IoError("truncated PFM: " + path.string());
  return img;
}

Image composite_alpha(const Image& rgba, const std::array<float, 3>& background) {
  if (rgba.channels == 3) return rgba;
  if (rgba.channels != 4) throw IoError("composite_alpha: expected RGBA input");
  Image out(rgba.width, rgba.height, 3);
  for (std::size_t p = 0; p < rgba.pixel_count(); ++p) {
    const float a = rgba.data[p * 4 + 3];
    for (int c = 0; c < 3; ++c) out.data[p * 3 + c] = rgba.data[p * 4 + c] * a + background[c] * (1.0f - a);
  }
  return out;
}

Image downsample(const Image& image, int factor) {
  if (factor <= 1) return image;
  Image out(image.width / factor, image.height / factor, image.channels);
  const float norm = 1.0f / static_cast<float>(factor * factor);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      for (int c = 0; c < image.channels; ++c) {
        float s = 0.0f;
        for (int dy = 0; dy < factor; ++dy) {
          for (int dx = 0; dx < factor; ++dx) s += image.at(x * factor + dx, y * factor + dy, c);
        }
        out.at(x, y, c) = s * norm;
      }
    }
  }
  return out;
}

}  // namespace nasnerf
