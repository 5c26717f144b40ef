// SPDX-License-Identifier: Apache-2.0
#include "layerpano/image_io.hpp"

#include <png.h>
#include <jpeglib.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

namespace layerpano {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open " + path.string());
  return f;
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

// Decoded raster: interleaved samples, 8 or 16 bit, 1 or 3 channels.
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 8;
  std::vector<std::uint16_t> samples;

  std::uint16_t at(int x, int y, int c) const {
    return samples[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

void png_warning_handler(png_structp, png_const_charp) {}

Raster read_png(const std::filesystem::path& path) {
  FilePtr file = open_file(path, "rb");
  Raster r;
  std::vector<png_byte> data;
  std::vector<png_bytep> rows;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_warning_handler);
  if (!png) throw IoError("png: cannot allocate reader");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("png: cannot decode " + path.string());
  }

  png_init_io(png, file.get());
  png_read_info(png, info);
  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  r.width = static_cast<int>(png_get_image_width(png, info));
  r.height = static_cast<int>(png_get_image_height(png, info));
  r.channels = png_get_channels(png, info);
  r.bit_depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  data.resize(rowbytes * r.height);
  rows.resize(r.height);
  for (int y = 0; y < r.height; ++y) rows[y] = data.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  r.samples.resize(static_cast<std::size_t>(r.width) * r.height * r.channels);
  for (int y = 0; y < r.height; ++y) {
    for (int i = 0; i < r.width * r.channels; ++i) {
      // 16-bit samples arrive big-endian.
      const std::uint16_t value = r.bit_depth == 16
                                      ? static_cast<std::uint16_t>((rows[y][2 * i] << 8) | rows[y][2 * i + 1])
                                      : rows[y][i];
      r.samples[static_cast<std::size_t>(y) * r.width * r.channels + i] = value;
    }
  }
  return r;
}

void write_png(const std::filesystem::path& path, int width, int height, int channels, int bit_depth,
               const std::vector<std::uint16_t>& samples) {
  FilePtr file = open_file(path, "wb");
  const int bytes = bit_depth / 8;
  std::vector<png_byte> data(static_cast<std::size_t>(width) * height * channels * bytes);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (bytes == 2) {
      data[2 * i] = static_cast<png_byte>(samples[i] >> 8);
      data[2 * i + 1] = static_cast<png_byte>(samples[i] & 0xff);
    } else {
      data[i] = static_cast<png_byte>(samples[i]);
    }
  }
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_warning_handler);
  if (!png) throw IoError("png: cannot allocate writer");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png: cannot write " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, width, height, bit_depth, channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(width) * channels * bytes;
  for (int y = 0; y < height; ++y) png_write_row(png, data.data() + y * stride);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  std::longjmp(err->jump, 1);
}

Raster read_jpeg(const std::filesystem::path& path) {
  FilePtr file = open_file(path, "rb");
  jpeg_decompress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  Raster r;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw IoError("jpeg: cannot decode " + path.string());
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, file.get());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);
  r.width = static_cast<int>(cinfo.output_width);
  r.height = static_cast<int>(cinfo.output_height);
  r.channels = cinfo.output_components;
  r.samples.resize(static_cast<std::size_t>(r.width) * r.height * r.channels);
  std::vector<JSAMPLE> row(static_cast<std::size_t>(r.width) * r.channels);
  while (cinfo.output_scanline < cinfo.output_height) {
    const int y = static_cast<int>(cinfo.output_scanline);
    JSAMPROW rows[1] = {row.data()};
    jpeg_read_scanlines(&cinfo, rows, 1);
    for (int i = 0; i < r.width * r.channels; ++i) {
      r.samples[static_cast<std::size_t>(y) * r.width * r.channels + i] = row[i];
    }
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return r;
}

}  // namespace

Image load_rgb(const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  const Raster r = (ext == ".jpg" || ext == ".jpeg") ? read_jpeg(path) : read_png(path);
  if (r.bit_depth != 8) throw IoError("expected an 8-bit image: " + path.string());
  Image img(r.width, r.height);
  for (int y = 0; y < r.height; ++y) {
    for (int x = 0; x < r.width; ++x) {
      for (int k = 0; k < 3; ++k) {
        img.channel[k](y, x) = r.at(x, y, r.channels == 1 ? 0 : k) / 255.0;
      }
    }
  }
  return img;
}

void save_png(const std::filesystem::path& path, const Image& image) {
  std::vector<std::uint16_t> samples(static_cast<std::size_t>(image.width()) * image.height() * 3);
  std::size_t i = 0;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int k = 0; k < 3; ++k) {
        const double v = std::clamp(image.channel[k](y, x), 0.0, 1.0);
        samples[i++] = static_cast<std::uint16_t>(std::lround(v * 255.0));
      }
    }
  }
  write_png(path, image.width(), image.height(), 3, 8, samples);
}

Mask load_mask_png(const std::filesystem::path& path) {
  const Raster r = read_png(path);
  Mask m(r.height, r.width);
  for (int y = 0; y < r.height; ++y) {
    for (int x = 0; x < r.width; ++x) m(y, x) = r.at(x, y, 0) != 0;
  }
  return m;
}

void save_mask_png(const std::filesystem::path& path, const Mask& mask) {
  const int w = static_cast<int>(mask.cols());
  const int h = static_cast<int>(mask.rows());
  std::vector<std::uint16_t> samples(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) samples[static_cast<std::size_t>(y) * w + x] = mask(y, x) ? 255 : 0;
  }
  write_png(path, w, h, 1, 8, samples);
}

LabelMap load_png16(const std::filesystem::path& path) {
  const Raster r = read_png(path);
  if (r.channels != 1) throw IoError("expected a single-channel png: " + path.string());
  LabelMap m(r.height, r.width);
  for (int y = 0; y < r.height; ++y) {
    for (int x = 0; x < r.width; ++x) m(y, x) = r.at(x, y, 0);
  }
  return m;
}

void save_png16(const std::filesystem::path& path, const LabelMap& values) {
  const int w = static_cast<int>(values.cols());
  const int h = static_cast<int>(values.rows());
  std::vector<std::uint16_t> samples(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) samples[static_cast<std::size_t>(y) * w + x] = values(y, x);
  }
  write_png(path, w, h, 1, 16, samples);
}

Plane<float> load_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string magic;
  int w = 0, h = 0;
  double scale = 0.0;
  in >> magic >> w >> h >> scale;
  in.get();  // single whitespace before raster
  if (!in || magic != "Pf" || w <= 0 || h <= 0) throw IoError("not a single-channel pfm: " + path.string());
  const bool little_endian = scale < 0.0;
  Plane<float> out(h, w);
  std::vector<unsigned char> row(static_cast<std::size_t>(w) * 4);
  // PFM rows run bottom to top.
  for (int y = h - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
    if (!in) throw IoError("truncated pfm: " + path.string());
    for (int x = 0; x < w; ++x) {
      unsigned char b[4];
      std::memcpy(b, row.data() + 4 * x, 4);
      if (!little_endian) std::swap(b[0], b[3]), std::swap(b[1], b[2]);
      float v;
      std::memcpy(&v, b, 4);
      out(y, x) = v;
    }
  }
  return out;
}

void save_pfm(const std::filesystem::path& path, const Plane<float>& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "Pf\n" << values.cols() << " " << values.rows() << "\n-1\n";
  for (Eigen::Index y = values.rows() - 1; y >= 0; --y) {
    for (Eigen::Index x = 0; x < values.cols(); ++x) {
      const float v = values(y, x);
      out.write(reinterpret_cast<const char*>(&v), 4);
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

DepthMap load_depth(const std::filesystem::path& path, double png_scale) {
  if (lower_extension(path) == ".pfm") return load_pfm(path).cast<double>();
  if (!(png_scale > 0.0)) throw IoError("depth png scale must be positive");
  return load_png16(path).cast<double>() / png_scale;
}

void save_depth_pfm(const std::filesystem::path& path, const DepthMap& depth) { save_pfm(path, depth.cast<float>()); }

}  // namespace layerpano
