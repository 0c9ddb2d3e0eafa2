#include "cvbev/raster_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

namespace cvbev {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_fail(const std::filesystem::path& path, const std::string& what) {
  throw Error(path.string() + ": " + what);
}

void png_error_to_exception(png_structp png, png_const_charp msg) {
  auto* buf = static_cast<std::string*>(png_get_error_ptr(png));
  if (buf) *buf = msg;
  png_longjmp(png, 1);
}

void png_warning_silent(png_structp, png_const_charp) {}

}  // namespace

PngImage read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) png_fail(path, "cannot open file");
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    png_fail(path, "not a PNG file");
  }
  std::string err;
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_to_exception, png_warning_silent);
  if (!png) png_fail(path, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  PngImage img;
  std::vector<png_bytep> row_ptrs;
  std::vector<std::uint8_t> buffer;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    png_fail(path, "PNG decode error: " + err);
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (depth == 16) png_set_swap(png);  // host little-endian samples
  png_read_update_info(png, info);

  img.rows = png_get_image_height(png, info);
  img.cols = png_get_image_width(png, info);
  img.channels = png_get_channels(png, info);
  img.bit_depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * img.rows);
  row_ptrs.resize(img.rows);
  for (std::size_t r = 0; r < img.rows; ++r) row_ptrs[r] = buffer.data() + r * rowbytes;
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const std::size_t n = img.rows * img.cols * img.channels;
  img.samples.resize(n);
  if (img.bit_depth == 16) {
    for (std::size_t r = 0; r < img.rows; ++r) {
      std::memcpy(img.samples.data() + r * img.cols * img.channels, row_ptrs[r],
                  img.cols * img.channels * 2);
    }
  } else {
    for (std::size_t r = 0; r < img.rows; ++r) {
      for (std::size_t k = 0; k < img.cols * img.channels; ++k) {
        img.samples[r * img.cols * img.channels + k] = row_ptrs[r][k];
      }
    }
  }
  return img;
}

namespace {

void append_bytes(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + len);
}

void flush_nothing(png_structp) {}

}  // namespace

std::vector<std::uint8_t> encode_png(const PngImage& img) {
  if (img.channels != 1 && img.channels != 3) throw Error("PNG: only gray or RGB images are written");
  if (img.bit_depth != 8 && img.bit_depth != 16) throw Error("PNG: bit depth must be 8 or 16");
  if (img.samples.size() != img.rows * img.cols * img.channels || img.rows == 0 || img.cols == 0) {
    throw Error("PNG: image buffer does not match its shape");
  }
  const std::size_t bytes_per = img.bit_depth == 16 ? 2 : 1;
  const std::size_t rowbytes = img.cols * img.channels * bytes_per;
  std::vector<std::uint8_t> buffer(rowbytes * img.rows);
  for (std::size_t k = 0; k < img.samples.size(); ++k) {
    if (img.bit_depth == 16) {
      buffer[2 * k] = static_cast<std::uint8_t>(img.samples[k] >> 8);
      buffer[2 * k + 1] = static_cast<std::uint8_t>(img.samples[k] & 0xff);
    } else {
      buffer[k] = static_cast<std::uint8_t>(std::min<std::uint16_t>(img.samples[k], 255));
    }
  }
  std::vector<png_bytep> row_ptrs(img.rows);
  for (std::size_t r = 0; r < img.rows; ++r) row_ptrs[r] = buffer.data() + r * rowbytes;

  std::vector<std::uint8_t> out;
  std::string err;
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_to_exception, png_warning_silent);
  if (!png) throw Error("PNG: png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("PNG encode error: " + err);
  }
  png_set_write_fn(png, &out, append_bytes, flush_nothing);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.cols), static_cast<png_uint_32>(img.rows),
               img.bit_depth, img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, row_ptrs.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void write_png(const std::filesystem::path& path, const PngImage& img) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = encode_png(img);
  } catch (const Error& e) {
    png_fail(path, e.what());
  }
  write_file_bytes(path, bytes);
}

PngImage label_image(const LabelRaster& labels) {
  PngImage img;
  img.rows = labels.rows;
  img.cols = labels.cols;
  img.channels = 1;
  img.bit_depth = 8;
  img.samples.assign(labels.data.begin(), labels.data.end());
  return img;
}

PngImage payload_image(const Payload& payload) {
  PngImage img;
  img.rows = payload.rows;
  img.cols = payload.cols;
  img.channels = payload.channels;
  img.bit_depth = 8;
  img.samples.resize(img.rows * img.cols * img.channels);
  for (std::size_t r = 0; r < img.rows; ++r) {
    for (std::size_t c = 0; c < img.cols; ++c) {
      for (std::size_t ch = 0; ch < img.channels; ++ch) {
        const float v = std::clamp(std::round(payload.at(ch, r, c)), 0.f, 255.f);
        img.samples[(r * img.cols + c) * img.channels + ch] = static_cast<std::uint16_t>(v);
      }
    }
  }
  return img;
}

LabelRaster read_label_png(const std::filesystem::path& path) {
  const PngImage img = read_png(path);
  if (img.channels != 1 || img.bit_depth != 8) {
    png_fail(path, "expected an 8-bit grayscale label PNG");
  }
  LabelRaster out(img.rows, img.cols);
  for (std::size_t k = 0; k < out.data.size(); ++k) {
    out.data[k] = static_cast<std::uint8_t>(img.samples[k]);
  }
  return out;
}

void write_label_png(const std::filesystem::path& path, const LabelRaster& labels) {
  write_png(path, label_image(labels));
}

Raster<std::uint8_t> read_mask_png(const std::filesystem::path& path) {
  LabelRaster raw = read_label_png(path);
  for (auto& v : raw.data) v = v != 0 ? 1 : 0;
  return raw;
}

void write_mask_png(const std::filesystem::path& path, const Raster<std::uint8_t>& mask) {
  LabelRaster scaled = mask;
  for (auto& v : scaled.data) v = v != 0 ? 255 : 0;
  write_label_png(path, scaled);
}

Payload read_payload_png(const std::filesystem::path& path) {
  const PngImage img = read_png(path);
  if (img.bit_depth != 8) png_fail(path, "expected an 8-bit payload PNG");
  Payload p(img.channels == 1 ? Payload::Kind::kCategorical : Payload::Kind::kNumeric,
            img.channels, img.rows, img.cols);
  for (std::size_t r = 0; r < img.rows; ++r) {
    for (std::size_t c = 0; c < img.cols; ++c) {
      for (std::size_t ch = 0; ch < img.channels; ++ch) {
        p.at(ch, r, c) = static_cast<float>(img.samples[(r * img.cols + c) * img.channels + ch]);
      }
    }
  }
  return p;
}

void write_payload_png(const std::filesystem::path& path, const Payload& payload) {
  write_png(path, payload_image(payload));
}

PanoramaDepth load_depth_png(const std::filesystem::path& path, double scale) {
  if (!(scale > 0.0)) throw Error("depth scale must be positive");
  const PngImage img = read_png(path);
  if (img.channels != 1 || img.bit_depth != 16) {
    png_fail(path, "expected a 16-bit grayscale depth PNG (got " + std::to_string(img.bit_depth) +
                       "-bit, " + std::to_string(img.channels) + " channel)");
  }
  PanoramaDepth d(img.rows, img.cols, kInvalidDepth);
  for (std::size_t k = 0; k < img.samples.size(); ++k) {
    d.depth[k] = img.samples[k] == 0 ? kInvalidDepth : img.samples[k] * scale;
  }
  return d;
}

void save_depth_png(const std::filesystem::path& path, const PanoramaDepth& depth, double scale) {
  if (!(scale > 0.0)) throw Error("depth scale must be positive");
  PngImage img;
  img.rows = depth.height;
  img.cols = depth.width;
  img.channels = 1;
  img.bit_depth = 16;
  img.samples.resize(depth.depth.size());
  for (std::size_t k = 0; k < depth.depth.size(); ++k) {
    const double d = depth.depth[k];
    if (!is_valid_depth(d)) continue;
    const double q = std::round(d / scale);
    if (q >= 1.0 && q <= 65535.0) img.samples[k] = static_cast<std::uint16_t>(q);
  }
  write_png(path, img);
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  std::uint8_t bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.insert(out.end(), bytes, bytes + sizeof(T));
}

template <typename T>
T get_le(const std::uint8_t* p) {
  std::uint8_t bytes[sizeof(T)];
  std::memcpy(bytes, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

std::size_t dtype_size(RawDType t) {
  switch (t) {
    case RawDType::kU8: return 1;
    case RawDType::kF32: return 4;
    case RawDType::kF64: return 8;
  }
  throw Error("unknown CVBR dtype");
}

constexpr std::size_t kRawHeader = 4 + 1 + 12 + 1;

}  // namespace

std::vector<std::uint8_t> encode_raw(const RawRaster& r) {
  const std::size_t n = static_cast<std::size_t>(r.channels) * r.height * r.width;
  if (r.values.size() != n) throw Error("CVBR: value count does not match C*H*W");
  std::vector<std::uint8_t> out{'C', 'V', 'B', 'R', kRawVersion};
  out.reserve(kRawHeader + n * dtype_size(r.dtype));
  put_u32(out, r.channels);
  put_u32(out, r.height);
  put_u32(out, r.width);
  out.push_back(static_cast<std::uint8_t>(r.dtype));
  for (double v : r.values) {
    switch (r.dtype) {
      case RawDType::kU8:
        out.push_back(static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0)));
        break;
      case RawDType::kF32: put_le<float>(out, static_cast<float>(v)); break;
      case RawDType::kF64: put_le<double>(out, v); break;
    }
  }
  return out;
}

RawRaster decode_raw(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kRawHeader || std::memcmp(bytes.data(), "CVBR", 4) != 0) {
    throw Error("CVBR: missing magic bytes");
  }
  if (bytes[4] != kRawVersion) {
    throw Error("CVBR: unsupported version " + std::to_string(bytes[4]));
  }
  RawRaster r;
  r.channels = get_u32(bytes.data() + 5);
  r.height = get_u32(bytes.data() + 9);
  r.width = get_u32(bytes.data() + 13);
  const std::uint8_t tag = bytes[17];
  if (tag < 1 || tag > 3) throw Error("CVBR: unknown dtype tag " + std::to_string(tag));
  r.dtype = static_cast<RawDType>(tag);
  const std::size_t n = static_cast<std::size_t>(r.channels) * r.height * r.width;
  const std::size_t sz = dtype_size(r.dtype);
  if (bytes.size() != kRawHeader + n * sz) throw Error("CVBR: payload length mismatch");
  r.values.resize(n);
  const std::uint8_t* p = bytes.data() + kRawHeader;
  for (std::size_t k = 0; k < n; ++k, p += sz) {
    switch (r.dtype) {
      case RawDType::kU8: r.values[k] = *p; break;
      case RawDType::kF32: r.values[k] = get_le<float>(p); break;
      case RawDType::kF64: r.values[k] = get_le<double>(p); break;
    }
  }
  return r;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(path.string() + ": cannot open file");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(path.string() + ": cannot open file for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(path.string() + ": write failed");
}

void write_raw(const std::filesystem::path& path, const RawRaster& raster) {
  write_file_bytes(path, encode_raw(raster));
}

RawRaster read_raw(const std::filesystem::path& path) {
  try {
    return decode_raw(read_file_bytes(path));
  } catch (const Error& e) {
    const std::string msg = e.what();
    if (msg.rfind(path.string(), 0) == 0) throw;
    throw Error(path.string() + ": " + msg);
  }
}

FeatureMap to_feature_map(const RawRaster& r) {
  FeatureMap m(r.channels, r.height, r.width);
  m.data = r.values;
  return m;
}

RawRaster from_feature_map(const FeatureMap& map, RawDType dtype) {
  map.validate();
  RawRaster r;
  r.dtype = dtype;
  r.channels = static_cast<std::uint32_t>(map.channels);
  r.height = static_cast<std::uint32_t>(map.height);
  r.width = static_cast<std::uint32_t>(map.width);
  r.values = map.data;
  return r;
}

Matrix to_matrix(const RawRaster& r) {
  if (r.channels != 1) throw Error("CVBR matrix must have exactly one channel");
  Matrix m(r.height, r.width);
  m.data = r.values;
  return m;
}

std::vector<double> to_vector(const RawRaster& r) {
  if (r.channels != 1 || r.height != 1) throw Error("CVBR vector must be 1 x 1 x N");
  return r.values;
}

FlowField to_flow_field(const RawRaster& r) {
  if (r.channels != 2) throw Error("CVBR flow field must have two channels (drow, dcol)");
  FlowField f(r.height, r.width);
  const std::size_t plane = static_cast<std::size_t>(r.height) * r.width;
  std::copy(r.values.begin(), r.values.begin() + static_cast<std::ptrdiff_t>(plane), f.drow.begin());
  std::copy(r.values.begin() + static_cast<std::ptrdiff_t>(plane), r.values.end(), f.dcol.begin());
  return f;
}

}  // namespace cvbev
