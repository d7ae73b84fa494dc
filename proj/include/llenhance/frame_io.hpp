#pragma once

// Frame files: 8/16-bit RGB PNG, and the raw "LLFR" float container used for
// lossless intermediates. Also printf-style sequence naming.

#include <png.h>

#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "llenhance/error.hpp"
#include "llenhance/image.hpp"

namespace llenhance {

/// The file decoded but does not hold three colour channels.
class ChannelCountError : public DecodeError {
 public:
  ChannelCountError(std::string path, int channels)
      : DecodeError(std::move(path), "expected RGB, found " + std::to_string(channels) + " channel(s)") {}
};

inline constexpr std::array<char, 4> kRawFrameMagic{'L', 'L', 'F', 'R'};

inline int max_code(int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw InvalidArgument("bit depth must be 8 or 16");
  return (1 << bit_depth) - 1;
}

namespace detail {

inline std::uint32_t quantize_sample(float v, int max) {
  return static_cast<std::uint32_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * static_cast<float>(max)));
}

inline float dequantize_sample(std::uint32_t q, int max) {
  return static_cast<float>(q) / static_cast<float>(max);
}

inline bool has_extension(const std::filesystem::path& p, const char* ext) {
  std::string e = p.extension().string();
  for (char& ch : e) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return e == ext;
}

struct FileCloser {
  void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline void put_u32(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(const unsigned char* b) {
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void write_f32le(std::ostream& os, std::span<const float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * 4));
  } else {
    for (float v : values) put_u32(os, std::bit_cast<std::uint32_t>(v));
  }
}

inline void read_f32le(const unsigned char* src, std::span<float> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::bit_cast<float>(get_u32(src + 4 * i));
}

[[noreturn]] inline void png_error_fn(png_structp png, png_const_charp msg) {
  auto* what = static_cast<std::string*>(png_get_error_ptr(png));
  if (what) *what = msg;
  png_longjmp(png, 1);
}

inline void png_warning_fn(png_structp, png_const_charp) {}

inline Frame load_png(const std::filesystem::path& path, std::optional<int> expected_depth) {
  const std::string name = path.string();
  FilePtr fp(std::fopen(name.c_str(), "rb"));
  if (!fp) throw IoError(name, "cannot open frame");

  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw DecodeError(name, "not a PNG file");
  }

  std::string err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DecodeError(name, "libpng initialisation failed");
  }

  int width = 0, height = 0, depth = 0, channels = 0;
  std::vector<unsigned char> raw;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DecodeError(name, "PNG decode failed (" + err + ")");
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));
  depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) {
    png_set_palette_to_rgb(png);
    depth = 8;
  }
  if (depth == 16 && std::endian::native == std::endian::little) png_set_swap(png);
  png_read_update_info(png, info);
  channels = png_get_channels(png, info);
  if (channels == 3 && png_get_valid(png, info, PNG_INFO_tRNS)) channels = 4;
  if (channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ChannelCountError(name, channels);
  }
  const std::size_t stride = png_get_rowbytes(png, info);
  raw.resize(stride * height);
  rows.resize(height);
  for (int y = 0; y < height; ++y) rows[y] = raw.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const int bits = depth == 16 ? 16 : 8;
  if (expected_depth && *expected_depth != bits) {
    throw DecodeError(name, "bit depth " + std::to_string(bits) + " does not match expected " +
                                std::to_string(*expected_depth));
  }
  const int max = max_code(bits);
  Tensor t(3, height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < 3; ++c) {
        std::uint32_t q;
        if (bits == 16) {
          std::uint16_t s;
          std::memcpy(&s, rows[y] + 2 * (3 * x + c), 2);
          q = s;
        } else {
          q = rows[y][3 * x + c];
        }
        t.at(c, y, x) = dequantize_sample(q, max);
      }
    }
  }
  return Frame(std::move(t));
}

inline void save_png(const Frame& frame, const std::filesystem::path& path, int bit_depth) {
  const int max = max_code(bit_depth);
  const std::string name = path.string();
  FilePtr fp(std::fopen(name.c_str(), "wb"));
  if (!fp) throw IoError(name, "cannot write frame");

  std::string err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError(name, "libpng initialisation failed");
  }
  const int w = frame.width(), h = frame.height();
  const int bytes = bit_depth / 8;
  std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * 3 * bytes);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        const std::uint32_t q = quantize_sample(frame.at(c, y, x), max);
        const std::size_t i = (static_cast<std::size_t>(y) * w + x) * 3 + c;
        if (bytes == 2) {
          const auto s = static_cast<std::uint16_t>(q);
          std::memcpy(&raw[2 * i], &s, 2);
        } else {
          raw[i] = static_cast<unsigned char>(q);
        }
      }
    }
  }
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = raw.data() + static_cast<std::size_t>(y) * w * 3 * bytes;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError(name, "PNG encode failed (" + err + ")");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, w, h, bit_depth, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16 && std::endian::native == std::endian::little) png_set_swap(png);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(fp.get()) != 0) throw IoError(name, "cannot write frame");
}

inline Frame load_raw(const std::filesystem::path& path) {
  const std::string name = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(name, "cannot open frame");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kRawFrameMagic.data(), 4) != 0) {
    throw DecodeError(name, "bad LLFR magic");
  }
  const std::uint32_t w = get_u32(&bytes[4]);
  const std::uint32_t h = get_u32(&bytes[8]);
  const std::uint64_t count = 3ull * w * h;
  if (w == 0 || h == 0 || bytes.size() != 12 + 4 * count) throw DecodeError(name, "truncated LLFR frame");
  Tensor t(3, static_cast<int>(h), static_cast<int>(w));
  read_f32le(&bytes[12], t.data());
  for (float v : t.data()) {
    if (!(v >= 0.0f && v <= 1.0f)) throw DecodeError(name, "LLFR sample outside [0,1]");
  }
  return Frame(std::move(t));
}

inline void save_raw(const Frame& frame, const std::filesystem::path& path) {
  const std::string name = path.string();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(name, "cannot write frame");
  out.write(kRawFrameMagic.data(), 4);
  put_u32(out, static_cast<std::uint32_t>(frame.width()));
  put_u32(out, static_cast<std::uint32_t>(frame.height()));
  write_f32le(out, frame.tensor().data());
  out.flush();
  if (!out) throw IoError(name, "cannot write frame");
}

}  // namespace detail

inline bool is_raw_frame_path(const std::filesystem::path& p) { return detail::has_extension(p, ".llfr"); }

/// Loads a PNG (scaled by 2^depth - 1) or an LLFR file, chosen by extension.
/// When `expected_depth` is set, a PNG of a different depth is rejected.
inline Frame load_frame(const std::filesystem::path& path, std::optional<int> expected_depth = std::nullopt) {
  if (expected_depth) max_code(*expected_depth);
  if (!std::filesystem::exists(path)) throw IoError(path.string(), "missing frame file");
  return is_raw_frame_path(path) ? detail::load_raw(path) : detail::load_png(path, expected_depth);
}

/// Writes PNG at `bit_depth`, or LLFR (lossless, depth ignored) by extension.
inline void save_frame(const Frame& frame, const std::filesystem::path& path, int bit_depth) {
  max_code(bit_depth);
  if (is_raw_frame_path(path)) {
    detail::save_raw(frame, path);
  } else {
    detail::save_png(frame, path, bit_depth);
  }
}

/// What load_frame(save_frame(f)) yields, without touching the disk.
inline Frame quantize(const Frame& frame, int bit_depth) {
  const int max = max_code(bit_depth);
  Tensor t = frame.tensor();
  for (float& v : t.data()) v = detail::dequantize_sample(detail::quantize_sample(v, max), max);
  return Frame(std::move(t));
}

/// printf-style filename pattern with one integer conversion, e.g. "frame_%06d.png".
class SequencePattern {
 public:
  explicit SequencePattern(std::string pattern) : pattern_(std::move(pattern)) {
    int conversions = 0;
    for (std::size_t i = 0; i < pattern_.size(); ++i) {
      if (pattern_[i] != '%') continue;
      if (i + 1 < pattern_.size() && pattern_[i + 1] == '%') {
        ++i;
        continue;
      }
      std::size_t j = i + 1;
      while (j < pattern_.size() && std::isdigit(static_cast<unsigned char>(pattern_[j]))) ++j;
      if (j >= pattern_.size() || (pattern_[j] != 'd' && pattern_[j] != 'i')) {
        throw InvalidArgument("sequence pattern: only %d-style conversions are allowed: " + pattern_);
      }
      ++conversions;
      i = j;
    }
    if (conversions != 1) throw InvalidArgument("sequence pattern needs exactly one %d: " + pattern_);
  }

  std::filesystem::path path(int index) const {
    const int n = std::snprintf(nullptr, 0, pattern_.c_str(), index);
    std::string out(static_cast<std::size_t>(n), '\0');
    std::snprintf(out.data(), out.size() + 1, pattern_.c_str(), index);
    return out;
  }

  const std::string& str() const noexcept { return pattern_; }

 private:
  std::string pattern_;
};

/// Inclusive frame index range.
struct FrameRange {
  int first = 0;
  int last = -1;
  int count() const noexcept { return last >= first ? last - first + 1 : 0; }
};

/// Parses "a..b" (inclusive). "a..b" with b < a is an empty range.
inline FrameRange parse_frame_range(const std::string& text) {
  const auto dots = text.find("..");
  if (dots == std::string::npos) throw InvalidArgument("frame range must look like a..b: " + text);
  try {
    std::size_t used = 0;
    const std::string a = text.substr(0, dots), b = text.substr(dots + 2);
    FrameRange r{std::stoi(a, &used), 0};
    if (used != a.size()) throw InvalidArgument("bad frame range: " + text);
    r.last = std::stoi(b, &used);
    if (used != b.size()) throw InvalidArgument("bad frame range: " + text);
    return r;
  } catch (const std::logic_error&) {
    throw InvalidArgument("bad frame range: " + text);
  }
}

}  // namespace llenhance
