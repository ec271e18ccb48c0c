#include "ddrgs/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cfenv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

namespace ddrgs {

static_assert(std::endian::native == std::endian::little, "PFM and checkpoint writers assume a little-endian host");

std::uint8_t quantize_unit(double v) {
  const double c = std::clamp(std::isnan(v) ? 0.0 : v, 0.0, 1.0);
  // nearbyint honours the current rounding mode, which is round-half-even by default.
  return static_cast<std::uint8_t>(std::nearbyint(c * 255.0));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("short write to " + path.string());
}

std::vector<std::uint8_t> encode_png(const Image& img) {
  if (img.width <= 0 || img.height <= 0) throw StructuralError("encode_png: empty image");
  std::vector<std::uint8_t> rgb(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) rgb[i] = quantize_unit(img.data[i]);

  png_image pi;
  std::memset(&pi, 0, sizeof pi);
  pi.version = PNG_IMAGE_VERSION;
  pi.width = static_cast<png_uint_32>(img.width);
  pi.height = static_cast<png_uint_32>(img.height);
  pi.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&pi, nullptr, &size, 0, rgb.data(), 0, nullptr)) {
    throw FormatError(std::string("png encode: ") + pi.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&pi, out.data(), &size, 0, rgb.data(), 0, nullptr)) {
    throw FormatError(std::string("png encode: ") + pi.message);
  }
  out.resize(size);
  return out;
}

Image decode_png(const std::vector<std::uint8_t>& bytes) {
  png_image pi;
  std::memset(&pi, 0, sizeof pi);
  pi.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&pi, bytes.data(), bytes.size())) {
    throw FormatError(std::string("png decode: ") + pi.message);
  }
  pi.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(pi));
  if (!png_image_finish_read(&pi, nullptr, rgb.data(), 0, nullptr)) {
    throw FormatError(std::string("png decode: ") + pi.message);
  }
  Image img(static_cast<int>(pi.width), static_cast<int>(pi.height));
  for (std::size_t i = 0; i < img.size(); ++i) img.data[i] = rgb[i] / 255.0;
  return img;
}

void write_png(const Image& img, const std::filesystem::path& path) { write_file_bytes(path, encode_png(img)); }

Image read_png(const std::filesystem::path& path) {
  try {
    return decode_png(read_file_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_pfm(const Image& img) {
  if (img.width <= 0 || img.height <= 0) throw StructuralError("encode_pfm: empty image");
  const std::string header = "PF\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n-1.0\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(header.size() + img.size() * 4);
  for (int y = img.height - 1; y >= 0; --y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        const float f = static_cast<float>(img.at(x, y, c));
        std::uint8_t b[4];
        std::memcpy(b, &f, 4);
        out.insert(out.end(), b, b + 4);
      }
    }
  }
  return out;
}

Image decode_pfm(const std::vector<std::uint8_t>& bytes) {
  // Header: three whitespace-terminated tokens, a single whitespace byte after the scale.
  std::size_t pos = 0;
  const auto token = [&]() {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) ++pos;
    if (start == pos) throw FormatError("pfm: truncated header");
    return std::string(bytes.begin() + static_cast<std::ptrdiff_t>(start), bytes.begin() + static_cast<std::ptrdiff_t>(pos));
  };
  const std::string magic = token();
  if (magic == "Pf") throw FormatError("pfm: greyscale PFM is not supported");
  if (magic != "PF") throw FormatError("pfm: bad magic '" + magic + "'");
  int w = 0, h = 0;
  double scale = 0.0;
  try {
    w = std::stoi(token());
    h = std::stoi(token());
    scale = std::stod(token());
  } catch (const std::logic_error&) {
    throw FormatError("pfm: malformed header");
  }
  if (w <= 0 || h <= 0) throw FormatError("pfm: non-positive dimensions");
  if (scale >= 0.0) throw FormatError("pfm: big-endian data is not supported");
  ++pos;  // the single separator byte
  const std::size_t need = static_cast<std::size_t>(w) * h * 3 * 4;
  if (bytes.size() < pos + need) throw FormatError("pfm: truncated pixel data");
  if (bytes.size() > pos + need) throw FormatError("pfm: trailing bytes after pixel data");
  Image img(w, h);
  const std::uint8_t* p = bytes.data() + pos;
  for (int y = h - 1; y >= 0; --y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        float f;
        std::memcpy(&f, p, 4);
        p += 4;
        img.at(x, y, c) = f;
      }
    }
  }
  return img;
}

void write_pfm(const Image& img, const std::filesystem::path& path) { write_file_bytes(path, encode_pfm(img)); }

Image read_pfm(const std::filesystem::path& path) {
  try {
    return decode_pfm(read_file_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_image(const Image& img, const std::filesystem::path& path, ImageFormat fmt) {
  fmt == ImageFormat::png ? write_png(img, path) : write_pfm(img, path);
}

Image read_image(const std::filesystem::path& path, ImageFormat fmt) {
  return fmt == ImageFormat::png ? read_png(path) : read_pfm(path);
}

ImageFormat format_from_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") return ImageFormat::png;
  if (ext == ".pfm") return ImageFormat::pfm;
  throw FormatError("unsupported image extension '" + ext + "' (" + path.string() + ")");
}

}  // namespace ddrgs
