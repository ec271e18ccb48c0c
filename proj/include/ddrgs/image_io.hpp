#pragma once

#include "ddrgs/types.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace ddrgs {

enum class ImageFormat { png, pfm };

/// 8-bit code for an LDR value: clamp to [0,1], scale by 255, round half to even.
std::uint8_t quantize_unit(double v);

/// LDR raster to/from 8-bit RGB PNG. Reading yields code/255.
std::vector<std::uint8_t> encode_png(const Image& img);
Image decode_png(const std::vector<std::uint8_t>& bytes);
void write_png(const Image& img, const std::filesystem::path& path);
Image read_png(const std::filesystem::path& path);

/// HDR raster to/from colour PFM ("PF"), little-endian, bottom-up scanlines.
/// Values are stored as 32-bit floats, so doubles round-trip only if they are
/// representable in single precision.
std::vector<std::uint8_t> encode_pfm(const Image& img);
Image decode_pfm(const std::vector<std::uint8_t>& bytes);
void write_pfm(const Image& img, const std::filesystem::path& path);
Image read_pfm(const std::filesystem::path& path);

void write_image(const Image& img, const std::filesystem::path& path, ImageFormat fmt);
Image read_image(const std::filesystem::path& path, ImageFormat fmt);

/// Format from the file extension (.png / .pfm); FormatError otherwise.
ImageFormat format_from_extension(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace ddrgs
