// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eyesynth/raster.hpp"
#include "eyesynth/segmask.hpp"

namespace eyesynth {

/// 8-bit grayscale (1 channel) or RGB (3 channels). Throws FormatError on
/// encoder failure.
void write_png(const std::string& path, const Image8& image);
/// Reads 8-bit gray, gray+alpha, RGB, RGBA or paletted PNGs into 1 or 3
/// channels (alpha dropped, palettes expanded). Throws FormatError for
/// malformed files and for bit depths other than 8 (or < 8 paletted).
Image8 read_png(const std::string& path);

/// Paletted PNG whose palette index is the class code (palette = kMaskPalette).
void write_mask_png(const std::string& path, const SegMask& mask);
/// Accepts paletted masks, palette-colored RGB masks, and class-index gray
/// masks. Throws FormatError for colors or codes outside the fixed mapping.
SegMask read_mask_png(const std::string& path);

/// Radiance RGBE (.hdr). Handles flat and new-style run-length scanlines.
ImageF read_hdr(const std::string& path);
ImageF decode_hdr(const std::vector<std::uint8_t>& bytes);
/// Writes 3-channel linear floats; `run_length` selects RLE scanlines.
void write_hdr(const std::string& path, const ImageF& image, bool run_length = true);
std::vector<std::uint8_t> encode_hdr(const ImageF& image, bool run_length = true);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes);
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

/// Lowercase hex SHA-256 of a file's contents.
std::string sha256_file(const std::string& path);
std::string sha256_hex(const std::vector<std::uint8_t>& bytes);

}  // namespace eyesynth
