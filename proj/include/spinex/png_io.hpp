#pragma once

#include "spinex/image.hpp"

#include <string>

namespace spinex {

/// Reads an 8- or 16-bit single-channel PNG and rescales to [0, 1].
/// Gray+alpha inputs drop the alpha channel; color PNGs are rejected.
/// Throws std::runtime_error on unreadable or unsupported files.
Grid read_png_gray(const std::string& path);

/// Writes an 8-bit grayscale PNG; values are clamped to [0, 1] and scaled to 0..255.
void write_png_gray(const std::string& path, const Grid& g);

/// Portable float map ("Pf"), little-endian, bottom-up scanlines.
void write_pfm(const std::string& path, const Grid& g);
Grid read_pfm(const std::string& path);

} // namespace spinex
