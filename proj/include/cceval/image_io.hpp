#pragma once

#include <filesystem>

#include "cceval/image.hpp"

namespace cceval {

// Reads an RGB image from a PNG (8 or 16 bit) or binary PPM (P6) file.
// Integer samples are normalized to [0,1] and the result is tagged with
// `tag`; the file format does not record whether values are sRGB encoded or
// linear, so the caller says so.
Image read_image(const std::filesystem::path& path,
                 PixelSpace tag = PixelSpace::SrgbEncoded);

// Source sample depth of a PNG or PPM file, reported as 8 or 16. Lets
// callers write outputs at the depth they were given.
int read_image_depth(const std::filesystem::path& path);

// Writes channel values quantized to the requested bit depth (8 or 16),
// clamping to [0,1] first. Format picked by extension: .png or .ppm.
// Lab images are rejected; convert before writing.
void write_image(const std::filesystem::path& path, const Image& img,
                 int bit_depth = 8);

// 8-bit grayscale PNG label masks.
MaskImage read_mask(const std::filesystem::path& path);
void write_mask(const std::filesystem::path& path, const MaskImage& mask);

} // namespace cceval
