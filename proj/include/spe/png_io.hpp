#pragma once

#include <filesystem>

#include "spe/types.hpp"

namespace spe::png {

/// How RGB inputs (e.g. dermoscopy) collapse to one channel.
enum class GrayConversion { luma, average };

/// Reads an 8- or 16-bit PNG as intensities scaled to [0, 1]. Palette and
/// low-bit-depth files are expanded; alpha is dropped; RGB is converted with
/// the requested rule.
Image read_image(const std::filesystem::path& path,
                 GrayConversion conversion = GrayConversion::luma);

/// Reads a label PNG; any nonzero sample is foreground.
Mask read_mask(const std::filesystem::path& path);

/// Writes an 8-bit grayscale PNG, intensities quantized with quantize8().
void write_image8(const std::filesystem::path& path, const Image& img);

/// Writes a mask as 8-bit grayscale, foreground 255, background 0.
void write_mask(const std::filesystem::path& path, const Mask& mask);

}  // namespace spe::png
