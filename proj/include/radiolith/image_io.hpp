#pragma once

#include <cstdint>
#include <string>

#include "radiolith/raster.hpp"

namespace radiolith {

/// Reads PGM (P2/P5), PPM (P3/P6) or 8-bit PNG. Intensities are raw/255;
/// PGM/PPM headers must declare maxval 255. '#' comments are allowed in
/// netpbm headers.
RasterImage load_image(const std::string& path);

/// Writes by extension: .pgm (gray, P5), .ppm (RGB, P6), .png (gray or RGB).
/// Values are clamped to [0,1] and quantized with round-half-away-from-zero.
void save_image(const RasterImage& img, const std::string& path);

/// Quantization used at every file boundary.
inline std::uint8_t quantize_u8(double v) {
    v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    int q = static_cast<int>(v * 255.0 + 0.5);  // half away from zero; v >= 0 here
    return static_cast<std::uint8_t>(q > 255 ? 255 : q);
}

}  // namespace radiolith
