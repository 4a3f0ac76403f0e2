#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace radiolith {

/// Row-major raster of real-valued intensities, one or three channels.
/// Values loaded from files are in [0,1]; filter stages may produce
/// intermediates outside that range, which are clamped at save time only.
struct RasterImage {
    int width = 0;
    int height = 0;
    int channels = 1;  // 1 = gray, 3 = interleaved RGB
    std::vector<double> pixels;

    RasterImage() = default;
    RasterImage(int w, int h, int c = 1, double fill = 0.0);

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

    bool in_bounds(int x, int y) const {
        return x >= 0 && x < width && y >= 0 && y < height;
    }

    double& at(int x, int y, int c = 0) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    double at(int x, int y, int c = 0) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    bool same_dims(const RasterImage& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }
};

/// 256-bin count of gray intensities. Bin b covers [b/256, (b+1)/256),
/// the last bin closed at 1.
struct Histogram {
    std::array<std::uint64_t, 256> bins{};
    std::uint64_t total = 0;
};

struct Centroid {
    double cx = 0.0;
    double cy = 0.0;
};

enum class FlipAxis { horizontal, vertical };
enum class Interp { nearest, bilinear };

// x = column, y = row, origin at the top-left corner throughout.

RasterImage flip(const RasterImage& img, FlipAxis axis);

/// Anti-clockwise rotation (as seen on screen) about the image center,
/// bilinear sampling, out-of-source samples set to 0. With reshape the
/// output grows to the rotated bounding box.
RasterImage rotate(const RasterImage& img, double angle_deg, bool reshape);

RasterImage rescale(const RasterImage& img, double factor, Interp method);

RasterImage crop(const RasterImage& img, int x0, int y0, int w, int h);

/// Intensity-weighted center of mass. Throws on an all-zero image.
Centroid centroid(const RasterImage& img);

Histogram histogram(const RasterImage& img);

/// Bin index for an intensity in [0,1].
inline int histogram_bin(double v) {
    int b = static_cast<int>(v * 256.0);
    return b < 0 ? 0 : (b > 255 ? 255 : b);
}

// Color handling for the RGB inputs of channel-split workflows.
RasterImage to_gray(const RasterImage& rgb);                 // 0.299 R + 0.587 G + 0.114 B
RasterImage value_channel(const RasterImage& rgb);           // max(R, G, B)
std::array<RasterImage, 3> split_channels(const RasterImage& rgb);
RasterImage merge_channels(const RasterImage& r, const RasterImage& g, const RasterImage& b);

/// Promote a gray image to RGB (identical planes). RGB input is copied.
RasterImage to_rgb(const RasterImage& img);

}  // namespace radiolith
