#pragma once

#include <string>
#include <vector>

#include "radiolith/raster.hpp"

namespace radiolith {

enum class BlobPolarity { dark, bright, unsigned_response };

struct Blob {
    double x = 0.0;
    double y = 0.0;
    double t = 0.0;       // detected scale
    double radius = 0.0;  // sqrt(2 t)
    double response = 0.0;
    BlobPolarity polarity = BlobPolarity::dark;
};

/// Ordered stack of response planes, one per scale.
struct ScaleSpace {
    std::vector<double> scales;        // strictly increasing
    std::vector<RasterImage> planes;   // same dims as the input
};

struct BlobDetectParams {
    double t_min = 2.0;
    double t_max = 64.0;
    int n_scales = 16;        // geometric progression
    double threshold = 0.02;  // on |scale-normalized response|
    bool include_border = false;
    double overlap = 0.5;     // prune the weaker blob above this disk overlap
};

/// Gaussian smoothing at variance t followed by the scale-normalized
/// Laplacian t (L_xx + L_yy) via central differences. Positive response
/// marks dark blobs, negative marks bright ones.
RasterImage log_response(const RasterImage& img, double t);

/// Scale-normalized determinant of Hessian t^2 (L_xx L_yy - L_xy^2).
RasterImage doh_response(const RasterImage& img, double t);

ScaleSpace log_scale_space(const RasterImage& img, const BlobDetectParams& params);

/// Scale-normalized Laplacian estimated from adjacent Gaussian levels:
/// 2 t_mid / dt * (L(t+dt) - L(t)), attributed to the midpoint scale.
ScaleSpace dog_scale_space(const RasterImage& img, const BlobDetectParams& params);

ScaleSpace doh_scale_space(const RasterImage& img, const BlobDetectParams& params);

std::vector<Blob> detect_blobs_log(const RasterImage& img, const BlobDetectParams& params);
std::vector<Blob> detect_blobs_dog(const RasterImage& img, const BlobDetectParams& params);
std::vector<Blob> detect_blobs_doh(const RasterImage& img, const BlobDetectParams& params);

/// CSV rows "x,y,radius,scale,response,polarity".
std::string blobs_to_csv(const std::vector<Blob>& blobs);

}  // namespace radiolith
