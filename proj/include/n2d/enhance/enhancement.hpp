#pragma once

#include <vector>

#include "n2d/core/image.hpp"

namespace n2d::enhance {

/// Histogram bin of an intensity in [0,1]: round(v * 255).
int intensity_bin(float v);

/// Per-channel 256-bin equalisation mapping v -> CDF(bin(v)).
Image histogram_equalization(const Image& img);

/// Separable Gaussian blur, kernel radius ceil(3 sigma), edge pixels
/// replicated. Output is not clamped to [0,1]; returned as raw values.
std::vector<double> gaussian_blur(const Image& img, double sigma);

inline const std::vector<double> kDefaultRetinexSigmas{15.0, 80.0, 250.0};

/// Mean over sigmas of log(img + eps) - log(blur + eps), eps = 1/255, then
/// min-max rescaled per channel; a constant channel maps to 0.5.
Image multiscale_retinex(const Image& img, const std::vector<double>& sigmas = kDefaultRetinexSigmas);

/// The pre-rescale log-ratio field, exposed for testing.
std::vector<double> retinex_log_ratio(const Image& img, const std::vector<double>& sigmas);

}  // namespace n2d::enhance
