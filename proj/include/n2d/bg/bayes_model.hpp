#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "n2d/core/image.hpp"

namespace n2d::bg {

inline constexpr double kSigmaFloor = 1e-3;
inline constexpr double kDefaultZThreshold = 2.5;

/// Single Gaussian describing one pixel/channel of the generated sequence.
struct PixelGaussian {
  double mean = 0.0;
  double stddev = kSigmaFloor;
  int count = 0;
};

/// exp(-(value - mean)^2 / (2 sigma^2)); 1 at the mean, in (0,1].
double pixel_background_score(const PixelGaussian& g, double value);

/// Per-scale grid of per-pixel, per-channel Gaussians.
struct ScaleGrid {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<PixelGaussian> cells;  // (y * width + x) * channels + c

  const PixelGaussian& at(int y, int x, int c) const {
    return cells[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  PixelGaussian& at(int y, int x, int c) { return cells[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
};

struct MultiScaleBayesModel {
  std::vector<ScaleGrid> scales;  // scales[k] has resolution H/2^k x W/2^k
  double z_threshold = kDefaultZThreshold;
  double sigma_floor = kSigmaFloor;

  int num_scales() const { return static_cast<int>(scales.size()); }
};

/// Sample mean and population standard deviation (floored) per pixel, channel
/// and scale over the generated training frames.
MultiScaleBayesModel fit_background(std::span<const ScaleSet> generated_train, double sigma_floor = kSigmaFloor);

/// Product of per-scale scores for full-resolution pixel (i, j). values[k] is
/// the generated intensity at (i >> k, j >> k) of scale k.
double fuse_scales(const MultiScaleBayesModel& model, int i, int j, int channel, std::span<const double> values);

struct DetectOptions {
  double k0 = kDefaultZThreshold;
  int min_area = 0;  // 0 disables the connected-component filter
};

/// Foreground iff max over channels of sum_k z_k^2 > Q k0^2 (strict).
Mask detect_foreground(const MultiScaleBayesModel& model, const ScaleSet& generated, const DetectOptions& opts = {});

/// Removes 8-connected foreground components smaller than min_area pixels.
void remove_small_components(Mask& mask, int min_area);

void save_model(const std::filesystem::path& path, const MultiScaleBayesModel& model);
MultiScaleBayesModel load_model(const std::filesystem::path& path);

}  // namespace n2d::bg
