#pragma once

#include <vector>

#include "n2d/core/image.hpp"

namespace n2d::bg {

struct GmmOptions {
  int num_modes = 3;
  double learning_rate = 0.01;     // alpha
  double background_ratio = 0.7;   // T
  double match_sigma = 2.5;        // match iff Mahalanobis distance < match_sigma
  double initial_sigma = 15.0 / 255.0;
  double initial_weight = 0.05;
  double min_variance = 1e-6;
};

struct GmmMode {
  double weight = 0.0;
  double variance = 0.0;  // isotropic, per channel
  std::vector<double> mean;
};

/// Adaptive per-pixel mixture of Gaussians (Stauffer-Grimson style).
/// Modes of each pixel are kept sorted by weight / sigma, descending; a
/// zero-weight mode is unused.
class GmmPixelModel {
 public:
  explicit GmmPixelModel(GmmOptions opts = {});

  /// The first frame initialises one full-weight mode per pixel.
  void update(const Image& frame);

  /// Foreground iff the pixel matches none of the background-designated modes.
  /// Throws if the model has not seen a frame.
  Mask classify(const Image& frame) const;

  bool fitted() const { return height_ > 0; }
  const GmmOptions& options() const { return opts_; }
  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }

  /// Modes of one pixel in their current (sorted) order.
  std::vector<GmmMode> modes(int y, int x) const;

 private:
  std::size_t pixel_offset(int y, int x) const {
    return (static_cast<std::size_t>(y) * width_ + x) * static_cast<std::size_t>(opts_.num_modes);
  }
  bool matches(const GmmMode& m, const float* px) const;
  void initialise(const Image& frame);

  GmmOptions opts_;
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<GmmMode> modes_;
};

/// Feeds `train` into a fresh model, then for each test frame classifies
/// before updating (online operation).
std::vector<Mask> run_gmm(const std::vector<Image>& train, const std::vector<Image>& test, const GmmOptions& opts = {});

}  // namespace n2d::bg
