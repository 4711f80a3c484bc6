#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "n2d/core/dataset.hpp"
#include "n2d/core/image.hpp"

namespace n2d::synth {

/// Smooth colour daytime background in [0.3, 0.9].
Image generate_scene(int width, int height, std::uint64_t seed);

/// An elliptical object moving on a straight line that reflects off the
/// frame borders. The object is painted into the daytime scene before the
/// night rendering, so its night contrast is darkened along with the scene.
struct Blob {
  double center_x = 0.0;
  double center_y = 0.0;
  double velocity_x = 1.5;  // pixels per frame
  double velocity_y = 0.75;
  double radius_x = 6.0;
  double radius_y = 4.0;
  float intensity = 0.0f;  // daytime-domain intensity, all channels
  int first_frame = 0;     // frames before this one contain no object

  /// Centre at frame t (valid for t >= first_frame).
  std::pair<double, double> center_at(int t, int width, int height) const;
};

struct NightOptions {
  double gamma = 2.2;
  double gain = 0.25;
  double flicker = 0.05;        // brightness factor drawn from [1 - f, 1 + f]
  double noise_sigma = 3.0 / 255.0;
};

struct NightSequence {
  VideoSequence video;
  std::vector<Mask> gt;
};

/// frame = clip(gain * flicker_t * scene^gamma + noise). Each frame's
/// randomness comes from (seed, t) alone.
NightSequence generate_night_sequence(const Image& reference, int n_frames, const std::vector<Blob>& fg_spec,
                                      std::uint64_t seed, const NightOptions& opts = {});

/// Renders frame t in isolation.
Image render_night_frame(const Image& reference, int t, const std::vector<Blob>& fg_spec, std::uint64_t seed,
                         const NightOptions& opts, Mask* gt = nullptr);

/// Default moving object for a sequence whose test split starts at `first_frame`.
Blob default_blob(int size, int first_frame);

struct SynthOptions {
  int size = 64;
  int frames = 120;
  int train_split = 60;
  bool foreground = true;
  std::uint64_t seed = 1;
};

/// Reference scene plus night frames; object(s) only in the test split.
Dataset make_dataset(const SynthOptions& opts);

/// Mixes (seed, stream, counter) into a 64-bit value (splitmix64 finaliser).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter = 0);

}  // namespace n2d::synth
