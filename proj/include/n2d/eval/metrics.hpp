#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "n2d/core/image.hpp"

namespace n2d::eval {

/// |pred AND gt| / |pred OR gt|; 1.0 when both are empty.
double iou(const Mask& pred, const Mask& gt);

/// Normalised 256-bin histogram of the luminance channel.
std::array<double, 256> luminance_histogram(const Image& img);

/// KL(h_t || h_t1) in nats over luminance histograms with 1e-8 added per bin.
double kl_stability(const Image& frame_t, const Image& frame_t1);

/// KL between each consecutive pair; size() - 1 values.
std::vector<double> stability_series(const std::vector<Image>& frames);

/// Draws sigma uniformly from [lo, hi] (8-bit units), adds N(0, sigma/255)
/// noise to every value and clips to [0,1].
Image add_gaussian_noise(const Image& img, double lo, double hi, std::uint64_t seed);

struct StageThroughput {
  std::string name;
  double fps = 0.0;
  double seconds_per_frame = 0.0;
  int frames = 0;
};

struct SequenceReport {
  std::vector<int> frame_indices;
  std::vector<double> per_frame_iou;
  double mean_iou = 0.0;
  double std_iou = 0.0;  // population
  std::vector<double> stability;
  std::vector<StageThroughput> stages;
  int excluded = 0;

  nlohmann::json to_json() const;
};

/// Mean and population standard deviation.
std::pair<double, double> mean_std(const std::vector<double>& values);

using Detector = std::function<Mask(const Image& frame, int frame_index)>;

/// Runs `detector` over every frame and scores it against `gt` (aligned by
/// position). Frames whose detector call throws are excluded and counted.
/// Throws DataError if any frame lacks ground truth. The stability series is
/// taken over `frames` as given.
SequenceReport evaluate_sequence(const std::vector<Image>& frames, const std::vector<int>& frame_indices,
                                 const std::vector<std::optional<Mask>>& gt, const Detector& detector);

/// Scores precomputed masks against ground truth.
SequenceReport score_masks(const std::vector<Mask>& pred, const std::vector<Mask>& gt, const std::vector<int>& frame_indices);

struct Stage {
  std::string name;
  std::function<void(const Image&)> run;
};

/// Wall-clock throughput of each stage over `frames`; the first `warmup`
/// frames are run but not timed. Needs at least warmup + 1 frames.
std::vector<StageThroughput> benchmark_fps(const std::vector<Stage>& stages, const std::vector<Image>& frames, int warmup);

}  // namespace n2d::eval
