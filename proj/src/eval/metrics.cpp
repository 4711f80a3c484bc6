#include "n2d/eval/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "n2d/core/error.hpp"
#include "n2d/enhance/enhancement.hpp"

namespace n2d::eval {

double iou(const Mask& pred, const Mask& gt) {
  if (pred.height != gt.height || pred.width != gt.width) throw ShapeError("IoU masks differ in shape");
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const bool p = pred.data[i] != 0;
    const bool g = gt.data[i] != 0;
    inter += (p && g) ? 1 : 0;
    uni += (p || g) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::array<double, 256> luminance_histogram(const Image& img) {
  const Image lum = to_luminance(img);
  std::array<double, 256> h{};
  for (float v : lum.data()) h[static_cast<std::size_t>(enhance::intensity_bin(v))] += 1.0;
  const double n = static_cast<double>(lum.size());
  for (double& v : h) v /= n;
  return h;
}

double kl_stability(const Image& frame_t, const Image& frame_t1) {
  if (!frame_t.same_shape(frame_t1)) throw ShapeError("stability frames differ in shape");
  constexpr double kSmoothing = 1e-8;
  auto p = luminance_histogram(frame_t);
  auto q = luminance_histogram(frame_t1);
  const double norm = 1.0 + 256 * kSmoothing;
  double kl = 0.0;
  for (std::size_t b = 0; b < 256; ++b) {
    const double pb = (p[b] + kSmoothing) / norm;
    const double qb = (q[b] + kSmoothing) / norm;
    kl += pb * std::log(pb / qb);
  }
  return std::max(kl, 0.0);
}

std::vector<double> stability_series(const std::vector<Image>& frames) {
  std::vector<double> out;
  for (std::size_t t = 1; t < frames.size(); ++t) out.push_back(kl_stability(frames[t - 1], frames[t]));
  return out;
}

Image add_gaussian_noise(const Image& img, double lo, double hi, std::uint64_t seed) {
  if (!(lo >= 0.0 && lo <= hi)) throw ArgumentError("noise range must satisfy 0 <= lo <= hi");
  std::mt19937_64 rng(seed);
  const double sigma = std::uniform_real_distribution<double>(lo, std::nextafter(hi, hi + 1.0))(rng) / 255.0;
  if (hi == 0.0) return img;
  std::normal_distribution<double> noise(0.0, sigma);
  Image out = img;
  for (float& v : out.data()) v = static_cast<float>(std::clamp(v + noise(rng), 0.0, 1.0));
  return out;
}

std::pair<double, double> mean_std(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  double s = 0.0;
  for (double v : values) s += v;
  const double mean = s / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / static_cast<double>(values.size()))};
}

nlohmann::json SequenceReport::to_json() const {
  nlohmann::json j;
  j["frame_indices"] = frame_indices;
  j["per_frame_iou"] = per_frame_iou;
  j["mean_iou"] = mean_iou;
  j["std_iou"] = std_iou;
  j["stability"] = stability;
  j["excluded"] = excluded;
  j["stages"] = nlohmann::json::array();
  for (const auto& s : stages) {
    j["stages"].push_back({{"name", s.name}, {"fps", s.fps}, {"seconds_per_frame", s.seconds_per_frame}, {"frames", s.frames}});
  }
  return j;
}

SequenceReport evaluate_sequence(const std::vector<Image>& frames, const std::vector<int>& frame_indices,
                                 const std::vector<std::optional<Mask>>& gt, const Detector& detector) {
  if (frames.size() != gt.size() || frames.size() != frame_indices.size()) {
    throw ArgumentError("frames, indices and ground truth must align");
  }
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!gt[i]) throw DataError("missing ground truth for frame " + std::to_string(frame_indices[i]));
  }
  SequenceReport report;
  double seconds = 0.0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Mask pred;
    try {
      pred = detector(frames[i], frame_indices[i]);
    } catch (const std::exception&) {
      ++report.excluded;
      continue;
    }
    seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.frame_indices.push_back(frame_indices[i]);
    report.per_frame_iou.push_back(iou(pred, *gt[i]));
  }
  std::tie(report.mean_iou, report.std_iou) = mean_std(report.per_frame_iou);
  if (frames.size() >= 2) report.stability = stability_series(frames);
  const int done = static_cast<int>(report.per_frame_iou.size());
  if (done > 0 && seconds > 0.0) report.stages.push_back({"pipeline", done / seconds, seconds / done, done});
  return report;
}

SequenceReport score_masks(const std::vector<Mask>& pred, const std::vector<Mask>& gt, const std::vector<int>& frame_indices) {
  if (pred.size() != gt.size() || pred.size() != frame_indices.size()) throw ArgumentError("prediction and ground truth counts differ");
  SequenceReport report;
  report.frame_indices = frame_indices;
  for (std::size_t i = 0; i < pred.size(); ++i) report.per_frame_iou.push_back(iou(pred[i], gt[i]));
  std::tie(report.mean_iou, report.std_iou) = mean_std(report.per_frame_iou);
  return report;
}

std::vector<StageThroughput> benchmark_fps(const std::vector<Stage>& stages, const std::vector<Image>& frames, int warmup) {
  if (warmup < 0) throw ArgumentError("warmup must be non-negative");
  if (frames.size() < static_cast<std::size_t>(warmup) + 1) throw ArgumentError("benchmark needs at least warmup + 1 frames");
  std::vector<StageThroughput> out;
  for (const Stage& stage : stages) {
    for (int i = 0; i < warmup; ++i) stage.run(frames[static_cast<std::size_t>(i)]);
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = static_cast<std::size_t>(warmup); i < frames.size(); ++i) stage.run(frames[i]);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const int n = static_cast<int>(frames.size()) - warmup;
    const double per = std::max(secs, 1e-9) / n;
    out.push_back({stage.name, 1.0 / per, per, n});
  }
  return out;
}

}  // namespace n2d::eval
