#include "n2d/synth/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "n2d/core/error.hpp"

namespace n2d::synth {

namespace {

enum Stream : std::uint64_t { kSceneStream = 1, kFlickerStream = 2, kNoiseStream = 3 };

double reflect(double p, double lo, double hi) {
  const double span = hi - lo;
  if (span <= 0.0) return lo;
  double u = std::fmod(p - lo, 2.0 * span);
  if (u < 0.0) u += 2.0 * span;
  if (u > span) u = 2.0 * span - u;
  return lo + u;
}

bool inside(const Blob& b, double cx, double cy, int x, int y) {
  const double dx = (x - cx) / b.radius_x;
  const double dy = (y - cy) / b.radius_y;
  return dx * dx + dy * dy <= 1.0;
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1) + 0xbf58476d1ce4e5b9ULL * (counter + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Image generate_scene(int width, int height, std::uint64_t seed) {
  if (!is_power_of_two(width) || !is_power_of_two(height)) throw ArgumentError("scene dimensions must be powers of two");
  std::mt19937_64 rng(mix_seed(seed, kSceneStream));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  constexpr int kWaves = 4;
  constexpr int kCell = 8;
  const int gw = width / kCell + 2;
  const int gh = height / kCell + 2;

  std::vector<double> field(static_cast<std::size_t>(width) * height * 3);
  for (int c = 0; c < 3; ++c) {
    struct Wave {
      double fx, fy, phase, amp;
    };
    std::vector<Wave> waves;
    for (int i = 0; i < kWaves; ++i) {
      // One to three cycles across the frame keeps the pattern low-frequency.
      waves.push_back({(1.0 + 2.0 * unit(rng)) / width, (1.0 + 2.0 * unit(rng)) / height,
                       2.0 * std::numbers::pi * unit(rng), 0.5 + unit(rng)});
    }
    std::vector<double> lattice(static_cast<std::size_t>(gw) * gh);
    for (double& v : lattice) v = unit(rng);

    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        double v = 0.0;
        for (const Wave& w : waves) v += w.amp * std::sin(2.0 * std::numbers::pi * (w.fx * x + w.fy * y) + w.phase);
        const double gx = static_cast<double>(x) / kCell;
        const double gy = static_cast<double>(y) / kCell;
        const int ix = static_cast<int>(gx);
        const int iy = static_cast<int>(gy);
        const double tx = gx - ix;
        const double ty = gy - iy;
        auto at = [&](int a, int b) { return lattice[static_cast<std::size_t>(b) * gw + a]; };
        const double texture = (1 - ty) * ((1 - tx) * at(ix, iy) + tx * at(ix + 1, iy)) +
                               ty * ((1 - tx) * at(ix, iy + 1) + tx * at(ix + 1, iy + 1));
        field[(static_cast<std::size_t>(y) * width + x) * 3 + c] = v + 1.5 * texture;
      }
    }
  }

  Image img(height, width, 3);
  auto out = img.data();
  for (int c = 0; c < 3; ++c) {
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = static_cast<std::size_t>(c); i < field.size(); i += 3) {
      lo = std::min(lo, field[i]);
      hi = std::max(hi, field[i]);
    }
    for (std::size_t i = static_cast<std::size_t>(c); i < field.size(); i += 3) {
      const double u = hi > lo ? (field[i] - lo) / (hi - lo) : 0.5;
      out[i] = static_cast<float>(std::clamp(0.3 + 0.6 * u, 0.3, 0.9));
    }
  }
  return img;
}

std::pair<double, double> Blob::center_at(int t, int width, int height) const {
  const double dt = static_cast<double>(t - first_frame);
  return {reflect(center_x + velocity_x * dt, radius_x, width - 1 - radius_x),
          reflect(center_y + velocity_y * dt, radius_y, height - 1 - radius_y)};
}

Blob default_blob(int size, int first_frame) {
  Blob b;
  const double scale = size / 64.0;
  b.center_x = 0.3 * size;
  b.center_y = 0.4 * size;
  b.velocity_x = 1.5 * scale;
  b.velocity_y = 0.75 * scale;
  b.radius_x = 6.0 * scale;
  b.radius_y = 4.0 * scale;
  b.intensity = 0.0f;
  b.first_frame = first_frame;
  return b;
}

Image render_night_frame(const Image& reference, int t, const std::vector<Blob>& fg_spec, std::uint64_t seed,
                         const NightOptions& opts, Mask* gt) {
  const int h = reference.height();
  const int w = reference.width();
  Image scene = reference;
  Mask mask(h, w, t);
  for (const Blob& b : fg_spec) {
    if (t < b.first_frame) continue;
    const auto [cx, cy] = b.center_at(t, w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!inside(b, cx, cy, x, y)) continue;
        mask.at(y, x) = 1;
        for (int c = 0; c < scene.channels(); ++c) scene.at(y, x, c) = b.intensity;
      }
    }
  }

  std::mt19937_64 flicker_rng(mix_seed(seed, kFlickerStream, static_cast<std::uint64_t>(t)));
  const double flicker = std::uniform_real_distribution<double>(1.0 - opts.flicker, 1.0 + opts.flicker)(flicker_rng);
  std::mt19937_64 noise_rng(mix_seed(seed, kNoiseStream, static_cast<std::uint64_t>(t)));
  std::normal_distribution<double> noise(0.0, opts.noise_sigma);

  Image frame(h, w, scene.channels());
  auto src = scene.data();
  auto dst = frame.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const double v = opts.gain * flicker * std::pow(static_cast<double>(src[i]), opts.gamma) + noise(noise_rng);
    dst[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
  }
  if (gt) *gt = std::move(mask);
  return frame;
}

NightSequence generate_night_sequence(const Image& reference, int n_frames, const std::vector<Blob>& fg_spec,
                                      std::uint64_t seed, const NightOptions& opts) {
  if (n_frames < 1) throw ArgumentError("night sequence needs at least one frame");
  for (const Blob& b : fg_spec) {
    if (2 * b.radius_x >= reference.width() || 2 * b.radius_y >= reference.height()) {
      throw ArgumentError("foreground blob larger than the frame");
    }
  }
  NightSequence seq;
  seq.video.frames.reserve(static_cast<std::size_t>(n_frames));
  seq.gt.reserve(static_cast<std::size_t>(n_frames));
  for (int t = 0; t < n_frames; ++t) {
    Mask m;
    seq.video.frames.push_back(render_night_frame(reference, t, fg_spec, seed, opts, &m));
    seq.gt.push_back(std::move(m));
  }
  return seq;
}

Dataset make_dataset(const SynthOptions& opts) {
  if (opts.train_split < 1 || opts.train_split > opts.frames) throw ArgumentError("train split must lie in [1, frames]");
  Dataset ds;
  ds.manifest.name = "synthetic";
  ds.manifest.gt_dir = "gt";
  ds.manifest.train_split = opts.train_split;
  // Quantised so the in-memory dataset equals its saved 8-bit form.
  ds.reference = quantize8(generate_scene(opts.size, opts.size, opts.seed));
  std::vector<Blob> blobs;
  if (opts.foreground) blobs.push_back(default_blob(opts.size, opts.train_split));
  auto seq = generate_night_sequence(ds.reference, opts.frames, blobs, opts.seed);
  for (const Image& f : seq.video.frames) ds.night.push_back(quantize8(f));
  for (Mask& m : seq.gt) ds.gt.emplace_back(std::move(m));
  return ds;
}

}  // namespace n2d::synth
