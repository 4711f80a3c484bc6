#include "n2d/bg/gmm.hpp"

#include <algorithm>
#include <cmath>

#include "n2d/core/error.hpp"

namespace n2d::bg {

GmmPixelModel::GmmPixelModel(GmmOptions opts) : opts_(opts) {
  if (opts_.num_modes < 1) throw ArgumentError("GMM needs at least one mode");
  if (!(opts_.learning_rate > 0.0 && opts_.learning_rate <= 1.0)) throw ArgumentError("GMM learning rate must be in (0,1]");
  if (opts_.background_ratio < 0.0 || opts_.background_ratio > 1.0) throw ArgumentError("background ratio must be in [0,1]");
}

void GmmPixelModel::initialise(const Image& frame) {
  height_ = frame.height();
  width_ = frame.width();
  channels_ = frame.channels();
  const std::size_t k = static_cast<std::size_t>(opts_.num_modes);
  modes_.assign(static_cast<std::size_t>(height_) * width_ * k, GmmMode{0.0, 0.0, std::vector<double>(channels_, 0.0)});
  const double var0 = opts_.initial_sigma * opts_.initial_sigma;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      GmmMode& m = modes_[pixel_offset(y, x)];
      m.weight = 1.0;
      m.variance = var0;
      for (int c = 0; c < channels_; ++c) m.mean[c] = frame.at(y, x, c);
    }
  }
}

bool GmmPixelModel::matches(const GmmMode& m, const float* px) const {
  if (m.weight <= 0.0) return false;
  double d2 = 0.0;
  for (int c = 0; c < channels_; ++c) {
    const double e = px[c] - m.mean[c];
    d2 += e * e;
  }
  return d2 < opts_.match_sigma * opts_.match_sigma * m.variance;
}

void GmmPixelModel::update(const Image& frame) {
  if (!fitted()) {
    initialise(frame);
    return;
  }
  if (frame.height() != height_ || frame.width() != width_ || frame.channels() != channels_) {
    throw ShapeError("GMM frame shape does not match the model");
  }
  const int k = opts_.num_modes;
  const double alpha = opts_.learning_rate;
  const double var0 = opts_.initial_sigma * opts_.initial_sigma;
  const auto data = frame.data();
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      GmmMode* m = &modes_[pixel_offset(y, x)];
      const float* px = &data[(static_cast<std::size_t>(y) * width_ + x) * channels_];

      int matched = -1;
      for (int i = 0; i < k; ++i) {
        if (matches(m[i], px)) {
          matched = i;
          break;
        }
      }

      for (int i = 0; i < k; ++i) m[i].weight = (1.0 - alpha) * m[i].weight + (i == matched ? alpha : 0.0);

      if (matched >= 0) {
        GmmMode& g = m[matched];
        // rho = alpha: the density-scaled rate of the original formulation
        // exceeds 1 for small variances.
        const double rho = alpha;
        double d2 = 0.0;
        for (int c = 0; c < channels_; ++c) {
          g.mean[c] = (1.0 - rho) * g.mean[c] + rho * px[c];
          const double e = px[c] - g.mean[c];
          d2 += e * e;
        }
        g.variance = std::max((1.0 - rho) * g.variance + rho * d2 / channels_, opts_.min_variance);
      } else {
        int lowest = 0;
        for (int i = 1; i < k; ++i) {
          if (m[i].weight < m[lowest].weight) lowest = i;
        }
        GmmMode& g = m[lowest];
        g.weight = opts_.initial_weight;
        g.variance = var0;
        for (int c = 0; c < channels_; ++c) g.mean[c] = px[c];
      }

      double total = 0.0;
      for (int i = 0; i < k; ++i) total += m[i].weight;
      for (int i = 0; i < k; ++i) m[i].weight /= total;

      std::stable_sort(m, m + k, [](const GmmMode& a, const GmmMode& b) {
        const double ra = a.weight > 0.0 ? a.weight / std::sqrt(a.variance) : -1.0;
        const double rb = b.weight > 0.0 ? b.weight / std::sqrt(b.variance) : -1.0;
        return ra > rb;
      });
    }
  }
}

Mask GmmPixelModel::classify(const Image& frame) const {
  if (!fitted()) throw DataError("GMM model has not been fitted");
  if (frame.height() != height_ || frame.width() != width_ || frame.channels() != channels_) {
    throw ShapeError("GMM frame shape does not match the model");
  }
  const int k = opts_.num_modes;
  const auto data = frame.data();
  Mask mask(height_, width_);
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      const GmmMode* m = &modes_[pixel_offset(y, x)];
      const float* px = &data[(static_cast<std::size_t>(y) * width_ + x) * channels_];
      // Background set: smallest prefix whose cumulative weight reaches T.
      int background = 0;
      double cumulative = 0.0;
      while (background < k && cumulative < opts_.background_ratio) {
        cumulative += m[background].weight;
        ++background;
      }
      bool is_background = false;
      for (int i = 0; i < background && !is_background; ++i) is_background = matches(m[i], px);
      mask.at(y, x) = is_background ? 0 : 1;
    }
  }
  return mask;
}

std::vector<GmmMode> GmmPixelModel::modes(int y, int x) const {
  if (!fitted()) return {};
  const GmmMode* m = &modes_[pixel_offset(y, x)];
  return {m, m + opts_.num_modes};
}

std::vector<Mask> run_gmm(const std::vector<Image>& train, const std::vector<Image>& test, const GmmOptions& opts) {
  GmmPixelModel model(opts);
  for (const Image& f : train) model.update(f);
  std::vector<Mask> masks;
  masks.reserve(test.size());
  for (const Image& f : test) {
    if (!model.fitted()) model.update(f);
    masks.push_back(model.classify(f));
    model.update(f);
  }
  return masks;
}

}  // namespace n2d::bg
