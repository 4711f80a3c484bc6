#include "n2d/enhance/enhancement.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "n2d/core/error.hpp"

namespace n2d::enhance {

namespace {

constexpr double kRetinexEps = 1.0 / 255.0;

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

}  // namespace

int intensity_bin(float v) { return std::clamp(static_cast<int>(std::lround(v * 255.0f)), 0, 255); }

Image histogram_equalization(const Image& img) {
  Image out(img.height(), img.width(), img.channels());
  const double n = static_cast<double>(img.height()) * img.width();
  for (int c = 0; c < img.channels(); ++c) {
    std::array<double, 256> hist{};
    for (int y = 0; y < img.height(); ++y) {
      for (int x = 0; x < img.width(); ++x) hist[static_cast<std::size_t>(intensity_bin(img.at(y, x, c)))] += 1.0;
    }
    std::array<float, 256> cdf{};
    double acc = 0.0;
    for (std::size_t b = 0; b < 256; ++b) {
      acc += hist[b];
      cdf[b] = static_cast<float>(std::min(1.0, acc / n));
    }
    for (int y = 0; y < img.height(); ++y) {
      for (int x = 0; x < img.width(); ++x) out.at(y, x, c) = cdf[static_cast<std::size_t>(intensity_bin(img.at(y, x, c)))];
    }
  }
  return out;
}

std::vector<double> gaussian_blur(const Image& img, double sigma) {
  if (!(sigma > 0.0)) throw ArgumentError("blur sigma must be positive");
  const auto kernel = gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);
  const int h = img.height();
  const int w = img.width();
  const int ch = img.channels();
  std::vector<double> tmp(img.size()), out(img.size());
  auto idx = [&](int y, int x, int c) { return (static_cast<std::size_t>(y) * w + x) * ch + c; };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        double s = 0.0;
        for (int t = -radius; t <= radius; ++t) {
          const int xx = std::clamp(x + t, 0, w - 1);
          s += kernel[static_cast<std::size_t>(t + radius)] * img.at(y, xx, c);
        }
        tmp[idx(y, x, c)] = s;
      }
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        double s = 0.0;
        for (int t = -radius; t <= radius; ++t) {
          const int yy = std::clamp(y + t, 0, h - 1);
          s += kernel[static_cast<std::size_t>(t + radius)] * tmp[idx(yy, x, c)];
        }
        out[idx(y, x, c)] = s;
      }
    }
  }
  return out;
}

std::vector<double> retinex_log_ratio(const Image& img, const std::vector<double>& sigmas) {
  if (sigmas.empty()) throw ArgumentError("retinex needs at least one sigma");
  std::vector<double> acc(img.size(), 0.0);
  const auto data = img.data();
  for (double sigma : sigmas) {
    const auto blurred = gaussian_blur(img, sigma);
    for (std::size_t i = 0; i < acc.size(); ++i) {
      acc[i] += std::log(data[i] + kRetinexEps) - std::log(blurred[i] + kRetinexEps);
    }
  }
  for (double& v : acc) v /= static_cast<double>(sigmas.size());
  return acc;
}

Image multiscale_retinex(const Image& img, const std::vector<double>& sigmas) {
  const auto field = retinex_log_ratio(img, sigmas);
  const int ch = img.channels();
  Image out(img.height(), img.width(), ch);
  auto dst = out.data();
  for (int c = 0; c < ch; ++c) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = static_cast<std::size_t>(c); i < field.size(); i += static_cast<std::size_t>(ch)) {
      lo = std::min(lo, field[i]);
      hi = std::max(hi, field[i]);
    }
    // Relative test so float noise around a constant field still counts as flat.
    const bool flat = hi - lo <= 1e-12 * std::max(1.0, std::abs(hi));
    for (std::size_t i = static_cast<std::size_t>(c); i < field.size(); i += static_cast<std::size_t>(ch)) {
      dst[i] = flat ? 0.5f : static_cast<float>(std::clamp((field[i] - lo) / (hi - lo), 0.0, 1.0));
    }
  }
  return out;
}

}  // namespace n2d::enhance
