#include "n2d/bg/bayes_model.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <opencv2/imgproc.hpp>

#include "n2d/core/error.hpp"
#include "n2d/core/io.hpp"

namespace n2d::bg {

using nlohmann::json;

double pixel_background_score(const PixelGaussian& g, double value) {
  const double z = (value - g.mean) / g.stddev;
  return std::exp(-0.5 * z * z);
}

MultiScaleBayesModel fit_background(std::span<const ScaleSet> frames, double sigma_floor) {
  if (frames.size() < 2) throw DataError("background fitting needs at least 2 frames");
  if (!(sigma_floor > 0.0)) throw ArgumentError("sigma floor must be positive");
  const ScaleSet& first = frames.front();
  if (first.num_scales() < 1) throw ShapeError("scale set is empty");
  for (const ScaleSet& s : frames) {
    if (s.num_scales() != first.num_scales()) throw ShapeError("scale sets differ in scale count");
    for (int k = 0; k < first.num_scales(); ++k) {
      if (!s.images[k].same_shape(first.images[k])) throw ShapeError("scale sets differ in pyramid shape");
    }
  }

  MultiScaleBayesModel model;
  model.sigma_floor = sigma_floor;
  const double n = static_cast<double>(frames.size());
  for (int k = 0; k < first.num_scales(); ++k) {
    const Image& ref = first.images[k];
    ScaleGrid grid;
    grid.height = ref.height();
    grid.width = ref.width();
    grid.channels = ref.channels();
    const std::size_t cells = ref.size();
    std::vector<double> sum(cells, 0.0);
    for (const ScaleSet& s : frames) {
      const auto d = s.images[k].data();
      for (std::size_t i = 0; i < cells; ++i) sum[i] += d[i];
    }
    grid.cells.resize(cells);
    for (std::size_t i = 0; i < cells; ++i) grid.cells[i].mean = sum[i] / n;
    // Two-pass variance around the final mean.
    std::vector<double> sq(cells, 0.0);
    for (const ScaleSet& s : frames) {
      const auto d = s.images[k].data();
      for (std::size_t i = 0; i < cells; ++i) {
        const double e = d[i] - grid.cells[i].mean;
        sq[i] += e * e;
      }
    }
    for (std::size_t i = 0; i < cells; ++i) {
      grid.cells[i].stddev = std::max(std::sqrt(sq[i] / n), sigma_floor);
      grid.cells[i].count = static_cast<int>(frames.size());
    }
    model.scales.push_back(std::move(grid));
  }
  return model;
}

double fuse_scales(const MultiScaleBayesModel& model, int i, int j, int channel, std::span<const double> values) {
  if (values.size() != model.scales.size()) throw ShapeError("one value per model scale is required");
  double p = 1.0;
  for (std::size_t k = 0; k < model.scales.size(); ++k) {
    const ScaleGrid& g = model.scales[k];
    p *= pixel_background_score(g.at(i >> k, j >> k, channel), values[k]);
  }
  return p;
}

Mask detect_foreground(const MultiScaleBayesModel& model, const ScaleSet& generated, const DetectOptions& opts) {
  const int q = model.num_scales();
  if (q < 1) throw ShapeError("background model has no scales");
  if (generated.num_scales() < q) throw ShapeError("generated scale set has fewer scales than the model");
  for (int k = 0; k < q; ++k) {
    const Image& img = generated.images[k];
    const ScaleGrid& g = model.scales[k];
    if (img.height() != g.height || img.width() != g.width || img.channels() != g.channels) {
      throw ShapeError("generated scale " + std::to_string(k) + " does not match the background model");
    }
  }
  const ScaleGrid& full = model.scales.front();
  const double threshold = q * opts.k0 * opts.k0;
  Mask mask(full.height, full.width);
  for (int i = 0; i < full.height; ++i) {
    for (int j = 0; j < full.width; ++j) {
      double worst = 0.0;
      for (int c = 0; c < full.channels; ++c) {
        double sum_z2 = 0.0;
        for (int k = 0; k < q; ++k) {
          const PixelGaussian& pg = model.scales[k].at(i >> k, j >> k, c);
          const double z = (generated.images[k].at(i >> k, j >> k, c) - pg.mean) / pg.stddev;
          sum_z2 += z * z;
        }
        worst = std::max(worst, sum_z2);
      }
      mask.at(i, j) = worst > threshold ? 1 : 0;
    }
  }
  if (opts.min_area > 0) remove_small_components(mask, opts.min_area);
  return mask;
}

void remove_small_components(Mask& mask, int min_area) {
  if (min_area <= 1) return;
  cv::Mat bin(mask.height, mask.width, CV_8UC1, mask.data.data());
  cv::Mat labels, stats, centroids;
  const int n = cv::connectedComponentsWithStats(bin, labels, stats, centroids, 8, CV_32S);
  std::vector<std::uint8_t> keep(static_cast<std::size_t>(n), 1);
  for (int l = 1; l < n; ++l) keep[l] = stats.at<int>(l, cv::CC_STAT_AREA) >= min_area ? 1 : 0;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      const int l = labels.at<int>(y, x);
      if (l > 0 && !keep[l]) mask.at(y, x) = 0;
    }
  }
}

void save_model(const std::filesystem::path& path, const MultiScaleBayesModel& model) {
  json j;
  j["format"] = "n2d-bayes-background";
  j["version"] = 1;
  j["z_threshold"] = model.z_threshold;
  j["sigma_floor"] = model.sigma_floor;
  j["scales"] = json::array();
  for (const ScaleGrid& g : model.scales) {
    json s;
    s["height"] = g.height;
    s["width"] = g.width;
    s["channels"] = g.channels;
    std::vector<double> mean, stddev;
    mean.reserve(g.cells.size());
    stddev.reserve(g.cells.size());
    for (const PixelGaussian& pg : g.cells) {
      mean.push_back(pg.mean);
      stddev.push_back(pg.stddev);
    }
    s["count"] = g.cells.empty() ? 0 : g.cells.front().count;
    s["mean"] = std::move(mean);
    s["stddev"] = std::move(stddev);
    j["scales"].push_back(std::move(s));
  }
  write_file_atomic(path, j.dump());
}

MultiScaleBayesModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("background model not found: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("malformed background model: " + std::string(e.what()));
  }
  if (j.value("format", "") != "n2d-bayes-background") throw DataError("not a background model file: " + path.string());
  MultiScaleBayesModel model;
  model.z_threshold = j.value("z_threshold", kDefaultZThreshold);
  model.sigma_floor = j.value("sigma_floor", kSigmaFloor);
  for (const json& s : j.at("scales")) {
    ScaleGrid g;
    g.height = s.at("height");
    g.width = s.at("width");
    g.channels = s.at("channels");
    const auto mean = s.at("mean").get<std::vector<double>>();
    const auto stddev = s.at("stddev").get<std::vector<double>>();
    const std::size_t cells = static_cast<std::size_t>(g.height) * g.width * g.channels;
    if (mean.size() != cells || stddev.size() != cells) throw DataError("background model grid size mismatch");
    const int count = s.value("count", 0);
    g.cells.resize(cells);
    for (std::size_t i = 0; i < cells; ++i) g.cells[i] = PixelGaussian{mean[i], stddev[i], count};
    model.scales.push_back(std::move(g));
  }
  return model;
}

}  // namespace n2d::bg
