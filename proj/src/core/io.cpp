#include "n2d/core/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "n2d/core/error.hpp"

namespace n2d {

namespace fs = std::filesystem;

namespace {

void write_encoded(const fs::path& path, const cv::Mat& mat) {
  std::vector<std::uint8_t> buf;
  const std::string ext = path.has_extension() ? path.extension().string() : ".png";
  if (!cv::imencode(ext, mat, buf)) throw DataError("cannot encode image: " + path.string());
  write_file_atomic(path, std::string(buf.begin(), buf.end()));
}

}  // namespace

Image load_image(const fs::path& path) {
  if (!fs::exists(path)) throw DataError("image not found: " + path.string());
  cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (raw.empty()) throw DataError("cannot decode image: " + path.string());

  double scale = 0.0;
  switch (raw.depth()) {
    case CV_8U:
      scale = 1.0 / 255.0;
      break;
    case CV_16U:
      scale = 1.0 / 65535.0;
      break;
    default:
      throw DataError("unsupported bit depth in " + path.string());
  }

  cv::Mat rgb;
  switch (raw.channels()) {
    case 1:
      rgb = raw;
      break;
    case 3:
      cv::cvtColor(raw, rgb, cv::COLOR_BGR2RGB);
      break;
    default:
      throw DataError("unsupported channel count " + std::to_string(raw.channels()) + " in " + path.string());
  }

  cv::Mat f;
  rgb.convertTo(f, CV_32F);
  const int channels = f.channels();
  std::vector<float> data(static_cast<std::size_t>(f.rows) * f.cols * channels);
  for (int y = 0; y < f.rows; ++y) {
    const float* row = f.ptr<float>(y);
    std::copy_n(row, static_cast<std::size_t>(f.cols) * channels, data.data() + static_cast<std::size_t>(y) * f.cols * channels);
  }
  // Same rounding as quantize8, so decoded frames compare equal to quantized ones.
  for (float& v : data) v = std::min(1.0f, std::max(0.0f, static_cast<float>(static_cast<double>(v) * scale)));
  return Image::from_data(f.rows, f.cols, channels, std::move(data));
}

void save_image(const fs::path& path, const Image& img) {
  const int type = img.channels() == 1 ? CV_8UC1 : CV_8UC3;
  cv::Mat out(img.height(), img.width(), type);
  for (int y = 0; y < img.height(); ++y) {
    auto* row = out.ptr<std::uint8_t>(y);
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        // OpenCV stores BGR.
        const int dst = img.channels() == 3 ? 2 - c : c;
        row[x * img.channels() + dst] = static_cast<std::uint8_t>(std::lround(img.at(y, x, c) * 255.0f));
      }
    }
  }
  write_encoded(path, out);
}

void save_mask(const fs::path& path, const Mask& mask) {
  cv::Mat out(mask.height, mask.width, CV_8UC1);
  for (int y = 0; y < mask.height; ++y) {
    auto* row = out.ptr<std::uint8_t>(y);
    for (int x = 0; x < mask.width; ++x) row[x] = mask.at(y, x) ? 255 : 0;
  }
  write_encoded(path, out);
}

Mask load_mask(const fs::path& path, int frame_index) {
  if (!fs::exists(path)) throw DataError("mask not found: " + path.string());
  cv::Mat raw = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
  if (raw.empty()) throw DataError("cannot decode mask: " + path.string());
  Mask m(raw.rows, raw.cols, frame_index);
  for (int y = 0; y < raw.rows; ++y) {
    const auto* row = raw.ptr<std::uint8_t>(y);
    for (int x = 0; x < raw.cols; ++x) m.at(y, x) = row[x] != 0 ? 1 : 0;
  }
  return m;
}

std::string frame_name(int index, const std::string& prefix, const std::string& ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06d", index);
  return prefix + buf + ext;
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw DataError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace n2d
