#include "n2d/core/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "n2d/core/error.hpp"

namespace n2d {

namespace {

void check_dims(int height, int width, int channels) {
  if (height < 1 || width < 1) {
    throw ShapeError("image dimensions must be positive, got " + std::to_string(height) + "x" +
                     std::to_string(width));
  }
  if (channels != 1 && channels != 3) {
    throw ShapeError("image must have 1 or 3 channels, got " + std::to_string(channels));
  }
}

}  // namespace

Image::Image(int height, int width, int channels, float fill)
    : height_(height), width_(width), channels_(channels) {
  check_dims(height, width, channels);
  if (!(fill >= 0.0f && fill <= 1.0f)) throw ArgumentError("fill value outside [0,1]");
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

Image Image::from_data(int height, int width, int channels, std::vector<float> data) {
  check_dims(height, width, channels);
  if (data.size() != static_cast<std::size_t>(height) * width * channels) {
    throw ShapeError("image data size does not match dimensions");
  }
  for (float v : data) {
    if (!(v >= 0.0f && v <= 1.0f)) throw DataError("image intensity outside [0,1]");
  }
  Image img;
  img.height_ = height;
  img.width_ = width;
  img.channels_ = channels;
  img.data_ = std::move(data);
  return img;
}

void Image::clamp() {
  for (float& v : data_) v = std::clamp(v, 0.0f, 1.0f);
}

double Image::mean() const {
  if (data_.empty()) return 0.0;
  double s = 0.0;
  for (float v : data_) s += v;
  return s / static_cast<double>(data_.size());
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count_if(data.begin(), data.end(), [](std::uint8_t v) { return v != 0; }));
}

void validate_sequence(const VideoSequence& seq) {
  if (seq.frames.empty()) throw DataError("video sequence is empty");
  const Image& first = seq.frames.front();
  for (const Image& f : seq.frames) {
    if (!f.same_shape(first)) throw DataError("video frames differ in shape");
  }
}

Image quantize8(const Image& img) {
  Image out = img;
  for (float& v : out.data()) v = static_cast<float>(static_cast<double>(std::lround(v * 255.0f)) * (1.0 / 255.0));
  return out;
}

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

BlockGrid split_blocks(const Image& img, int block_size) {
  if (block_size < 1) throw ArgumentError("block size must be positive");
  if (img.height() % block_size != 0 || img.width() % block_size != 0) {
    throw ShapeError("block size " + std::to_string(block_size) + " does not divide " +
                     std::to_string(img.height()) + "x" + std::to_string(img.width()));
  }
  BlockGrid grid;
  grid.block_size = block_size;
  grid.grid_rows = img.height() / block_size;
  grid.grid_cols = img.width() / block_size;
  grid.blocks.reserve(static_cast<std::size_t>(grid.grid_rows) * grid.grid_cols);
  const int c = img.channels();
  for (int r = 0; r < grid.grid_rows; ++r) {
    for (int q = 0; q < grid.grid_cols; ++q) {
      Image block(block_size, block_size, c);
      for (int y = 0; y < block_size; ++y) {
        const float* src = &img.data()[((static_cast<std::size_t>(r) * block_size + y) * img.width() +
                                        static_cast<std::size_t>(q) * block_size) * c];
        std::copy_n(src, static_cast<std::size_t>(block_size) * c, &block.at(y, 0, 0));
      }
      grid.blocks.push_back(std::move(block));
    }
  }
  return grid;
}

Image assemble_blocks(const BlockGrid& grid) {
  if (grid.grid_rows < 1 || grid.grid_cols < 1 ||
      grid.blocks.size() != static_cast<std::size_t>(grid.grid_rows) * grid.grid_cols) {
    throw ShapeError("block grid is inconsistent with its block count");
  }
  const int b = grid.block_size;
  const int c = grid.blocks.front().channels();
  for (const Image& blk : grid.blocks) {
    if (blk.height() != b || blk.width() != b || blk.channels() != c) {
      throw ShapeError("blocks in grid have inconsistent shapes");
    }
  }
  Image out(grid.grid_rows * b, grid.grid_cols * b, c);
  for (int r = 0; r < grid.grid_rows; ++r) {
    for (int q = 0; q < grid.grid_cols; ++q) {
      const Image& blk = grid.blocks[static_cast<std::size_t>(r) * grid.grid_cols + q];
      for (int y = 0; y < b; ++y) {
        std::copy_n(&blk.at(y, 0, 0), static_cast<std::size_t>(b) * c, &out.at(r * b + y, q * b, 0));
      }
    }
  }
  return out;
}

Image average_pool2(const Image& img) {
  if (img.height() % 2 != 0 || img.width() % 2 != 0) {
    throw ShapeError("2x2 pooling needs even dimensions, got " + std::to_string(img.height()) + "x" +
                     std::to_string(img.width()));
  }
  const int h = img.height() / 2;
  const int w = img.width() / 2;
  const int c = img.channels();
  Image out(h, w, c);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int k = 0; k < c; ++k) {
        const float s = img.at(2 * y, 2 * x, k) + img.at(2 * y, 2 * x + 1, k) + img.at(2 * y + 1, 2 * x, k) +
                        img.at(2 * y + 1, 2 * x + 1, k);
        out.at(y, x, k) = std::clamp(0.25f * s, 0.0f, 1.0f);
      }
    }
  }
  return out;
}

ScaleSet downsample_dyadic(const Image& img, int levels) {
  if (levels < 1) throw ArgumentError("pyramid needs at least one level");
  const int div = 1 << (levels - 1);
  if (img.height() % div != 0 || img.width() % div != 0) {
    throw ShapeError("image " + std::to_string(img.height()) + "x" + std::to_string(img.width()) +
                     " not divisible by 2^" + std::to_string(levels - 1));
  }
  ScaleSet set;
  set.images.reserve(levels);
  set.images.push_back(img);
  for (int k = 1; k < levels; ++k) set.images.push_back(average_pool2(set.images.back()));
  return set;
}

Image resize_bilinear(const Image& img, int height, int width) {
  if (height < 1 || width < 1) throw ArgumentError("resize target must be positive");
  if (height == img.height() && width == img.width()) return img;
  const int c = img.channels();
  Image out(height, width, c);
  const double sy = static_cast<double>(img.height()) / height;
  const double sx = static_cast<double>(img.width()) / width;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(img.height() - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(img.width() - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width() - 1);
      const double wx = fx - x0;
      for (int k = 0; k < c; ++k) {
        const double top = (1 - wx) * img.at(y0, x0, k) + wx * img.at(y0, x1, k);
        const double bot = (1 - wx) * img.at(y1, x0, k) + wx * img.at(y1, x1, k);
        out.at(y, x, k) = static_cast<float>(std::clamp((1 - wy) * top + wy * bot, 0.0, 1.0));
      }
    }
  }
  return out;
}

Image to_luminance(const Image& img) {
  if (img.channels() == 1) return img;
  Image out(img.height(), img.width(), 1);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const float l = 0.299f * img.at(y, x, 0) + 0.587f * img.at(y, x, 1) + 0.114f * img.at(y, x, 2);
      out.at(y, x, 0) = std::clamp(l, 0.0f, 1.0f);
    }
  }
  return out;
}

Image to_rgb(const Image& img) {
  if (img.channels() == 3) return img;
  Image out(img.height(), img.width(), 3);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const float v = img.at(y, x, 0);
      out.at(y, x, 0) = v;
      out.at(y, x, 1) = v;
      out.at(y, x, 2) = v;
    }
  }
  return out;
}

}  // namespace n2d
