#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace n2d {

/// Float image with intensities in [0,1], stored row-major with interleaved
/// channels (index = (y * width + x) * channels + c).
class Image {
 public:
  Image() = default;
  Image(int height, int width, int channels, float fill = 0.0f);

  /// Takes ownership of `data`; throws if the size does not match or any
  /// value lies outside [0,1].
  static Image from_data(int height, int width, int channels, std::vector<float> data);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float& at(int y, int x, int c) { return data_[index(y, x, c)]; }
  const float& at(int y, int x, int c) const { return data_[index(y, x, c)]; }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  bool same_shape(const Image& other) const {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }

  /// Clamps every value into [0,1] in place.
  void clamp();

  double mean() const;

  friend bool operator==(const Image& a, const Image& b) = default;

 private:
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

/// Binary foreground map: 1 foreground, 0 background.
struct Mask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;
  int frame_index = -1;

  Mask() = default;
  Mask(int h, int w, int frame = -1)
      : height(h), width(w), data(static_cast<std::size_t>(h) * w, 0), frame_index(frame) {}

  std::uint8_t& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::size_t count() const;
};

struct VideoSequence {
  std::vector<Image> frames;
  double frame_rate = 25.0;
};

/// Throws DataError when empty or when frame shapes differ.
void validate_sequence(const VideoSequence& seq);

struct BlockGrid {
  int block_size = 0;
  int grid_rows = 0;
  int grid_cols = 0;
  std::vector<Image> blocks;  // row-major over the grid
};

/// images[k] is the k-th dyadic level; images[0] is full resolution.
struct ScaleSet {
  std::vector<Image> images;

  int num_scales() const { return static_cast<int>(images.size()); }
};

BlockGrid split_blocks(const Image& img, int block_size);
Image assemble_blocks(const BlockGrid& grid);

/// Level k is 2x2 average pooling applied k times.
ScaleSet downsample_dyadic(const Image& img, int levels);
Image average_pool2(const Image& img);

Image resize_bilinear(const Image& img, int height, int width);

/// 0.299 R + 0.587 G + 0.114 B; single-channel input is returned unchanged.
Image to_luminance(const Image& img);

/// Repeats a single-channel image into three channels.
Image to_rgb(const Image& img);

/// Rounds every value to the nearest of the 256 8-bit levels, matching what
/// a save/load round trip produces.
Image quantize8(const Image& img);

bool is_power_of_two(int v);

}  // namespace n2d
