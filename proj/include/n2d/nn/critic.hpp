#pragma once

#include <torch/torch.h>

#include <cstdint>

#include "n2d/core/image.hpp"

namespace n2d::nn {

inline constexpr double kDefaultClipBound = 0.01;

/// Wasserstein critic: stride-2 4x4 convolutions 3->64->128->256->512 with
/// leaky ReLU (slope 0.2), global average pooling and a linear score. No
/// normalisation layers, no output squashing.
class CriticImpl : public torch::nn::Module {
 public:
  CriticImpl(int height, int width);
  /// [B,3,h,w] -> [B] scores.
  torch::Tensor forward(const torch::Tensor& x);
  int height() const { return height_; }
  int width() const { return width_; }
  torch::nn::Linear& head() { return head_; }

 private:
  int height_;
  int width_;
  torch::nn::Sequential trunk_{nullptr};
  torch::nn::Linear head_{nullptr};
};
TORCH_MODULE(Critic);

/// One independent critic per scale; critic k judges images of
/// (base_height / 2^k) x (base_width / 2^k).
class CriticSetImpl : public torch::nn::Module {
 public:
  CriticSetImpl(int num_scales, int base_height, int base_width);
  Critic& at(int scale) { return critics_.at(static_cast<std::size_t>(scale)); }
  int num_scales() const { return static_cast<int>(critics_.size()); }
  double clip_bound = kDefaultClipBound;

 private:
  std::vector<Critic> critics_;
};
TORCH_MODULE(CriticSet);

/// Weights ~ N(0, 0.02), biases zero, drawn from `seed`.
CriticSet build_critics(int num_scales, int base_resolution, std::uint64_t seed);
CriticSet build_critics(int num_scales, int base_height, int base_width, std::uint64_t seed);

/// Critic score of a single image.
double score(Critic& critic, const Image& img);

/// Clamps every parameter of `module` into [-bound, bound].
void clip_weights(torch::nn::Module& module, double bound);

/// Largest absolute parameter value.
double max_abs_weight(const torch::nn::Module& module);

}  // namespace n2d::nn
