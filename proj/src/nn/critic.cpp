#include "n2d/nn/critic.hpp"

#include "n2d/core/error.hpp"
#include "n2d/nn/tensor_image.hpp"

namespace n2d::nn {

CriticImpl::CriticImpl(int height, int width) : height_(height), width_(width) {
  trunk_ = register_module("trunk", torch::nn::Sequential());
  int64_t in = 3;
  for (int64_t out : {64, 128, 256, 512}) {
    trunk_->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 4).stride(2).padding(1)));
    trunk_->push_back(torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(0.2)));
    in = out;
  }
  head_ = register_module("head", torch::nn::Linear(512, 1));
}

torch::Tensor CriticImpl::forward(const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(1) != 3 || x.size(2) != height_ || x.size(3) != width_) {
    throw ShapeError("critic expects [B,3," + std::to_string(height_) + "," + std::to_string(width_) + "] input");
  }
  auto features = trunk_->forward(x).mean({2, 3});
  return head_(features).squeeze(1);
}

CriticSetImpl::CriticSetImpl(int num_scales, int base_height, int base_width) {
  if (num_scales < 1) throw ArgumentError("at least one critic scale is required");
  for (int k = 0; k < num_scales; ++k) {
    const int h = base_height >> k;
    const int w = base_width >> k;
    if (h < 16 || w < 16) throw ShapeError("critic input below 16x16 at scale " + std::to_string(k));
    critics_.push_back(register_module("scale" + std::to_string(k), Critic(h, w)));
  }
}

CriticSet build_critics(int num_scales, int base_resolution, std::uint64_t seed) {
  return build_critics(num_scales, base_resolution, base_resolution, seed);
}

CriticSet build_critics(int num_scales, int base_height, int base_width, std::uint64_t seed) {
  torch::manual_seed(seed);
  CriticSet critics(num_scales, base_height, base_width);
  torch::NoGradGuard no_grad;
  for (auto& p : critics->named_parameters()) {
    if (p.key().ends_with("bias")) {
      p.value().zero_();
    } else {
      p.value().normal_(0.0, 0.02);
    }
  }
  return critics;
}

double score(Critic& critic, const Image& img) {
  torch::NoGradGuard no_grad;
  return critic->forward(to_batch({img})).item<double>();
}

void clip_weights(torch::nn::Module& module, double bound) {
  if (!(bound > 0.0)) throw ArgumentError("clip bound must be positive");
  torch::NoGradGuard no_grad;
  for (auto& p : module.parameters()) p.clamp_(-bound, bound);
}

double max_abs_weight(const torch::nn::Module& module) {
  torch::NoGradGuard no_grad;
  double m = 0.0;
  for (auto& p : module.parameters()) m = std::max(m, p.abs().max().item<double>());
  return m;
}

}  // namespace n2d::nn
