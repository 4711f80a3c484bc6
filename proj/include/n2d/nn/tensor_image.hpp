#pragma once

#include <torch/torch.h>

#include <vector>

#include "n2d/core/image.hpp"

namespace n2d::nn {

/// [C,H,W] float32 tensor from an Image.
torch::Tensor to_tensor(const Image& img);

/// [B,3,H,W] batch; single-channel images are replicated to three channels.
torch::Tensor to_batch(const std::vector<Image>& images);
torch::Tensor to_batch(const std::vector<const Image*>& images);

/// Image from a [C,H,W] tensor (values clamped to [0,1]).
Image to_image(const torch::Tensor& chw);

/// One ScaleSet per batch element from per-scale [B,3,h,w] tensors.
std::vector<ScaleSet> to_scale_sets(const std::vector<torch::Tensor>& scales);

/// Dyadic 2x2 average-pool pyramid of a [B,C,H,W] tensor.
std::vector<torch::Tensor> tensor_pyramid(const torch::Tensor& x, int levels);

}  // namespace n2d::nn
