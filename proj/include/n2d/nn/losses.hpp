#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <functional>

namespace n2d::nn {

class CriticImpl;

struct LossWeights {
  double adv = 1e-1;
  double tv = 1e-3;
  double mse = 1e-1;
  double perceptual = 1e-5;
};

/// Frozen convolutional feature stack for the perceptual loss. The default
/// stack mirrors the first three convolutions of VGG-16 (3->64, 64->64,
/// 2x2 max-pool, 64->128, each followed by ReLU) with seed-fixed random
/// weights; pretrained weights are not bundled.
class FeatureExtractorImpl : public torch::nn::Module {
 public:
  /// Random-weight VGG-shaped stack.
  explicit FeatureExtractorImpl(std::uint64_t seed);
  /// `layers` identity stages (phi_i(x) = x); useful for testing.
  static std::shared_ptr<FeatureExtractorImpl> identity(int layers = 1);

  /// Activations of each used layer.
  std::vector<torch::Tensor> features(const torch::Tensor& x);
  int num_layers() const { return num_layers_; }
  bool pretrained() const { return false; }

 private:
  FeatureExtractorImpl() = default;
  int num_layers_ = 0;
  bool identity_ = false;
  torch::nn::Conv2d conv1_{nullptr}, conv2_{nullptr}, conv3_{nullptr};
};
TORCH_MODULE(FeatureExtractor);

/// -mean(scores).
torch::Tensor adversarial_loss(const torch::Tensor& scores);
torch::Tensor adversarial_loss(CriticImpl& critic, const torch::Tensor& generated);

/// (1/C) sum_i (1/(W_i H_i)) sum_{x,y} sum_channels (phi_i(gen) - phi_i(ref))^2,
/// averaged over the batch.
torch::Tensor perceptual_loss(FeatureExtractorImpl& fx, const torch::Tensor& generated, const torch::Tensor& reference);

/// Squared error averaged over pixels, channels and batch.
torch::Tensor mse_loss(const torch::Tensor& generated, const torch::Tensor& reference);

inline constexpr double kTvEpsilon = 1e-8;

/// sum over valid positions and channels of sqrt(dx^2 + dy^2 + eps^2) - eps,
/// averaged over the batch. dx is the difference to the next row, dy to the
/// next column; the last row and column have no valid position.
torch::Tensor tv_loss(const torch::Tensor& generated);

/// Weighted sum of the four components.
double total_loss(const LossWeights& w, double adv, double tv, double mse, double p);
torch::Tensor total_loss(const LossWeights& w, const torch::Tensor& adv, const torch::Tensor& tv, const torch::Tensor& mse,
                         const torch::Tensor& p);

}  // namespace n2d::nn
