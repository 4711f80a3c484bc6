#include "n2d/nn/losses.hpp"

#include "n2d/core/error.hpp"
#include "n2d/nn/critic.hpp"

namespace n2d::nn {

namespace {

void check_same(const torch::Tensor& a, const torch::Tensor& b) {
  if (a.sizes() != b.sizes()) throw ShapeError("loss inputs differ in shape");
  if (a.dim() != 4) throw ShapeError("loss inputs must be [B,C,H,W]");
}

}  // namespace

FeatureExtractorImpl::FeatureExtractorImpl(std::uint64_t seed) : num_layers_(3) {
  torch::manual_seed(seed);
  conv1_ = register_module("conv1", torch::nn::Conv2d(torch::nn::Conv2dOptions(3, 64, 3).padding(1)));
  conv2_ = register_module("conv2", torch::nn::Conv2d(torch::nn::Conv2dOptions(64, 64, 3).padding(1)));
  conv3_ = register_module("conv3", torch::nn::Conv2d(torch::nn::Conv2dOptions(64, 128, 3).padding(1)));
  torch::NoGradGuard no_grad;
  for (auto& p : parameters()) p.set_requires_grad(false);
  for (auto* c : {&conv1_, &conv2_, &conv3_}) {
    // He-normal keeps activation magnitudes stable through the ReLUs.
    torch::nn::init::kaiming_normal_((*c)->weight, 0.0, torch::kFanIn, torch::kReLU);
    (*c)->bias.zero_();
  }
  eval();
}

std::shared_ptr<FeatureExtractorImpl> FeatureExtractorImpl::identity(int layers) {
  if (layers < 1) throw ArgumentError("identity extractor needs at least one layer");
  auto fx = std::shared_ptr<FeatureExtractorImpl>(new FeatureExtractorImpl());
  fx->identity_ = true;
  fx->num_layers_ = layers;
  return fx;
}

std::vector<torch::Tensor> FeatureExtractorImpl::features(const torch::Tensor& x) {
  if (identity_) return std::vector<torch::Tensor>(static_cast<std::size_t>(num_layers_), x);
  std::vector<torch::Tensor> out;
  auto y = torch::relu(conv1_(x));
  out.push_back(y);
  y = torch::relu(conv2_(y));
  out.push_back(y);
  y = torch::relu(conv3_(torch::max_pool2d(y, 2)));
  out.push_back(y);
  return out;
}

torch::Tensor adversarial_loss(const torch::Tensor& scores) { return -scores.mean(); }

torch::Tensor adversarial_loss(CriticImpl& critic, const torch::Tensor& generated) {
  return adversarial_loss(critic.forward(generated));
}

torch::Tensor perceptual_loss(FeatureExtractorImpl& fx, const torch::Tensor& generated, const torch::Tensor& reference) {
  check_same(generated, reference);
  const auto fg = fx.features(generated);
  const auto fr = fx.features(reference);
  auto total = torch::zeros({}, generated.options());
  for (std::size_t i = 0; i < fg.size(); ++i) {
    // Channel-summed squared difference, averaged over locations and batch.
    total = total + (fg[i] - fr[i]).pow(2).sum(1).mean();
  }
  return total / static_cast<double>(fg.size());
}

torch::Tensor mse_loss(const torch::Tensor& generated, const torch::Tensor& reference) {
  check_same(generated, reference);
  return (reference - generated).pow(2).mean();
}

torch::Tensor tv_loss(const torch::Tensor& generated) {
  if (generated.dim() != 4) throw ShapeError("tv loss input must be [B,C,H,W]");
  if (generated.size(2) < 2 || generated.size(3) < 2) throw ShapeError("tv loss needs at least 2x2 images");
  const int64_t h = generated.size(2);
  const int64_t w = generated.size(3);
  using torch::indexing::Slice;
  auto base = generated.index({Slice(), Slice(), Slice(0, h - 1), Slice(0, w - 1)});
  auto dx = generated.index({Slice(), Slice(), Slice(1, h), Slice(0, w - 1)}) - base;
  auto dy = generated.index({Slice(), Slice(), Slice(0, h - 1), Slice(1, w)}) - base;
  auto mag = torch::sqrt(dx * dx + dy * dy + kTvEpsilon * kTvEpsilon) - kTvEpsilon;
  return mag.sum({1, 2, 3}).mean();
}

double total_loss(const LossWeights& w, double adv, double tv, double mse, double p) {
  return w.adv * adv + w.tv * tv + w.mse * mse + w.perceptual * p;
}

torch::Tensor total_loss(const LossWeights& w, const torch::Tensor& adv, const torch::Tensor& tv, const torch::Tensor& mse,
                         const torch::Tensor& p) {
  return w.adv * adv + w.tv * tv + w.mse * mse + w.perceptual * p;
}

}  // namespace n2d::nn
