#include "torch_doctest.hpp"

#include <cmath>

#include "grad_check.hpp"
#include "n2d/core/error.hpp"
#include "n2d/nn/critic.hpp"
#include "n2d/nn/losses.hpp"

using namespace n2d;
using namespace n2d::nn;

namespace {

double item(const torch::Tensor& t) { return t.item<double>(); }

torch::Tensor random_input(int64_t seed, int64_t c = 3) {
  torch::manual_seed(static_cast<uint64_t>(seed));
  return torch::rand({1, c, 8, 8}, torch::kDouble);
}

}  // namespace

TEST_CASE("adversarial loss") {
  Critic critic(16, 16);
  {
    torch::NoGradGuard g;
    for (auto& p : critic->parameters()) p.zero_();
    critic->head()->bias.fill_(2.5);
  }
  CHECK(item(adversarial_loss(*critic, torch::rand({3, 3, 16, 16}))) == doctest::Approx(-2.5));

  // Sum-of-pixels critic on a mid-grey 256x256x3 frame.
  const auto grey = torch::full({1, 3, 256, 256}, 0.5, torch::kDouble);
  CHECK(item(adversarial_loss(grey.sum({1, 2, 3}))) == -98304.0);
  CHECK(item(adversarial_loss(torch::tensor({1.0, 3.0}))) == -2.0);
}

TEST_CASE("perceptual loss") {
  FeatureExtractor fx(7);
  fx->to(torch::kDouble);
  const auto a = random_input(1);
  const auto b = random_input(2);
  CHECK(item(perceptual_loss(*fx, a, a)) == 0.0);
  for (int s = 0; s < 10; ++s) CHECK(item(perceptual_loss(*fx, random_input(s), random_input(s + 100))) >= 0.0);

  auto id = FeatureExtractorImpl::identity(1);
  const auto g1 = random_input(3, 1);
  const auto r1 = random_input(4, 1);
  CHECK(item(perceptual_loss(*id, g1, r1)) == doctest::Approx(item((g1 - r1).pow(2).mean())).epsilon(1e-14));
  // With three channels the per-location difference is summed over channels.
  CHECK(item(perceptual_loss(*id, a, b)) == doctest::Approx(item((a - b).pow(2).sum() / 64.0)).epsilon(1e-14));
  CHECK_THROWS_AS(perceptual_loss(*id, a, random_input(5, 1)), ShapeError);
}

TEST_CASE("mse loss") {
  const auto a = random_input(1);
  CHECK(item(nn::mse_loss(a, a)) == 0.0);
  CHECK(item(nn::mse_loss(torch::ones({1, 3, 4, 4}), torch::zeros({1, 3, 4, 4}))) == 1.0);
  const auto g = torch::tensor({0.0, 0.5, 1.0, 0.0}).view({1, 1, 2, 2});
  CHECK(item(nn::mse_loss(g, torch::zeros_like(g))) == 0.3125);
}

TEST_CASE("tv loss") {
  CHECK(item(nn::tv_loss(torch::full({1, 3, 256, 256}, 0.4, torch::kDouble))) < 1e-3);
  const auto x = torch::tensor({0.0, 1.0, 0.0, 1.0}).view({1, 1, 2, 2}).to(torch::kDouble);
  CHECK(item(nn::tv_loss(x)) == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(item(nn::tv_loss(x)) == doctest::Approx(1.0 - kTvEpsilon).epsilon(1e-14));
  CHECK_THROWS_AS(nn::tv_loss(torch::zeros({1, 1, 1, 4})), ShapeError);
}

TEST_CASE("total loss weights") {
  const LossWeights w;
  CHECK(total_loss(w, 1, 1, 1, 1) == doctest::Approx(0.20101).epsilon(1e-12));
  CHECK(total_loss(w, 0, 0, 0, 0) == 0.0);
}

TEST_CASE("gradients agree with central differences") {
  FeatureExtractor fx(3);
  fx->to(torch::kDouble);
  auto critics = build_critics(1, 16, 5);
  critics->to(torch::kDouble);
  auto& critic = *critics->at(0);
  // Rectifier kinks sit within 1e-4 of some inputs, so the piecewise-linear
  // losses use a smaller step.
  const double smooth_h = 1e-4, kinked_h = 1e-6;
  double worst_mse = 0, worst_tv = 0, worst_p = 0, worst_adv = 0;
  for (int s = 0; s < 20; ++s) {
    const auto x = random_input(1000 + s);
    const auto ref = random_input(2000 + s);
    worst_mse = std::max(worst_mse, test::gradient_rel_error([&](const torch::Tensor& g) { return nn::mse_loss(g, ref); }, x, smooth_h));
    worst_tv = std::max(worst_tv, test::gradient_rel_error([&](const torch::Tensor& g) { return nn::tv_loss(g); }, x, smooth_h));
    worst_p = std::max(worst_p, test::gradient_rel_error([&](const torch::Tensor& g) { return perceptual_loss(*fx, g, ref); }, x, kinked_h));
    worst_adv = std::max(worst_adv, test::gradient_rel_error(
                                        [&](const torch::Tensor& g) {
                                          return adversarial_loss(critic, torch::upsample_nearest2d(g, {16, 16}));
                                        },
                                        x, kinked_h));
  }
  CHECK(worst_mse < 1e-3);
  CHECK(worst_tv < 1e-3);
  CHECK(worst_p < 1e-3);
  CHECK(worst_adv < 1e-3);
  MESSAGE("worst relative errors: mse " << worst_mse << " tv " << worst_tv << " perceptual " << worst_p << " adversarial " << worst_adv);
}
