#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "n2d/core/image.hpp"
#include "n2d/nn/critic.hpp"
#include "n2d/nn/generator.hpp"
#include "n2d/nn/losses.hpp"

namespace n2d::nn {

struct TrainConfig {
  int batch_size = 4;
  double learning_rate = 1e-4;
  int epochs = 30;
  int n_critic = 5;
  double clip_bound = kDefaultClipBound;
  int num_scales = 2;
  std::uint64_t seed = 0;
  LossWeights loss_weights;
  Pathway pathway = Pathway::Both;
  /// Stop after this many generator steps (0: run all epochs).
  int max_generator_steps = 0;
  /// Hidden-width divisor for the generator (1 = published widths).
  int channel_divisor = 1;
  double rmsprop_decay = 0.9;
  double rmsprop_eps = 1e-8;
  int divergence_patience = 10;
};

void validate(const TrainConfig& cfg);

struct ScaleLoss {
  double adv = 0.0;
  double tv = 0.0;
  double mse = 0.0;
  double perceptual = 0.0;
  double total = 0.0;
};

/// One generator step: per-scale components and the differentiated sum.
struct StepRecord {
  int step = 0;
  int epoch = 0;
  std::vector<ScaleLoss> scales;
  double total = 0.0;
  std::vector<double> critic_losses;  // last critic update, per scale
};

/// Generator, critics, optimiser state and history of one training run.
class TrainState {
 public:
  TrainState(const GeneratorConfig& gcfg, const TrainConfig& tcfg);

  Generator generator{nullptr};
  CriticSet critics{nullptr};
  FeatureExtractor features{nullptr};
  std::unique_ptr<torch::optim::RMSprop> gen_opt;
  std::unique_ptr<torch::optim::RMSprop> critic_opt;
  TrainConfig config;
  int epoch = 0;
  int step = 0;
  int critic_updates = 0;
  int consecutive_nonfinite = 0;
  std::vector<StepRecord> history;

  /// Sets the learning rate of both optimisers.
  void set_learning_rate(double lr);
};

/// Reference pyramid expanded to the batch size.
std::vector<torch::Tensor> reference_pyramid(const Image& reference, int num_scales, int64_t batch);

/// One RMSProp ascent step on sum_k [E D_k(ref_k) - E D_k(G(x)_k)], followed
/// by weight clipping. The generator is not modified (its normalisation
/// statistics are not updated either). Returns per-scale critic objectives
/// (ref score minus generated score) before the step.
std::vector<double> critic_step(TrainState& state, const torch::Tensor& night_batch, const std::vector<torch::Tensor>& ref_pyramid);

/// Per-scale loss terms for a batch without updating anything; `total` is the
/// tensor that generator_step differentiates.
struct GeneratorLoss {
  torch::Tensor total;
  std::vector<ScaleLoss> scales;
};
GeneratorLoss generator_loss(TrainState& state, const torch::Tensor& night_batch, const std::vector<torch::Tensor>& ref_pyramid);

/// One RMSProp descent step on the multi-scale generator loss. Critics are
/// not modified. Throws DivergenceError after `divergence_patience`
/// consecutive non-finite losses (non-finite steps are skipped).
StepRecord generator_step(TrainState& state, const torch::Tensor& night_batch, const std::vector<torch::Tensor>& ref_pyramid);

struct TrainObserver {
  std::function<void(const TrainState&)> after_critic_update;
  std::function<void(const TrainState&, const StepRecord&)> after_generator_step;
};

/// Alternates n_critic critic updates with one generator update over
/// epochs x ceil(N / batch) generator steps. Data order derives from
/// config.seed; every batch is paired with the single reference.
std::unique_ptr<TrainState> train(const std::vector<Image>& train_frames, const Image& reference, const TrainConfig& config,
                                  const TrainObserver& observer = {});

/// Generator configuration implied by a training configuration and frame size.
GeneratorConfig generator_config_for(const TrainConfig& cfg, int height, int width);

/// One JSON object per line and scale:
/// {"step","epoch","scale","l_adv","l_tv","l_mse","l_p","total"}.
std::string format_loss_log(const std::vector<StepRecord>& history);
void write_loss_log(const std::filesystem::path& path, const std::vector<StepRecord>& history);

/// FNV-1a digest over the raw bytes of every parameter (and buffer when
/// asked), in registration order.
std::uint64_t parameter_digest(torch::nn::Module& module, bool include_buffers = false);

}  // namespace n2d::nn
