#include "n2d/nn/training.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>
#include <sstream>

#include "n2d/core/error.hpp"
#include "n2d/core/io.hpp"
#include "n2d/nn/tensor_image.hpp"

namespace n2d::nn {

namespace {

// Offsets keep the critic and feature-extractor streams apart from the
// generator's.
constexpr std::uint64_t kCriticSeedOffset = 0x9E37;
constexpr std::uint64_t kFeatureSeedOffset = 0x7F4A;

std::unique_ptr<torch::optim::RMSprop> make_rmsprop(std::vector<torch::Tensor> params, const TrainConfig& cfg) {
  auto opts = torch::optim::RMSpropOptions(cfg.learning_rate).alpha(cfg.rmsprop_decay).eps(cfg.rmsprop_eps);
  return std::make_unique<torch::optim::RMSprop>(std::move(params), opts);
}

bool all_finite(const std::vector<torch::Tensor>& params) {
  for (const auto& p : params) {
    if (p.grad().defined() && !torch::isfinite(p.grad()).all().item<bool>()) return false;
  }
  return true;
}

torch::Tensor gather(const std::vector<Image>& frames, const std::vector<std::size_t>& idx) {
  std::vector<const Image*> ptrs;
  ptrs.reserve(idx.size());
  for (auto i : idx) ptrs.push_back(&frames[i]);
  return to_batch(ptrs);
}

}  // namespace

void validate(const TrainConfig& cfg) {
  if (cfg.batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate)) throw ArgumentError("learning_rate must be > 0");
  if (cfg.epochs < 0) throw ArgumentError("epochs must be >= 0");
  if (cfg.n_critic < 0) throw ArgumentError("n_critic must be >= 0");
  if (!(cfg.clip_bound > 0.0)) throw ArgumentError("clip bound must be positive");
  if (cfg.num_scales < 1) throw ArgumentError("num_scales must be >= 1");
  if (cfg.max_generator_steps < 0) throw ArgumentError("max_generator_steps must be >= 0");
  if (cfg.channel_divisor < 1) throw ArgumentError("channel_divisor must be >= 1");
  if (cfg.divergence_patience < 1) throw ArgumentError("divergence_patience must be >= 1");
}

GeneratorConfig generator_config_for(const TrainConfig& cfg, int height, int width) {
  GeneratorConfig g;
  g.height = height;
  g.width = width;
  g.num_scales = cfg.num_scales;
  g.seed = cfg.seed;
  g.channel_divisor = cfg.channel_divisor;
  return g;
}

TrainState::TrainState(const GeneratorConfig& gcfg, const TrainConfig& tcfg) : config(tcfg) {
  validate(tcfg);
  if (gcfg.num_scales != tcfg.num_scales) throw ArgumentError("generator and training scale counts differ");
  generator = build_generator(gcfg);
  critics = build_critics(tcfg.num_scales, gcfg.height, gcfg.width, tcfg.seed + kCriticSeedOffset);
  critics->clip_bound = tcfg.clip_bound;
  features = FeatureExtractor(tcfg.seed + kFeatureSeedOffset);
  gen_opt = make_rmsprop(generator->parameters(), tcfg);
  critic_opt = make_rmsprop(critics->parameters(), tcfg);
}

void TrainState::set_learning_rate(double lr) {
  if (!(lr >= 0.0)) throw ArgumentError("learning rate must be >= 0");
  config.learning_rate = lr;
  for (auto* opt : {gen_opt.get(), critic_opt.get()}) {
    for (auto& group : opt->param_groups()) {
      static_cast<torch::optim::RMSpropOptions&>(group.options()).lr(lr);
    }
  }
}

std::vector<torch::Tensor> reference_pyramid(const Image& reference, int num_scales, int64_t batch) {
  auto ref = to_batch({reference});
  auto pyr = tensor_pyramid(ref, num_scales);
  for (auto& t : pyr) t = t.expand({batch, t.size(1), t.size(2), t.size(3)}).contiguous();
  return pyr;
}

std::vector<double> critic_step(TrainState& state, const torch::Tensor& night_batch, const std::vector<torch::Tensor>& ref_pyramid) {
  auto& gen = state.generator;
  const int q = state.config.num_scales;
  std::vector<torch::Tensor> fakes;
  {
    torch::NoGradGuard no_grad;
    gen->train();
    gen->set_track_running_stats(false);
    fakes = gen->forward(night_batch, state.config.pathway);
    gen->set_track_running_stats(true);
  }
  state.critic_opt->zero_grad();
  auto loss = torch::zeros({});
  std::vector<double> objectives;
  for (int k = 0; k < q; ++k) {
    auto& d = state.critics->at(k);
    auto objective = d->forward(ref_pyramid[static_cast<std::size_t>(k)]).mean() - d->forward(fakes[static_cast<std::size_t>(k)]).mean();
    objectives.push_back(objective.item<double>());
    loss = loss - objective;
  }
  if (!torch::isfinite(loss).item<bool>()) throw DivergenceError("critic objective is not finite");
  loss.backward();
  auto params = state.critics->parameters();
  if (!all_finite(params)) throw DivergenceError("critic gradient is not finite");
  state.critic_opt->step();
  clip_weights(*state.critics, state.critics->clip_bound);
  ++state.critic_updates;
  return objectives;
}

GeneratorLoss generator_loss(TrainState& state, const torch::Tensor& night_batch, const std::vector<torch::Tensor>& ref_pyramid) {
  const auto& w = state.config.loss_weights;
  auto outs = state.generator->forward(night_batch, state.config.pathway);
  GeneratorLoss result;
  result.total = torch::zeros({});
  for (std::size_t k = 0; k < outs.size(); ++k) {
    const auto& out = outs[k];
    const auto& ref = ref_pyramid.at(k);
    auto adv = adversarial_loss(*state.critics->at(static_cast<int>(k)), out);
    auto tv = nn::tv_loss(out);
    auto mse = nn::mse_loss(out, ref);
    auto p = perceptual_loss(*state.features, out, ref);
    auto total = total_loss(w, adv, tv, mse, p);
    result.total = result.total + total;
    ScaleLoss s;
    s.adv = adv.item<double>();
    s.tv = tv.item<double>();
    s.mse = mse.item<double>();
    s.perceptual = p.item<double>();
    s.total = total.item<double>();
    result.scales.push_back(s);
  }
  return result;
}

StepRecord generator_step(TrainState& state, const torch::Tensor& night_batch, const std::vector<torch::Tensor>& ref_pyramid) {
  state.generator->train();
  state.generator->set_track_running_stats(true);
  auto critic_params = state.critics->parameters();
  for (auto& p : critic_params) p.set_requires_grad(false);
  struct Restore {
    std::vector<torch::Tensor>& ps;
    ~Restore() {
      for (auto& p : ps) p.set_requires_grad(true);
    }
  } restore{critic_params};

  state.gen_opt->zero_grad();
  auto loss = generator_loss(state, night_batch, ref_pyramid);
  StepRecord rec;
  rec.step = state.step;
  rec.epoch = state.epoch;
  rec.scales = loss.scales;
  rec.total = loss.total.item<double>();

  bool finite = std::isfinite(rec.total);
  if (finite) {
    loss.total.backward();
    finite = all_finite(state.generator->parameters());
  }
  if (!finite) {
    state.gen_opt->zero_grad();
    if (++state.consecutive_nonfinite >= state.config.divergence_patience) {
      throw DivergenceError("generator loss not finite for " + std::to_string(state.consecutive_nonfinite) +
                            " consecutive steps (step " + std::to_string(state.step) + ")");
    }
  } else {
    state.consecutive_nonfinite = 0;
    state.gen_opt->step();
  }
  ++state.step;
  return rec;
}

std::unique_ptr<TrainState> train(const std::vector<Image>& train_frames, const Image& reference, const TrainConfig& config,
                                  const TrainObserver& observer) {
  validate(config);
  if (train_frames.empty()) throw DataError("no training frames");
  const int h = reference.height();
  const int w = reference.width();
  for (const auto& f : train_frames) {
    if (f.height() != h || f.width() != w) throw ShapeError("training frame size differs from the reference");
  }
  auto state = std::make_unique<TrainState>(generator_config_for(config, h, w), config);

  const std::size_t n = train_frames.size();
  const std::size_t b = static_cast<std::size_t>(config.batch_size);
  const std::size_t steps_per_epoch = (n + b - 1) / b;
  const std::size_t critic_batch = std::min(b, n);
  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);

  std::vector<std::vector<torch::Tensor>> pyramids(b + 1);
  auto pyramid_for = [&](std::size_t size) -> const std::vector<torch::Tensor>& {
    if (pyramids[size].empty()) pyramids[size] = reference_pyramid(reference, config.num_scales, static_cast<int64_t>(size));
    return pyramids[size];
  };

  std::vector<std::size_t> order(n);
  std::vector<double> last_critic;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    state->epoch = epoch;
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t s = 0; s < steps_per_epoch; ++s) {
      if (config.max_generator_steps > 0 && state->step >= config.max_generator_steps) return state;
      for (int c = 0; c < config.n_critic; ++c) {
        std::vector<std::size_t> idx(critic_batch);
        for (auto& i : idx) i = pick(rng);
        last_critic = critic_step(*state, gather(train_frames, idx), pyramid_for(critic_batch));
        if (observer.after_critic_update) observer.after_critic_update(*state);
      }
      const std::size_t lo = s * b;
      const std::size_t hi = std::min(n, lo + b);
      std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(lo), order.begin() + static_cast<std::ptrdiff_t>(hi));
      auto rec = generator_step(*state, gather(train_frames, idx), pyramid_for(idx.size()));
      rec.critic_losses = last_critic;
      state->history.push_back(rec);
      if (observer.after_generator_step) observer.after_generator_step(*state, rec);
    }
  }
  state->epoch = config.epochs;
  return state;
}

std::string format_loss_log(const std::vector<StepRecord>& history) {
  std::ostringstream os;
  for (const auto& rec : history) {
    for (std::size_t k = 0; k < rec.scales.size(); ++k) {
      const auto& s = rec.scales[k];
      nlohmann::json j = {{"step", rec.step}, {"epoch", rec.epoch}, {"scale", k},      {"l_adv", s.adv},
                          {"l_tv", s.tv},     {"l_mse", s.mse},     {"l_p", s.perceptual}, {"total", s.total}};
      os << j.dump() << '\n';
    }
  }
  return os.str();
}

void write_loss_log(const std::filesystem::path& path, const std::vector<StepRecord>& history) {
  const auto text = format_loss_log(history);
  write_file_atomic(path, text);
}

std::uint64_t parameter_digest(torch::nn::Module& module, bool include_buffers) {
  std::uint64_t hash = 1469598103934665603ULL;
  auto feed = [&](const torch::Tensor& t) {
    auto c = t.detach().to(torch::kCPU).contiguous();
    const auto* bytes = static_cast<const unsigned char*>(c.data_ptr());
    const auto len = static_cast<std::size_t>(c.numel()) * c.element_size();
    for (std::size_t i = 0; i < len; ++i) {
      hash ^= bytes[i];
      hash *= 1099511628211ULL;
    }
  };
  for (const auto& p : module.parameters()) feed(p);
  if (include_buffers) {
    for (const auto& buf : module.buffers()) feed(buf);
  }
  return hash;
}

}  // namespace n2d::nn
