#include "n2d/pipeline/pipeline.hpp"

#include <opencv2/core/version.hpp>
#include <torch/version.h>

#include <fstream>
#include <map>

#include "n2d/core/error.hpp"
#include "n2d/core/io.hpp"
#include "n2d/enhance/enhancement.hpp"
#include "n2d/nn/tensor_image.hpp"

namespace n2d::pipeline {

Baseline parse_baseline(const std::string& s) {
  if (s == "gmm") return Baseline::Gmm;
  if (s == "he-gmm") return Baseline::HeGmm;
  if (s == "msr-gmm") return Baseline::MsrGmm;
  throw ArgumentError("unknown baseline '" + s + "' (expected gmm, he-gmm or msr-gmm)");
}

std::string to_string(Baseline b) {
  switch (b) {
    case Baseline::Gmm: return "gmm";
    case Baseline::HeGmm: return "he-gmm";
    case Baseline::MsrGmm: return "msr-gmm";
  }
  return "gmm";
}

std::vector<Image> preprocess(Baseline method, const std::vector<Image>& frames) {
  if (method == Baseline::Gmm) return frames;
  std::vector<Image> out;
  out.reserve(frames.size());
  for (const auto& f : frames) {
    out.push_back(method == Baseline::HeGmm ? enhance::histogram_equalization(f) : enhance::multiscale_retinex(f));
  }
  return out;
}

std::vector<int> test_indices(const Dataset& data) {
  std::vector<int> idx;
  for (int t = data.train_split(); t < data.num_frames(); ++t) idx.push_back(t);
  return idx;
}

std::vector<Mask> test_ground_truth(const Dataset& data) {
  std::vector<Mask> gt;
  for (int t : test_indices(data)) {
    const auto& m = data.gt.size() > static_cast<std::size_t>(t) ? data.gt[static_cast<std::size_t>(t)] : std::nullopt;
    if (!m) throw DataError("missing ground truth for frame " + std::to_string(t));
    gt.push_back(*m);
  }
  return gt;
}

std::vector<Mask> run_baseline(Baseline method, const Dataset& data, const bg::GmmOptions& opts) {
  auto masks = bg::run_gmm(preprocess(method, data.train_frames()), preprocess(method, data.test_frames()), opts);
  for (std::size_t i = 0; i < masks.size(); ++i) masks[i].frame_index = data.train_split() + static_cast<int>(i);
  return masks;
}

bg::MultiScaleBayesModel fit_from_generator(nn::Generator& gen, const std::vector<Image>& train, nn::Pathway pathway,
                                            double sigma_floor) {
  const auto generated = nn::generate_all(gen, train, pathway);
  return bg::fit_background(generated, sigma_floor);
}

std::vector<Mask> detect_generated(const bg::MultiScaleBayesModel& model, const std::vector<ScaleSet>& generated, int first_index,
                                   const bg::DetectOptions& opts) {
  std::vector<Mask> masks;
  masks.reserve(generated.size());
  for (std::size_t i = 0; i < generated.size(); ++i) {
    auto m = bg::detect_foreground(model, generated[i], opts);
    m.frame_index = first_index + static_cast<int>(i);
    masks.push_back(std::move(m));
  }
  return masks;
}

std::vector<Mask> detect_frames(nn::Generator& gen, const bg::MultiScaleBayesModel& model, const std::vector<Image>& frames,
                                int first_index, nn::Pathway pathway, const bg::DetectOptions& opts) {
  return detect_generated(model, nn::generate_all(gen, frames, pathway), first_index, opts);
}

std::vector<eval::StageThroughput> benchmark(nn::Generator& gen, const bg::MultiScaleBayesModel& model,
                                             const std::vector<Image>& frames, int warmup) {
  const auto generated = nn::generate_all(gen, frames);
  std::map<const Image*, const ScaleSet*> lookup;
  for (std::size_t i = 0; i < frames.size(); ++i) lookup[&frames[i]] = &generated[i];

  const bool was_training = gen->is_training();
  gen->eval();
  auto tensor_of = [](const Image& img) { return nn::to_batch(std::vector<const Image*>{&img}); };
  std::vector<eval::Stage> stages{
      {"global",
       [&](const Image& img) {
         torch::NoGradGuard no_grad;
         gen->global_path->forward(tensor_of(img));
       }},
      {"local",
       [&](const Image& img) {
         torch::NoGradGuard no_grad;
         gen->local_path->forward(gen->split_blocks(tensor_of(img)));
       }},
      {"n2dgan",
       [&](const Image& img) {
         torch::NoGradGuard no_grad;
         gen->forward(tensor_of(img));
       }},
      {"detection", [&](const Image& img) { bg::detect_foreground(model, *lookup.at(&img)); }},
  };
  auto result = eval::benchmark_fps(stages, frames, warmup);
  gen->train(was_training);
  return result;
}

nlohmann::json to_json(const nn::TrainConfig& cfg) {
  return {{"batch_size", cfg.batch_size},
          {"learning_rate", cfg.learning_rate},
          {"epochs", cfg.epochs},
          {"n_critic", cfg.n_critic},
          {"clip_bound", cfg.clip_bound},
          {"num_scales", cfg.num_scales},
          {"seed", cfg.seed},
          {"loss_weights",
           {{"adv", cfg.loss_weights.adv},
            {"tv", cfg.loss_weights.tv},
            {"mse", cfg.loss_weights.mse},
            {"perceptual", cfg.loss_weights.perceptual}}},
          {"pathway", nn::to_string(cfg.pathway)},
          {"max_generator_steps", cfg.max_generator_steps},
          {"channel_divisor", cfg.channel_divisor},
          {"rmsprop_decay", cfg.rmsprop_decay},
          {"rmsprop_eps", cfg.rmsprop_eps},
          {"divergence_patience", cfg.divergence_patience}};
}

nlohmann::json run_meta(const std::string& command, const nlohmann::json& config, std::uint64_t seed) {
  return {{"command", command},
          {"config", config},
          {"seed", seed},
          {"versions", {{"n2d", kVersion}, {"libtorch", TORCH_VERSION}, {"opencv", CV_VERSION}}},
          {"feature_extractor",
           {{"pretrained", false},
            {"substituted", true},
            {"description", "random fixed-weight VGG-shaped stack (conv3-64, conv3-64, maxpool, conv3-128)"}}}};
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

void record_run_meta(const std::filesystem::path& dir, const nlohmann::json& meta) {
  const auto path = dir / "run_meta.json";
  nlohmann::json all = nlohmann::json::object();
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    try {
      all = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception&) {
      all = nlohmann::json::object();
    }
    if (!all.is_object()) all = nlohmann::json::object();
  }
  all[meta.at("command").get<std::string>()] = meta;
  write_json(path, all);
}

}  // namespace n2d::pipeline
