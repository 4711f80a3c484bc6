#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

#include "n2d/bg/bayes_model.hpp"
#include "n2d/bg/gmm.hpp"
#include "n2d/core/dataset.hpp"
#include "n2d/eval/metrics.hpp"
#include "n2d/nn/generator.hpp"
#include "n2d/nn/training.hpp"

namespace n2d::pipeline {

inline constexpr const char* kVersion = "0.1.0";

enum class Baseline { Gmm, HeGmm, MsrGmm };

Baseline parse_baseline(const std::string& s);
std::string to_string(Baseline b);

/// Enhancement applied before the GMM (identity for plain GMM).
std::vector<Image> preprocess(Baseline method, const std::vector<Image>& frames);

/// GMM over the (enhanced) training frames, then online classification of
/// the test frames. Masks carry the test frame indices.
std::vector<Mask> run_baseline(Baseline method, const Dataset& data, const bg::GmmOptions& opts = {});

/// Frame indices of the test split.
std::vector<int> test_indices(const Dataset& data);

/// Ground truth of the test split; throws DataError when any mask is missing.
std::vector<Mask> test_ground_truth(const Dataset& data);

/// Fits the background model on the generator's output for `train`.
bg::MultiScaleBayesModel fit_from_generator(nn::Generator& gen, const std::vector<Image>& train, nn::Pathway pathway,
                                            double sigma_floor = bg::kSigmaFloor);

/// Generates every frame and detects foreground; mask t gets index first_index + t.
std::vector<Mask> detect_frames(nn::Generator& gen, const bg::MultiScaleBayesModel& model, const std::vector<Image>& frames,
                                int first_index, nn::Pathway pathway, const bg::DetectOptions& opts = {});

/// Same as detect_frames on already generated frames.
std::vector<Mask> detect_generated(const bg::MultiScaleBayesModel& model, const std::vector<ScaleSet>& generated, int first_index,
                                   const bg::DetectOptions& opts = {});

/// Stages "global", "local", "n2dgan" (full two-pathway generation) and
/// "detection". The detection stage scores frames generated beforehand, so
/// it only measures the background-model query.
std::vector<eval::StageThroughput> benchmark(nn::Generator& gen, const bg::MultiScaleBayesModel& model,
                                             const std::vector<Image>& frames, int warmup);

/// Configuration, seed, library versions and the feature-extractor
/// substitution flag of one command.
nlohmann::json run_meta(const std::string& command, const nlohmann::json& config, std::uint64_t seed);

/// Merges `meta` under its command name into dir/run_meta.json.
void record_run_meta(const std::filesystem::path& dir, const nlohmann::json& meta);

nlohmann::json to_json(const nn::TrainConfig& cfg);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace n2d::pipeline
