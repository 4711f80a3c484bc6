// n2d: command-line front end for night-to-day generation and foreground
// detection.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "n2d/bg/bayes_model.hpp"
#include "n2d/core/dataset.hpp"
#include "n2d/core/error.hpp"
#include "n2d/core/io.hpp"
#include "n2d/eval/metrics.hpp"
#include "n2d/nn/checkpoint.hpp"
#include "n2d/nn/generator.hpp"
#include "n2d/nn/training.hpp"
#include "n2d/pipeline/pipeline.hpp"
#include "n2d/synth/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kDivergence = 3 };

fs::path meta_dir(const fs::path& file_out) {
  return file_out.has_parent_path() ? file_out.parent_path() : fs::path(".");
}

std::vector<fs::path> sorted_pngs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw n2d::DataError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

int frame_index_of(const fs::path& p) {
  try {
    return std::stoi(p.stem().string());
  } catch (const std::exception&) {
    return -1;
  }
}

// --- synth --------------------------------------------------------------

struct SynthArgs {
  std::string out;
  int frames = 120;
  int size = 256;
  std::uint64_t seed = 1;
  bool foreground = false;
  int train_split = -1;
};

int cmd_synth(const SynthArgs& a) {
  n2d::synth::SynthOptions opts;
  opts.size = a.size;
  opts.frames = a.frames;
  opts.train_split = a.train_split >= 0 ? a.train_split : std::min(300, a.frames / 2);
  opts.foreground = a.foreground;
  opts.seed = a.seed;
  auto data = n2d::synth::make_dataset(opts);
  n2d::save_dataset(a.out, data);
  n2d::pipeline::record_run_meta(a.out, n2d::pipeline::run_meta("synth",
                                                                 {{"frames", opts.frames},
                                                                  {"size", opts.size},
                                                                  {"train_split", opts.train_split},
                                                                  {"foreground", opts.foreground}},
                                                                 opts.seed));
  std::cout << "wrote " << opts.frames << " frames (" << opts.size << "x" << opts.size << ", train split " << opts.train_split
            << ") to " << a.out << "\n";
  return kOk;
}

// --- train --------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string out;
  n2d::nn::TrainConfig cfg;
  std::string pathway = "both";
  int log_every = 10;
};

int cmd_train(TrainArgs a) {
  a.cfg.pathway = n2d::nn::parse_pathway(a.pathway);
  const auto data = n2d::load_dataset(a.data);
  const auto train = data.train_frames();
  n2d::nn::TrainObserver obs;
  obs.after_generator_step = [&](const n2d::nn::TrainState& st, const n2d::nn::StepRecord& rec) {
    if (a.log_every > 0 && (rec.step % a.log_every == 0)) {
      std::fprintf(stderr, "step %d epoch %d total %.6f mse %.6f\n", rec.step, rec.epoch, rec.total,
                   rec.scales.empty() ? 0.0 : rec.scales.front().mse);
    }
    (void)st;
  };
  auto state = n2d::nn::train(train, data.reference, a.cfg, obs);
  const fs::path ckpt = a.out;
  n2d::nn::save_checkpoint(ckpt, state->generator, state->critics, a.cfg.pathway);
  fs::path log = ckpt;
  log += ".losses.jsonl";
  n2d::nn::write_loss_log(log, state->history);
  auto cfg_json = n2d::pipeline::to_json(a.cfg);
  cfg_json["data"] = a.data;
  cfg_json["generator_steps"] = state->step;
  cfg_json["critic_updates"] = state->critic_updates;
  n2d::pipeline::record_run_meta(meta_dir(ckpt), n2d::pipeline::run_meta("train", cfg_json, a.cfg.seed));
  std::cout << "trained " << state->step << " generator steps, " << state->critic_updates << " critic updates; checkpoint "
            << ckpt.string() << "\n";
  return kOk;
}

// --- generate -----------------------------------------------------------

int cmd_generate(const std::string& ckpt_path, const std::string& data_dir, const std::string& out, int scales) {
  auto ck = n2d::nn::load_checkpoint(ckpt_path);
  const int q = ck.generator->config().num_scales;
  if (scales < 1 || scales > q) {
    throw n2d::ArgumentError("--scales must be in [1, " + std::to_string(q) + "]");
  }
  const auto data = n2d::load_dataset(data_dir);
  const auto generated = n2d::nn::generate_all(ck.generator, data.night, ck.pathway);
  for (std::size_t t = 0; t < generated.size(); ++t) {
    for (int k = 0; k < scales; ++k) {
      char name[64];
      std::snprintf(name, sizeof name, "gen_s%d_%06zu.png", k, t);
      n2d::save_image(fs::path(out) / name, generated[t].images[static_cast<std::size_t>(k)]);
    }
  }
  n2d::pipeline::record_run_meta(out, n2d::pipeline::run_meta("generate",
                                                              {{"ckpt", ckpt_path},
                                                               {"data", data_dir},
                                                               {"scales", scales},
                                                               {"pathway", n2d::nn::to_string(ck.pathway)}},
                                                              ck.generator->config().seed));
  std::cout << "generated " << generated.size() << " frames at " << scales << " scale(s) into " << out << "\n";
  return kOk;
}

// --- fit-bg -------------------------------------------------------------

int cmd_fit_bg(const std::string& ckpt_path, const std::string& data_dir, const std::string& out, double sigma_floor) {
  auto ck = n2d::nn::load_checkpoint(ckpt_path);
  const auto data = n2d::load_dataset(data_dir);
  const auto model = n2d::pipeline::fit_from_generator(ck.generator, data.train_frames(), ck.pathway, sigma_floor);
  n2d::bg::save_model(out, model);
  n2d::pipeline::record_run_meta(meta_dir(out), n2d::pipeline::run_meta("fit-bg",
                                                                        {{"ckpt", ckpt_path},
                                                                         {"data", data_dir},
                                                                         {"sigma_floor", sigma_floor},
                                                                         {"train_frames", data.train_split()}},
                                                                        ck.generator->config().seed));
  std::cout << "background model over " << data.train_split() << " generated frames written to " << out << "\n";
  return kOk;
}

// --- detect -------------------------------------------------------------

void write_masks(const fs::path& out, const std::vector<n2d::Mask>& masks) {
  for (const auto& m : masks) n2d::save_mask(out / n2d::frame_name(m.frame_index, "", ".png"), m);
}

int cmd_detect(const std::string& ckpt_path, const std::string& model_path, const std::string& data_dir, const std::string& out,
               n2d::bg::DetectOptions opts) {
  auto ck = n2d::nn::load_checkpoint(ckpt_path);
  const auto model = n2d::bg::load_model(model_path);
  const auto data = n2d::load_dataset(data_dir);
  const auto masks =
      n2d::pipeline::detect_frames(ck.generator, model, data.test_frames(), data.train_split(), ck.pathway, opts);
  write_masks(out, masks);
  n2d::pipeline::record_run_meta(out, n2d::pipeline::run_meta("detect",
                                                              {{"ckpt", ckpt_path},
                                                               {"model", model_path},
                                                               {"data", data_dir},
                                                               {"k0", opts.k0},
                                                               {"min_area", opts.min_area}},
                                                              ck.generator->config().seed));
  std::cout << "wrote " << masks.size() << " masks to " << out << "\n";
  return kOk;
}

// --- eval ---------------------------------------------------------------

int cmd_eval(const std::string& pred_dir, const std::string& gt_dir, const std::string& out, const std::string& frames_dir) {
  std::vector<n2d::Mask> pred, gt;
  std::vector<int> indices;
  for (const auto& p : sorted_pngs(pred_dir)) {
    const fs::path g = fs::path(gt_dir) / p.filename();
    if (!fs::exists(g)) throw n2d::DataError("no ground truth for " + p.filename().string());
    const int t = frame_index_of(p);
    gt.push_back(n2d::load_mask(g, t));
    pred.push_back(n2d::load_mask(p, t));
    indices.push_back(t);
  }
  if (gt.empty()) throw n2d::DataError("no predicted masks in " + pred_dir);
  auto report = n2d::eval::score_masks(pred, gt, indices);
  if (!frames_dir.empty()) {
    std::vector<n2d::Image> frames;
    for (const auto& f : sorted_pngs(frames_dir)) frames.push_back(n2d::load_image(f));
    report.stability = n2d::eval::stability_series(frames);
  }
  n2d::pipeline::write_json(out, report.to_json());
  n2d::pipeline::record_run_meta(meta_dir(out), n2d::pipeline::run_meta("eval",
                                                                        {{"pred", pred_dir},
                                                                         {"gt", gt_dir},
                                                                         {"frames", frames_dir}},
                                                                        0));
  std::printf("frames %zu  mean IoU %.4f  std %.4f\n", gt.size(), report.mean_iou, report.std_iou);
  return kOk;
}

// --- bench --------------------------------------------------------------

int cmd_bench(const std::string& ckpt_path, const std::string& data_dir, int warmup, const std::string& model_path,
              const std::string& out) {
  auto ck = n2d::nn::load_checkpoint(ckpt_path);
  const auto data = n2d::load_dataset(data_dir);
  const auto model = model_path.empty()
                         ? n2d::pipeline::fit_from_generator(ck.generator, data.train_frames(), ck.pathway)
                         : n2d::bg::load_model(model_path);
  auto frames = data.test_frames();
  if (frames.empty()) frames = data.night;
  const auto stages = n2d::pipeline::benchmark(ck.generator, model, frames, warmup);
  std::printf("%-12s %12s %14s %8s\n", "stage", "fps", "ms/frame", "frames");
  json j = json::array();
  for (const auto& s : stages) {
    std::printf("%-12s %12.2f %14.3f %8d\n", s.name.c_str(), s.fps, s.seconds_per_frame * 1e3, s.frames);
    j.push_back({{"stage", s.name}, {"fps", s.fps}, {"seconds_per_frame", s.seconds_per_frame}, {"frames", s.frames}});
  }
  const json doc = {{"warmup", warmup}, {"stages", j}};
  if (out.empty()) {
    std::cout << doc.dump(2) << "\n";
  } else {
    n2d::pipeline::write_json(out, doc);
  }
  return kOk;
}

// --- baseline -----------------------------------------------------------

int cmd_baseline(const std::string& method, const std::string& data_dir, const std::string& out) {
  const auto b = n2d::pipeline::parse_baseline(method);
  const auto data = n2d::load_dataset(data_dir);
  const auto masks = n2d::pipeline::run_baseline(b, data);
  write_masks(out, masks);
  n2d::pipeline::record_run_meta(out, n2d::pipeline::run_meta("baseline", {{"method", method}, {"data", data_dir}}, 0));
  std::cout << "wrote " << masks.size() << " " << method << " masks to " << out << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Night-to-day generation and background subtraction"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "write a synthetic night/day dataset");
  s->add_option("--out", synth.out, "dataset directory")->required();
  s->add_option("--frames", synth.frames, "number of night frames")->check(CLI::PositiveNumber);
  s->add_option("--size", synth.size, "frame side (power of two)");
  s->add_option("--seed", synth.seed, "random seed");
  s->add_flag("--foreground", synth.foreground, "insert a moving object in the test split");
  s->add_option("--train-split", synth.train_split, "clean training frames (default min(300, N/2))");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "train the generator and critics");
  t->add_option("--data", tr.data, "dataset directory")->required();
  t->add_option("--out", tr.out, "checkpoint file")->required();
  t->add_option("--epochs", tr.cfg.epochs, "training epochs");
  t->add_option("--batch", tr.cfg.batch_size, "batch size");
  t->add_option("--lr", tr.cfg.learning_rate, "learning rate");
  t->add_option("--scales", tr.cfg.num_scales, "number of scales");
  t->add_option("--pathway", tr.pathway, "both|global|local")->check(CLI::IsMember({"both", "global", "local"}));
  t->add_option("--seed", tr.cfg.seed, "random seed");
  t->add_option("--n-critic", tr.cfg.n_critic, "critic updates per generator update");
  t->add_option("--clip", tr.cfg.clip_bound, "critic weight clip bound");
  t->add_option("--max-steps", tr.cfg.max_generator_steps, "stop after this many generator steps (0: no limit)");
  t->add_option("--channel-divisor", tr.cfg.channel_divisor, "divide hidden generator widths by this");
  t->add_option("--log-every", tr.log_every, "progress line interval in steps (0: silent)");

  std::string ckpt, data_dir, out, model;
  int scales = 2;
  auto* g = app.add_subcommand("generate", "write generated images at every scale");
  g->add_option("--ckpt", ckpt)->required();
  g->add_option("--data", data_dir)->required();
  g->add_option("--out", out)->required();
  g->add_option("--scales", scales);

  double sigma_floor = n2d::bg::kSigmaFloor;
  auto* f = app.add_subcommand("fit-bg", "fit the background model on generated training frames");
  f->add_option("--ckpt", ckpt)->required();
  f->add_option("--data", data_dir)->required();
  f->add_option("--out", out)->required();
  f->add_option("--sigma-floor", sigma_floor);

  n2d::bg::DetectOptions det;
  auto* d = app.add_subcommand("detect", "foreground masks for the test split");
  d->add_option("--ckpt", ckpt)->required();
  d->add_option("--model", model)->required();
  d->add_option("--data", data_dir)->required();
  d->add_option("--out", out)->required();
  d->add_option("--k0", det.k0);
  d->add_option("--min-area", det.min_area);

  std::string pred, gt, frames;
  auto* e = app.add_subcommand("eval", "score predicted masks against ground truth");
  e->add_option("--pred", pred)->required();
  e->add_option("--gt", gt)->required();
  e->add_option("--out", out)->required();
  e->add_option("--frames", frames, "image directory for the stability series");

  int warmup = 5;
  auto* b = app.add_subcommand("bench", "per-stage throughput");
  b->add_option("--ckpt", ckpt)->required();
  b->add_option("--data", data_dir)->required();
  b->add_option("--warmup", warmup);
  b->add_option("--model", model, "background model (fitted on the fly when absent)");
  b->add_option("--out", out, "JSON output (stdout when absent)");

  std::string method;
  auto* bl = app.add_subcommand("baseline", "GMM baselines on raw or enhanced frames");
  bl->add_option("--method", method)->required()->check(CLI::IsMember({"gmm", "he-gmm", "msr-gmm"}));
  bl->add_option("--data", data_dir)->required();
  bl->add_option("--out", out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*s) return cmd_synth(synth);
    if (*t) return cmd_train(tr);
    if (*g) return cmd_generate(ckpt, data_dir, out, scales);
    if (*f) return cmd_fit_bg(ckpt, data_dir, out, sigma_floor);
    if (*d) return cmd_detect(ckpt, model, data_dir, out, det);
    if (*e) return cmd_eval(pred, gt, out, frames);
    if (*b) return cmd_bench(ckpt, data_dir, warmup, model, out);
    if (*bl) return cmd_baseline(method, data_dir, out);
  } catch (const n2d::DivergenceError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kDivergence;
  } catch (const n2d::ArgumentError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kUsage;
  } catch (const n2d::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kData;
  } catch (const fs::filesystem_error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kData;
  } catch (const nlohmann::json::exception& err) {
    std::cerr << "error: malformed JSON: " << err.what() << "\n";
    return kData;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kData;
  }
  return kUsage;
}
