// Acceptance run: one PASS/FAIL line per criterion, details underneath.
// Exit status is 0 only when every selected criterion passes.

#include <torch/torch.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>

#include "grad_check.hpp"
#include "n2d/bg/bayes_model.hpp"
#include "n2d/bg/gmm.hpp"
#include "n2d/core/dataset.hpp"
#include "n2d/core/io.hpp"
#include "n2d/enhance/enhancement.hpp"
#include "n2d/eval/metrics.hpp"
#include "n2d/nn/checkpoint.hpp"
#include "n2d/nn/critic.hpp"
#include "n2d/nn/losses.hpp"
#include "n2d/nn/training.hpp"
#include "n2d/pipeline/pipeline.hpp"
#include "n2d/synth/synth.hpp"
#include "oracles/bayes_oracle.hpp"
#include "oracles/gmm_transcript.hpp"
#include "oracles/published_shapes.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace n2d;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string summary;
  std::vector<std::string> details;
};

json g_results = json::object();
int g_failures = 0;

void report(int id, const Outcome& o, double secs) {
  char head[64];
  std::snprintf(head, sizeof head, "%s %2d ", o.pass ? "PASS" : "FAIL", id);
  std::cout << head << o.summary << "  [" << std::lround(secs) << " s]\n";
  for (const auto& d : o.details) std::cout << "        " << d << "\n";
  std::cout.flush();
  g_results[std::to_string(id)] = {{"pass", o.pass}, {"summary", o.summary}, {"details", o.details}, {"seconds", secs}};
  if (!o.pass) ++g_failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// --- 1: losses ------------------------------------------------------------

Outcome check_losses() {
  Outcome o;
  int bad = 0;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) {
      ++bad;
      o.details.push_back("example failed: " + what);
    }
  };
  auto item = [](const torch::Tensor& t) { return t.item<double>(); };

  nn::Critic constant(16, 16);
  {
    torch::NoGradGuard g;
    for (auto& p : constant->parameters()) p.zero_();
    constant->head()->bias.fill_(1.5);
  }
  expect(std::abs(item(nn::adversarial_loss(*constant, torch::rand({2, 3, 16, 16}))) + 1.5) < 1e-7, "constant critic");
  expect(item(nn::adversarial_loss(torch::full({1, 3, 256, 256}, 0.5, torch::kDouble).sum({1, 2, 3}))) == -98304.0,
         "sum-of-pixels critic");
  expect(item(nn::adversarial_loss(torch::tensor({1.0, 3.0}))) == -2.0, "batch mean");

  nn::FeatureExtractor fx(11);
  fx->to(torch::kDouble);
  auto a = torch::rand({1, 3, 8, 8}, torch::kDouble);
  auto b = torch::rand({1, 3, 8, 8}, torch::kDouble);
  expect(item(nn::perceptual_loss(*fx, a, a)) == 0.0, "perceptual identical");
  expect(item(nn::perceptual_loss(*fx, a, b)) >= 0.0, "perceptual non-negative");
  auto id = nn::FeatureExtractorImpl::identity(1);
  auto a1 = torch::rand({1, 1, 8, 8}, torch::kDouble);
  auto b1 = torch::rand({1, 1, 8, 8}, torch::kDouble);
  expect(std::abs(item(nn::perceptual_loss(*id, a1, b1)) - item((a1 - b1).pow(2).mean())) < 1e-15, "identity extractor");

  expect(item(nn::mse_loss(a, a)) == 0.0, "mse identical");
  expect(item(nn::mse_loss(torch::ones({1, 3, 4, 4}), torch::zeros({1, 3, 4, 4}))) == 1.0, "mse ones vs zeros");
  const auto g4 = torch::tensor({0.0, 0.5, 1.0, 0.0}).view({1, 1, 2, 2});
  expect(item(nn::mse_loss(g4, torch::zeros_like(g4))) == 0.3125, "mse 0.3125");

  expect(item(nn::tv_loss(torch::full({1, 3, 256, 256}, 0.3, torch::kDouble))) < 1e-3, "tv constant");
  expect(std::abs(item(nn::tv_loss(torch::tensor({0.0, 1.0, 0.0, 1.0}).view({1, 1, 2, 2}))) - 1.0) < 1e-7, "tv 2x2");

  nn::LossWeights w;
  expect(std::abs(nn::total_loss(w, 1, 1, 1, 1) - 0.20101) < 1e-12, "total 0.20101");
  expect(nn::total_loss(w, 0, 0, 0, 0) == 0.0, "total zero");

  auto critics = nn::build_critics(1, 16, 5);
  critics->to(torch::kDouble);
  auto& critic = *critics->at(0);
  double worst[4] = {0, 0, 0, 0};
  for (int s = 0; s < 20; ++s) {
    torch::manual_seed(500 + s);
    const auto x = torch::rand({1, 3, 8, 8}, torch::kDouble);
    const auto ref = torch::rand({1, 3, 8, 8}, torch::kDouble);
    worst[0] = std::max(worst[0], test::gradient_rel_error([&](const torch::Tensor& g) { return nn::mse_loss(g, ref); }, x, 1e-4));
    worst[1] = std::max(worst[1], test::gradient_rel_error([&](const torch::Tensor& g) { return nn::tv_loss(g); }, x, 1e-4));
    worst[2] = std::max(worst[2],
                        test::gradient_rel_error([&](const torch::Tensor& g) { return nn::perceptual_loss(*fx, g, ref); }, x, 1e-6));
    worst[3] = std::max(worst[3], test::gradient_rel_error(
                                      [&](const torch::Tensor& g) {
                                        return nn::adversarial_loss(critic, torch::upsample_nearest2d(g, {16, 16}));
                                      },
                                      x, 1e-6));
  }
  const char* names[4] = {"mse", "tv", "perceptual", "adversarial"};
  std::ostringstream fd;
  for (int i = 0; i < 4; ++i) {
    fd << names[i] << " " << worst[i] << (i < 3 ? ", " : "");
    if (!(worst[i] < 1e-3)) ++bad;
  }
  o.details.push_back("worst finite-difference relative error: " + fd.str());
  o.pass = bad == 0;
  o.summary = "loss examples and finite-difference gradients (" + std::to_string(bad) + " failures)";
  return o;
}

// --- 3: shape ledger --------------------------------------------------------

Outcome check_ledger() {
  Outcome o;
  nn::GeneratorConfig cfg;
  int mismatches = 0;
  std::size_t records = 0;
  try {
    auto gen = nn::build_generator(cfg);
    const auto ledger = gen->trace_shapes();
    records = ledger.records.size();
    mismatches = ledger.mismatches();
    for (const auto& [layer, shape] : oracle::published_shapes()) {
      const auto* r = ledger.find(layer);
      if (r == nullptr || r->actual != shape) {
        ++mismatches;
        o.details.push_back("mismatch at " + layer);
      }
    }
  } catch (const std::exception& e) {
    ++mismatches;
    o.details.push_back(e.what());
  }
  o.pass = mismatches == 0;
  o.summary = "256x256 Q=2 generator: " + std::to_string(records) + " traced layers, " + std::to_string(mismatches) +
              " mismatches against the layer tables";
  return o;
}

// --- 4: Bayes fusion --------------------------------------------------------

Outcome check_bayes() {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int q = 1 + trial % 4;
    const auto model = oracle::random_model(rng, 16, q);
    std::uniform_int_distribution<int> pix(0, 15);
    std::uniform_real_distribution<double> val(0.0, 1.0);
    const int i = pix(rng), j = pix(rng), c = static_cast<int>(rng() % 3);
    std::vector<double> values(static_cast<std::size_t>(q));
    for (auto& v : values) v = val(rng);
    worst = std::max(worst, std::abs(bg::fuse_scales(model, i, j, c, values) - oracle::brute_force_fuse(model, i, j, c, values)));
  }
  Outcome o;
  o.pass = worst < 1e-12;
  o.summary = "fuse_scales vs brute-force product, 1000 cases, Q in 1..4: max deviation " + fmt("%.3g", worst);
  return o;
}

// --- 5: GMM transcript ------------------------------------------------------

Outcome check_gmm() {
  bg::GmmOptions opts;
  opts.num_modes = 2;
  opts.learning_rate = 0.1;
  bg::GmmPixelModel model(opts);
  double worst = 0.0;
  for (const auto& row : oracle::kGmmTranscript) {
    model.update(Image(1, 1, 1, oracle::kGmmTranscriptInput[row.step]));
    const auto modes = model.modes(0, 0);
    for (int i = 0; i < 2; ++i) {
      worst = std::max(worst, std::abs(modes[i].weight - row.modes[i][0]));
      if (row.modes[i][0] > 0) {
        worst = std::max(worst, std::abs(modes[i].mean[0] - row.modes[i][1]));
        worst = std::max(worst, std::abs(modes[i].variance - row.modes[i][2]));
      }
    }
  }
  Outcome o;
  o.pass = worst < 1e-9;
  o.summary = "single-pixel GMM transcript, 7 steps: max deviation " + fmt("%.3g", worst);
  return o;
}

// --- desk-scale runs ----------------------------------------------------------

struct DeskRun {
  std::unique_ptr<nn::TrainState> state;
  bg::MultiScaleBayesModel model;
  std::vector<ScaleSet> generated_test;
  std::vector<Mask> masks;
  eval::SequenceReport report;
  double worst_critic_weight = 0.0;
  int critic_updates_checked = 0;
  double mse_first = 0.0;
  double mse_last = 0.0;
  double train_seconds = 0.0;
  fs::path dir;
};

struct Desk {
  Dataset data;
  std::vector<Mask> gt;
  std::vector<int> test_idx;
  int steps = 200;
  int divisor = 4;
  std::uint64_t seed = 7;
};

DeskRun run_desk(const Desk& desk, nn::Pathway pathway, const fs::path& dir) {
  DeskRun r;
  r.dir = dir;
  fs::create_directories(dir / "masks");
  nn::TrainConfig cfg;
  cfg.seed = desk.seed;
  cfg.pathway = pathway;
  cfg.max_generator_steps = desk.steps;
  cfg.channel_divisor = desk.divisor;
  nn::TrainObserver obs;
  obs.after_critic_update = [&](const nn::TrainState& s) {
    r.worst_critic_weight = std::max(r.worst_critic_weight, nn::max_abs_weight(*s.critics));
    ++r.critic_updates_checked;
  };
  const auto t0 = Clock::now();
  r.state = nn::train(desk.data.train_frames(), desk.data.reference, cfg, obs);
  r.train_seconds = seconds_since(t0);
  nn::save_checkpoint(dir / "ck.bin", r.state->generator, r.state->critics, pathway);
  nn::write_loss_log(dir / "ck.bin.losses.jsonl", r.state->history);

  const auto& h = r.state->history;
  const std::size_t window = std::min<std::size_t>(20, h.size());
  for (std::size_t i = 0; i < window; ++i) {
    r.mse_first += h[i].scales.front().mse / static_cast<double>(window);
    r.mse_last += h[h.size() - window + i].scales.front().mse / static_cast<double>(window);
  }

  r.model = pipeline::fit_from_generator(r.state->generator, desk.data.train_frames(), pathway);
  bg::save_model(dir / "bg.json", r.model);
  r.generated_test = nn::generate_all(r.state->generator, desk.data.test_frames(), pathway);
  r.masks = pipeline::detect_generated(r.model, r.generated_test, desk.data.train_split());
  for (const auto& m : r.masks) save_mask(dir / "masks" / frame_name(m.frame_index), m);
  r.report = eval::score_masks(r.masks, desk.gt, desk.test_idx);
  std::vector<Image> gen0;
  for (const auto& s : r.generated_test) gen0.push_back(s.images.front());
  r.report.stability = eval::stability_series(gen0);
  pipeline::write_json(dir / "report.json", r.report.to_json());
  return r;
}

std::string iou_str(double v) { return fmt("%.4f", v); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"n2d acceptance run"};
  std::string work = (fs::temp_directory_path() / "n2d_acceptance").string();
  std::string only;
  Desk desk;
  app.add_option("--work", work, "directory for run artifacts");
  app.add_option("--only", only, "comma-separated criterion numbers");
  app.add_option("--steps", desk.steps, "generator steps per desk run");
  app.add_option("--channel-divisor", desk.divisor, "generator width divisor for desk runs");
  CLI11_PARSE(app, argc, argv);

  torch::set_num_threads(1);
  std::set<int> selected;
  {
    std::stringstream ss(only);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (!tok.empty()) selected.insert(std::stoi(tok));
    }
  }
  auto want = [&](int id) { return selected.empty() || selected.count(id) > 0; };
  const fs::path root(work);
  fs::create_directories(root);
  std::cout << "artifacts: " << root.string() << "\n";

  auto timed = [&](int id, const std::function<Outcome()>& fn) {
    if (!want(id)) return;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.summary = std::string("threw: ") + e.what();
    }
    report(id, o, seconds_since(t0));
  };

  timed(1, check_losses);
  timed(3, check_ledger);
  timed(4, check_bayes);
  timed(5, check_gmm);

  const std::set<int> desk_ids{2, 6, 7, 8, 9, 10, 11};
  bool need_desk = false;
  for (int id : desk_ids) need_desk = need_desk || want(id);
  if (need_desk) {
    synth::SynthOptions so;  // 64x64, 120 frames, 60 clean training frames
    const fs::path ds = root / "dataset";
    save_dataset(ds, synth::make_dataset(so));
    desk.data = load_dataset(ds);
    desk.gt = pipeline::test_ground_truth(desk.data);
    desk.test_idx = pipeline::test_indices(desk.data);

    std::unique_ptr<DeskRun> both;
    std::string both_error;
    const auto t_both = Clock::now();
    try {
      both = std::make_unique<DeskRun>(run_desk(desk, nn::Pathway::Both, root / "both"));
    } catch (const std::exception& e) {
      both_error = e.what();
    }
    const double both_secs = seconds_since(t_both);
    auto need_both = [&]() {
      if (!both) throw std::runtime_error("desk run failed: " + both_error);
    };

    timed(2, [&] {
      need_both();
      Outcome o;
      const int expected = desk.steps * 5;
      o.pass = both->worst_critic_weight <= 0.01 && both->critic_updates_checked == expected;
      o.summary = "max |critic weight| over " + std::to_string(both->critic_updates_checked) + " critic updates: " +
                  fmt("%.6g", both->worst_critic_weight);
      o.details.push_back("training time " + fmt("%.0f s", both->train_seconds) + " for " + std::to_string(both->state->step) +
                          " generator steps");
      return o;
    });

    eval::SequenceReport gmm_report;
    if (want(6) || want(8)) {
      const auto gmm_masks = pipeline::run_baseline(pipeline::Baseline::Gmm, desk.data);
      gmm_report = eval::score_masks(gmm_masks, desk.gt, desk.test_idx);
      fs::create_directories(root / "gmm");
      pipeline::write_json(root / "gmm" / "report.json", gmm_report.to_json());
    }

    timed(6, [&] {
      need_both();
      Outcome o;
      const bool a = both->mse_last < both->mse_first;
      const bool b_iou = both->report.mean_iou >= 0.5;
      const bool b_gmm = gmm_report.mean_iou < both->report.mean_iou;
      o.pass = a && b_iou && b_gmm;
      o.summary = "desk end-to-end: MSE " + fmt("%.5f", both->mse_first) + " -> " + fmt("%.5f", both->mse_last) +
                  ", IoU " + iou_str(both->report.mean_iou) + " vs raw GMM " + iou_str(gmm_report.mean_iou);
      o.details.push_back(std::string("(a) MSE decreases: ") + (a ? "yes" : "no"));
      o.details.push_back(std::string("(b) IoU >= 0.5: ") + (b_iou ? "yes" : "no") + "; GMM strictly lower: " + (b_gmm ? "yes" : "no"));
      o.details.push_back("IoU std " + iou_str(both->report.std_iou) + ", GMM std " + iou_str(gmm_report.std_iou));
      o.details.push_back("pipeline time " + fmt("%.0f s", both_secs));
      return o;
    });

    timed(7, [&] {
      need_both();
      Outcome o;
      const auto he = enhance::histogram_equalization;
      std::vector<Image> he_frames;
      for (const auto& f : desk.data.test_frames()) he_frames.push_back(he(f));
      const auto he_series = eval::stability_series(he_frames);
      const auto gen_series = both->report.stability;
      const double gen_mean = eval::mean_std(gen_series).first;
      const double he_mean = eval::mean_std(he_series).first;
      o.pass = gen_series.size() >= 50 && gen_mean <= he_mean;
      o.summary = "mean KL over " + std::to_string(gen_series.size()) + " pairs: generated " + fmt("%.5f", gen_mean) +
                  " vs HE " + fmt("%.5f", he_mean);
      return o;
    });

    timed(8, [&] {
      need_both();
      Outcome o;
      const double bands[4][2] = {{0, 5}, {5, 10}, {10, 15}, {15, 20}};
      std::vector<double> ious;
      std::ostringstream line;
      for (int bi = 0; bi < 4; ++bi) {
        std::vector<Image> noisy;
        for (int t = 0; t < desk.data.num_frames(); ++t) {
          noisy.push_back(eval::add_gaussian_noise(desk.data.night[static_cast<std::size_t>(t)], bands[bi][0], bands[bi][1],
                                                   synth::mix_seed(desk.seed, 0x4E4F + bi, static_cast<std::uint64_t>(t))));
        }
        const std::vector<Image> train(noisy.begin(), noisy.begin() + desk.data.train_split());
        const std::vector<Image> test(noisy.begin() + desk.data.train_split(), noisy.end());
        const auto model = pipeline::fit_from_generator(both->state->generator, train, nn::Pathway::Both);
        const auto masks = pipeline::detect_frames(both->state->generator, model, test, desk.data.train_split(), nn::Pathway::Both);
        const double v = eval::score_masks(masks, desk.gt, desk.test_idx).mean_iou;
        ious.push_back(v);
        line << "[" << bands[bi][0] << "," << bands[bi][1] << "] " << iou_str(v) << (bi < 3 ? ", " : "");
      }
      const double drop = ious.front() > 0 ? (ious.front() - ious.back()) / ious.front() : 1.0;
      o.pass = ious.front() > 0 && drop < 0.5;
      o.summary = "IoU by noise band: " + line.str() + "; relative drop " + fmt("%.3f", drop);
      return o;
    });

    timed(9, [&] {
      need_both();
      Outcome o;
      const auto g = run_desk(desk, nn::Pathway::GlobalOnly, root / "global");
      const auto l = run_desk(desk, nn::Pathway::LocalOnly, root / "local");
      const double vb = both->report.mean_iou, vg = g.report.mean_iou, vl = l.report.mean_iou;
      o.pass = vb >= std::max(vg, vl);
      o.summary = "IoU both " + iou_str(vb) + ", global only " + iou_str(vg) + ", local only " + iou_str(vl) +
                  (o.pass ? "" : "  (ordering violated)");
      return o;
    });

    timed(10, [&] {
      need_both();
      Outcome o;
      const auto again = run_desk(desk, nn::Pathway::Both, root / "both_rerun");
      const bool ck = test::read_file(both->dir / "ck.bin") == test::read_file(again.dir / "ck.bin");
      bool masks = both->masks.size() == again.masks.size();
      for (std::size_t i = 0; masks && i < both->masks.size(); ++i) masks = both->masks[i].data == again.masks[i].data;
      const bool rep = test::read_file(both->dir / "report.json") == test::read_file(again.dir / "report.json");
      const bool bgm = test::read_file(both->dir / "bg.json") == test::read_file(again.dir / "bg.json");
      o.pass = ck && masks && rep && bgm;
      o.summary = std::string("rerun with the same seed: checkpoint ") + (ck ? "identical" : "DIFFERS") + ", background model " +
                  (bgm ? "identical" : "DIFFERS") + ", masks " + (masks ? "identical" : "DIFFER") + ", report " +
                  (rep ? "identical" : "DIFFERS");
      return o;
    });

    timed(11, [&] {
      need_both();
      Outcome o;
      const auto stages = pipeline::benchmark(both->state->generator, both->model, desk.data.test_frames(), 5);
      double detection = 0.0, generation = 0.0;
      std::ostringstream line;
      bool finite = true;
      for (const auto& s : stages) {
        line << s.name << " " << fmt("%.1f", s.fps) << " fps  ";
        finite = finite && std::isfinite(s.fps) && s.fps > 0;
        if (s.name == "detection") {
          detection = s.fps;
        } else {
          generation = std::max(generation, s.fps);
        }
      }
      o.pass = finite && detection > generation;
      o.summary = "benchmark: " + line.str();
      return o;
    });
  }

  pipeline::write_json(root / "acceptance.json", g_results);
  std::cout << (g_failures == 0 ? "all selected criteria passed" : std::to_string(g_failures) + " criteria failed") << "\n";
  return g_failures == 0 ? 0 : 1;
}
