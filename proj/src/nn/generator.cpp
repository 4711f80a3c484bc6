#include "n2d/nn/generator.hpp"

#include <algorithm>
#include <map>

#include "n2d/core/error.hpp"
#include "n2d/nn/tensor_image.hpp"

namespace n2d::nn {

namespace {

constexpr int kResidualBlocks = 3;
constexpr int kFusionChannels = 32;
constexpr int kHeadChannels = 32;

LayerSpec conv(std::string name, int stride, int channels, int divisor, std::vector<std::string> inputs) {
  return {std::move(name), LayerKind::Conv, 3, stride, channels, divisor, std::move(inputs)};
}
LayerSpec deconv(std::string name, int stride, int channels, int divisor, std::vector<std::string> inputs) {
  return {std::move(name), LayerKind::Deconv, 3, stride, channels, divisor, std::move(inputs)};
}
LayerSpec fc(std::string name, int channels, int divisor, std::vector<std::string> inputs) {
  return {std::move(name), LayerKind::FullyConnected, 0, 0, channels, divisor, std::move(inputs)};
}

int64_t scaled(int channels, int divisor) { return std::max(1, channels / divisor); }

// Concatenates along channels within each group: [B, G*C_i, h, w] -> [B, G*sum(C_i), h, w].
torch::Tensor group_cat(const std::vector<torch::Tensor>& parts, int64_t groups) {
  if (groups == 1) return torch::cat(parts, 1);
  std::vector<torch::Tensor> views;
  views.reserve(parts.size());
  for (const auto& p : parts) views.push_back(p.view({p.size(0), groups, p.size(1) / groups, p.size(2), p.size(3)}));
  auto cat = torch::cat(views, 2);
  return cat.view({cat.size(0), cat.size(1) * cat.size(2), cat.size(3), cat.size(4)});
}

}  // namespace

Pathway parse_pathway(const std::string& s) {
  if (s == "both") return Pathway::Both;
  if (s == "global" || s == "global_only") return Pathway::GlobalOnly;
  if (s == "local" || s == "local_only") return Pathway::LocalOnly;
  throw ArgumentError("unknown pathway '" + s + "' (expected both, global or local)");
}

std::string to_string(Pathway p) {
  switch (p) {
    case Pathway::Both:
      return "both";
    case Pathway::GlobalOnly:
      return "global";
    case Pathway::LocalOnly:
      return "local";
  }
  return "both";
}

void validate(const GeneratorConfig& cfg) {
  if (cfg.block_size != 32) throw ShapeError("the local sub-network table is defined for 32x32 blocks");
  if (cfg.height < 32 || cfg.width < 32 || cfg.height % 32 != 0 || cfg.width % 32 != 0) {
    throw ShapeError("frame dimensions must be positive multiples of 32 (five stride-2 encoder stages), got " +
                     std::to_string(cfg.height) + "x" + std::to_string(cfg.width));
  }
  if (cfg.num_scales < 1) throw ShapeError("at least one output scale is required");
  if (cfg.height % (1 << (cfg.num_scales - 1)) != 0 || cfg.width % (1 << (cfg.num_scales - 1)) != 0) {
    throw ShapeError("frame dimensions not divisible by 2^(num_scales-1)");
  }
  if (cfg.channel_divisor < 1) throw ShapeError("channel divisor must be >= 1");
}

const std::vector<LayerSpec>& global_layer_table() {
  static const std::vector<LayerSpec> table{
      conv("cov0", 1, 32, 1, {"input"}),
      conv("cov1", 2, 64, 2, {"cov0"}),
      conv("cov2", 2, 128, 4, {"cov1"}),
      conv("cov3", 2, 256, 8, {"cov2"}),
      conv("cov4", 2, 512, 16, {"cov3"}),
      conv("cov5", 2, 1024, 32, {"cov4"}),
      fc("fc1", 512, 0, {"cov5"}),
      fc("fc2", 128, 32, {"fc1"}),
      deconv("decov0", 2, 64, 16, {"fc2"}),
      deconv("decov1", 2, 32, 8, {"decov0"}),
      deconv("decov2", 2, 16, 4, {"decov1"}),
      deconv("decov3", 2, 8, 2, {"decov2"}),
      deconv("decov4", 2, 4, 1, {"decov3"}),
      deconv("decov5", 2, 512, 16, {"cov5"}),
      deconv("decov6", 2, 256, 8, {"decov5", "cov4", "decov0"}),
      deconv("decov7", 2, 128, 4, {"decov6", "cov3", "decov1"}),
      deconv("decov8", 2, 64, 2, {"decov7", "cov2", "decov2"}),
      deconv("decov9", 2, 32, 1, {"decov8", "cov1", "decov3"}),
      conv("cov6", 1, 32, 1, {"decov9", "cov0", "decov4"}),
  };
  return table;
}

const std::vector<LayerSpec>& local_layer_table() {
  // decov1 and decov4 are listed with stride 2 but their Outputs keep the
  // input resolution (32x32 from 32x32); the Outputs column is followed.
  static const std::vector<LayerSpec> table{
      conv("cov0", 1, 32, 1, {"input"}),
      conv("cov1", 2, 64, 2, {"cov0"}),
      conv("cov2", 2, 128, 4, {"cov1"}),
      deconv("decov0", 2, 64, 2, {"cov2"}),
      deconv("decov1", 1, 32, 1, {"cov0"}),
      deconv("decov2", 2, 128, 2, {"cov2"}),
      deconv("decov3", 2, 256, 1, {"decov0", "cov1", "decov2"}),
      deconv("decov4", 1, 64, 1, {"decov3", "cov0", "decov1"}),
  };
  return table;
}

int ShapeLedger::mismatches() const {
  return static_cast<int>(std::count_if(records.begin(), records.end(), [](const ShapeRecord& r) { return !r.ok(); }));
}

const ShapeRecord* ShapeLedger::find(const std::string& layer) const {
  for (const auto& r : records) {
    if (r.layer == layer) return &r;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------

Norm2dImpl::Norm2dImpl(int64_t channels) {
  weight_ = register_parameter("weight", torch::ones({channels}));
  bias_ = register_parameter("bias", torch::zeros({channels}));
  running_mean_ = register_buffer("running_mean", torch::zeros({channels}));
  running_var_ = register_buffer("running_var", torch::ones({channels}));
}

torch::Tensor Norm2dImpl::forward(const torch::Tensor& x) {
  constexpr double kMomentum = 0.1;
  constexpr double kEps = 1e-5;
  if (is_training()) {
    const bool track = track_running_stats && x.size(0) > 0;
    return torch::batch_norm(x, weight_, bias_, track ? running_mean_ : torch::Tensor(),
                             track ? running_var_ : torch::Tensor(), true, kMomentum, kEps, false);
  }
  return torch::batch_norm(x, weight_, bias_, running_mean_, running_var_, false, kMomentum, kEps, false);
}

ResidualBlockImpl::ResidualBlockImpl(int64_t channels, int64_t groups) {
  auto opts = torch::nn::Conv2dOptions(channels, channels, 3).padding(1).groups(groups).bias(false);
  conv1_ = register_module("conv1", torch::nn::Conv2d(opts));
  norm1_ = register_module("norm1", Norm2d(channels));
  conv2_ = register_module("conv2", torch::nn::Conv2d(opts));
  norm2_ = register_module("norm2", Norm2d(channels));
}

torch::Tensor ResidualBlockImpl::forward(const torch::Tensor& x) {
  auto y = torch::relu(norm1_(conv1_(x)));
  y = norm2_(conv2_(y));
  return torch::relu(x + y);
}

ConvUnitImpl::ConvUnitImpl(LayerKind kind, int64_t in_channels, int64_t out_channels, int64_t kernel, int64_t stride,
                           int64_t groups, int residual_blocks) {
  const int64_t pad = kernel / 2;
  if (kind == LayerKind::Deconv) {
    deconv_ = register_module("deconv", torch::nn::ConvTranspose2d(torch::nn::ConvTranspose2dOptions(in_channels, out_channels, kernel)
                                                                       .stride(stride)
                                                                       .padding(pad)
                                                                       .output_padding(stride - 1)
                                                                       .groups(groups)
                                                                       .bias(false)));
  } else {
    conv_ = register_module("conv", torch::nn::Conv2d(torch::nn::Conv2dOptions(in_channels, out_channels, kernel)
                                                          .stride(stride)
                                                          .padding(pad)
                                                          .groups(groups)
                                                          .bias(false)));
  }
  norm_ = register_module("norm", Norm2d(out_channels));
  residuals_ = register_module("residual", torch::nn::Sequential());
  for (int i = 0; i < residual_blocks; ++i) residuals_->push_back(ResidualBlock(out_channels, groups));
}

torch::Tensor ConvUnitImpl::forward(const torch::Tensor& x) {
  auto y = conv_ ? conv_(x) : deconv_(x);
  y = torch::relu(norm_(y));
  return residuals_->forward(y);
}

SubnetImpl::SubnetImpl(const std::vector<LayerSpec>& table, int extent_h, int extent_w, int groups, int channel_divisor,
                       const std::string& ledger_prefix)
    : groups_(groups), channel_divisor_(channel_divisor), prefix_(ledger_prefix) {
  std::map<std::string, std::tuple<int64_t, int64_t, int64_t>> shapes;  // per-group channels, h, w
  shapes["input"] = {3, extent_h, extent_w};
  for (const LayerSpec& spec : table) {
    Node node;
    node.spec = spec;
    int64_t in_channels = 0;
    int64_t in_h = 0, in_w = 0;
    for (const auto& name : spec.inputs) {
      auto it = shapes.find(name);
      if (it == shapes.end()) throw ShapeError(prefix_ + spec.name + ": unknown input " + name);
      const auto [c, h, w] = it->second;
      if (in_channels > 0 && (h != in_h || w != in_w)) {
        throw ShapeError(prefix_ + spec.name + ": concatenated inputs differ in spatial size");
      }
      in_channels += c;
      in_h = h;
      in_w = w;
    }
    node.channels = scaled(spec.out_channels, channel_divisor);
    switch (spec.kind) {
      case LayerKind::Conv:
        node.h = in_h / spec.stride;
        node.w = in_w / spec.stride;
        node.unit = register_module(spec.name, ConvUnit(spec.kind, in_channels * groups, node.channels * groups,
                                                        spec.kernel, spec.stride, groups, kResidualBlocks));
        break;
      case LayerKind::Deconv:
        node.h = in_h * spec.stride;
        node.w = in_w * spec.stride;
        node.unit = register_module(spec.name, ConvUnit(spec.kind, in_channels * groups, node.channels * groups,
                                                        spec.kernel, spec.stride, groups, kResidualBlocks));
        break;
      case LayerKind::FullyConnected: {
        if (groups != 1) throw ShapeError("fully-connected rows are only supported on the global path");
        const int64_t in_features = in_channels * in_h * in_w;
        if (spec.out_divisor == 0) {
          node.h = 1;  // flat feature vector
          node.w = 1;
          node.fc = register_module(spec.name, torch::nn::Linear(in_features, node.channels));
        } else {
          node.h = extent_h / spec.out_divisor;
          node.w = extent_w / spec.out_divisor;
          node.fc = register_module(spec.name, torch::nn::Linear(in_features, node.channels * node.h * node.w));
        }
        break;
      }
    }
    if (spec.kind != LayerKind::FullyConnected &&
        (node.h * spec.out_divisor != extent_h || node.w * spec.out_divisor != extent_w)) {
      throw ShapeError(prefix_ + spec.name + ": stride arithmetic gives " + std::to_string(node.h) + "x" +
                       std::to_string(node.w) + ", table expects extent/" + std::to_string(spec.out_divisor));
    }
    shapes[spec.name] = {node.channels, node.h, node.w};
    nodes_.push_back(std::move(node));
  }
  out_channels_ = nodes_.back().channels;
}

torch::Tensor SubnetImpl::forward(const torch::Tensor& x, ShapeLedger* ledger) {
  std::map<std::string, torch::Tensor> outputs;
  outputs["input"] = x;
  const int64_t batch = x.size(0);
  for (Node& node : nodes_) {
    std::vector<torch::Tensor> ins;
    ins.reserve(node.spec.inputs.size());
    for (const auto& name : node.spec.inputs) ins.push_back(outputs.at(name));
    torch::Tensor y;
    std::vector<int64_t> expected;
    std::vector<int64_t> actual;
    if (node.spec.kind == LayerKind::FullyConnected) {
      y = torch::relu(node.fc(ins.front().flatten(1)));
      if (node.spec.out_divisor == 0) {
        expected = {node.channels};
        actual = {y.size(1)};
      } else {
        y = y.view({batch, node.channels, node.h, node.w});
        expected = {node.channels, node.h, node.w};
        actual = {y.size(1), y.size(2), y.size(3)};
      }
    } else {
      y = node.unit(ins.size() == 1 ? ins.front() : group_cat(ins, groups_));
      expected = {node.channels, node.h, node.w};
      actual = {y.size(1) / groups_, y.size(2), y.size(3)};
    }
    if (ledger) ledger->records.push_back({prefix_ + node.spec.name, expected, actual});
    outputs[node.spec.name] = y;
  }
  return outputs.at(nodes_.back().spec.name);
}

// ---------------------------------------------------------------------------

GeneratorImpl::GeneratorImpl(const GeneratorConfig& cfg) : cfg_(cfg) {
  validate(cfg);
  const int d = cfg.channel_divisor;
  const int m = cfg.num_blocks();
  global_path = register_module("global", Subnet(global_layer_table(), cfg.height, cfg.width, 1, d, "global."));
  local_path = register_module("local", Subnet(local_layer_table(), cfg.block_size, cfg.block_size, m, d, "local."));
  global_channels_ = global_path->out_channels();
  local_channels_ = local_path->out_channels();

  const int64_t fused = global_channels_ + local_channels_;
  const int64_t hidden = scaled(kFusionChannels, d);
  fuse_conv_ = register_module("fuse_conv", torch::nn::Conv2d(torch::nn::Conv2dOptions(fused, hidden, 3).padding(1).bias(false)));
  fuse_norm_ = register_module("fuse_norm", Norm2d(hidden));
  out_conv_ = register_module("out_conv", torch::nn::Conv2d(torch::nn::Conv2dOptions(hidden, 3, 3).padding(1)));

  head_down_ = register_module("head_down", torch::nn::ModuleList());
  head_norm_ = register_module("head_norm", torch::nn::ModuleList());
  head_out_ = register_module("head_out", torch::nn::ModuleList());
  const int64_t head = scaled(kHeadChannels, d);
  int64_t prev = hidden;
  for (int k = 1; k < cfg.num_scales; ++k) {
    head_down_->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(prev, head, 3).stride(2).padding(1).bias(false)));
    head_norm_->push_back(Norm2d(head));
    head_out_->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(head, 3, 3).padding(1)));
    prev = head;
  }
}

torch::Tensor GeneratorImpl::split_blocks(const torch::Tensor& x) const {
  const int64_t b = cfg_.block_size;
  const int64_t rows = x.size(2) / b;
  const int64_t cols = x.size(3) / b;
  const int64_t c = x.size(1);
  return x.reshape({x.size(0), c, rows, b, cols, b})
      .permute({0, 2, 4, 1, 3, 5})
      .reshape({x.size(0), rows * cols * c, b, b});
}

torch::Tensor GeneratorImpl::assemble_blocks(const torch::Tensor& packed) const {
  const int64_t b = cfg_.block_size;
  const int64_t rows = cfg_.height / b;
  const int64_t cols = cfg_.width / b;
  const int64_t c = packed.size(1) / (rows * cols);
  return packed.reshape({packed.size(0), rows, cols, c, b, b})
      .permute({0, 3, 1, 4, 2, 5})
      .reshape({packed.size(0), c, rows * b, cols * b});
}

std::vector<torch::Tensor> GeneratorImpl::forward(const torch::Tensor& night, Pathway pathway, ShapeLedger* ledger) {
  if (night.dim() != 4 || night.size(1) != 3 || night.size(2) != cfg_.height || night.size(3) != cfg_.width) {
    throw ShapeError("generator expects [B,3," + std::to_string(cfg_.height) + "," + std::to_string(cfg_.width) + "] input");
  }
  const int64_t batch = night.size(0);
  const auto opts = night.options();

  torch::Tensor global_feat;
  if (pathway == Pathway::LocalOnly) {
    global_feat = torch::zeros({batch, global_channels_, cfg_.height, cfg_.width}, opts);
  } else {
    global_feat = global_path->forward(night, ledger);
  }

  torch::Tensor local_feat;
  if (pathway == Pathway::GlobalOnly) {
    local_feat = torch::zeros({batch, local_channels_, cfg_.height, cfg_.width}, opts);
  } else {
    local_feat = assemble_blocks(local_path->forward(split_blocks(night), ledger));
  }
  auto fused = torch::cat({global_feat, local_feat}, 1);
  if (ledger) {
    ledger->records.push_back({"local.assembled", {local_channels_, cfg_.height, cfg_.width},
                               {local_feat.size(1), local_feat.size(2), local_feat.size(3)}});
    ledger->records.push_back({"fusion.concat", {global_channels_ + local_channels_, cfg_.height, cfg_.width},
                               {fused.size(1), fused.size(2), fused.size(3)}});
  }

  auto hidden = torch::relu(fuse_norm_(fuse_conv_(fused)));
  std::vector<torch::Tensor> scales;
  scales.push_back(torch::sigmoid(out_conv_(hidden)));
  for (int k = 1; k < cfg_.num_scales; ++k) {
    const auto i = static_cast<std::size_t>(k - 1);
    hidden = torch::relu(head_norm_[i]->as<Norm2dImpl>()->forward(head_down_[i]->as<torch::nn::Conv2dImpl>()->forward(hidden)));
    scales.push_back(torch::sigmoid(head_out_[i]->as<torch::nn::Conv2dImpl>()->forward(hidden)));
  }
  if (ledger) {
    for (int k = 0; k < cfg_.num_scales; ++k) {
      const auto& s = scales[static_cast<std::size_t>(k)];
      ledger->records.push_back({"scale" + std::to_string(k), {3, cfg_.height >> k, cfg_.width >> k},
                                 {s.size(1), s.size(2), s.size(3)}});
    }
  }
  return scales;
}

ShapeLedger GeneratorImpl::trace_shapes() {
  torch::NoGradGuard no_grad;
  const bool was_training = is_training();
  eval();
  ShapeLedger ledger;
  forward(torch::zeros({0, 3, cfg_.height, cfg_.width}), Pathway::Both, &ledger);
  train(was_training);
  return ledger;
}

void GeneratorImpl::set_track_running_stats(bool on) {
  for (auto& module : modules(/*include_self=*/false)) {
    if (auto* norm = module->as<Norm2dImpl>()) norm->track_running_stats = on;
  }
}

Generator build_generator(const GeneratorConfig& cfg) {
  validate(cfg);
  torch::manual_seed(cfg.seed);
  Generator gen(cfg);
  const ShapeLedger ledger = gen->trace_shapes();
  for (const auto& r : ledger.records) {
    if (!r.ok()) throw ShapeError("generator shape ledger mismatch at " + r.layer);
  }
  return gen;
}

ScaleSet generate(Generator& gen, const Image& night, Pathway pathway) {
  return generate_all(gen, {night}, pathway, 1).front();
}

std::vector<ScaleSet> generate_all(Generator& gen, const std::vector<Image>& frames, Pathway pathway, int batch) {
  torch::NoGradGuard no_grad;
  const bool was_training = gen->is_training();
  gen->eval();
  std::vector<ScaleSet> out;
  out.reserve(frames.size());
  batch = std::max(1, batch);
  for (std::size_t i = 0; i < frames.size(); i += static_cast<std::size_t>(batch)) {
    std::vector<const Image*> chunk;
    for (std::size_t j = i; j < std::min(frames.size(), i + static_cast<std::size_t>(batch)); ++j) chunk.push_back(&frames[j]);
    auto sets = to_scale_sets(gen->forward(to_batch(chunk), pathway));
    for (auto& s : sets) out.push_back(std::move(s));
  }
  gen->train(was_training);
  return out;
}

}  // namespace n2d::nn
