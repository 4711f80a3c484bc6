#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <string>
#include <vector>

#include "n2d/core/image.hpp"

namespace n2d::nn {

enum class Pathway { Both, GlobalOnly, LocalOnly };

Pathway parse_pathway(const std::string& s);
std::string to_string(Pathway p);

struct GeneratorConfig {
  int height = 256;
  int width = 256;
  int block_size = 32;
  int num_scales = 2;
  std::uint64_t seed = 0;
  // Every hidden channel count is divided by this; 1 is the published width.
  int channel_divisor = 1;

  int num_blocks() const { return (height / block_size) * (width / block_size); }
  friend bool operator==(const GeneratorConfig&, const GeneratorConfig&) = default;
};

/// Throws ShapeError when the configuration cannot realise the layer tables.
void validate(const GeneratorConfig& cfg);

enum class LayerKind { Conv, Deconv, FullyConnected };

/// One row of a sub-network table. Spatial output extent is
/// reference_extent / out_divisor, where the reference extent is the frame
/// size for the global path and the block size for the local path.
struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::Conv;
  int kernel = 3;
  int stride = 1;
  int out_channels = 0;  // at channel_divisor 1
  int out_divisor = 1;
  std::vector<std::string> inputs;
};

const std::vector<LayerSpec>& global_layer_table();
const std::vector<LayerSpec>& local_layer_table();

/// Observed per-sample output of a named layer against the table value.
struct ShapeRecord {
  std::string layer;
  std::vector<int64_t> expected;  // [C,H,W] or [N] for fully-connected
  std::vector<int64_t> actual;
  bool ok() const { return expected == actual; }
};

struct ShapeLedger {
  std::vector<ShapeRecord> records;
  int mismatches() const;
  const ShapeRecord* find(const std::string& layer) const;
};

/// Batch normalisation whose running-statistics update can be suspended, so
/// generator passes made for critic updates leave every generator tensor
/// untouched.
class Norm2dImpl : public torch::nn::Module {
 public:
  explicit Norm2dImpl(int64_t channels);
  torch::Tensor forward(const torch::Tensor& x);
  bool track_running_stats = true;

 private:
  torch::Tensor weight_, bias_, running_mean_, running_var_;
};
TORCH_MODULE(Norm2d);

/// conv-norm-relu-conv-norm plus identity, then relu. Channel preserving.
class ResidualBlockImpl : public torch::nn::Module {
 public:
  ResidualBlockImpl(int64_t channels, int64_t groups);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv2d conv1_{nullptr}, conv2_{nullptr};
  Norm2d norm1_{nullptr}, norm2_{nullptr};
};
TORCH_MODULE(ResidualBlock);

/// Convolution-BatchNorm-ReLU followed by three residual blocks. With
/// groups > 1 every group is an independent sub-network.
class ConvUnitImpl : public torch::nn::Module {
 public:
  ConvUnitImpl(LayerKind kind, int64_t in_channels, int64_t out_channels, int64_t kernel, int64_t stride, int64_t groups,
               int residual_blocks);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv2d conv_{nullptr};
  torch::nn::ConvTranspose2d deconv_{nullptr};
  Norm2d norm_{nullptr};
  torch::nn::Sequential residuals_{nullptr};
};
TORCH_MODULE(ConvUnit);

/// Encoder-decoder built from a layer table. The local path packs its M
/// blocks along the channel axis ([B, M*C, h, w]) and uses grouped
/// convolutions, one group per block.
class SubnetImpl : public torch::nn::Module {
 public:
  SubnetImpl(const std::vector<LayerSpec>& table, int extent_h, int extent_w, int groups, int channel_divisor,
             const std::string& ledger_prefix);
  /// Returns the output of the last table row; fills `ledger` when given.
  torch::Tensor forward(const torch::Tensor& x, ShapeLedger* ledger = nullptr);
  int64_t out_channels() const { return out_channels_; }

 private:
  struct Node {
    LayerSpec spec;
    int64_t channels = 0;  // per group
    int64_t h = 0, w = 0;
    ConvUnit unit{nullptr};
    torch::nn::Linear fc{nullptr};
  };
  std::vector<Node> nodes_;
  int groups_;
  int channel_divisor_;
  std::string prefix_;
  int64_t out_channels_ = 0;
};
TORCH_MODULE(Subnet);

/// Two-pathway generator: global encoder-decoder over the frame, M local
/// encoder-decoders over 32x32 blocks, concatenation, a two-convolution fusion
/// head and one extra head per additional scale.
class GeneratorImpl : public torch::nn::Module {
 public:
  explicit GeneratorImpl(const GeneratorConfig& cfg);

  /// night: [B,3,H,W] in [0,1]. Returns num_scales tensors, scale k is
  /// [B,3,H/2^k,W/2^k] in [0,1].
  std::vector<torch::Tensor> forward(const torch::Tensor& night, Pathway pathway = Pathway::Both,
                                     ShapeLedger* ledger = nullptr);

  /// Traces every intermediate shape with an empty batch.
  ShapeLedger trace_shapes();

  const GeneratorConfig& config() const { return cfg_; }

  /// Toggles running-statistics updates in every normalisation layer.
  void set_track_running_stats(bool on);

  /// [B,3,H,W] -> [B, M*3, b, b], blocks in row-major grid order.
  torch::Tensor split_blocks(const torch::Tensor& x) const;
  /// Inverse of split_blocks for any channel count.
  torch::Tensor assemble_blocks(const torch::Tensor& packed) const;

  Subnet global_path{nullptr};
  Subnet local_path{nullptr};

 private:
  GeneratorConfig cfg_;
  int64_t global_channels_ = 0;
  int64_t local_channels_ = 0;
  torch::nn::Conv2d fuse_conv_{nullptr};
  Norm2d fuse_norm_{nullptr};
  torch::nn::Conv2d out_conv_{nullptr};
  torch::nn::ModuleList head_down_{nullptr};
  torch::nn::ModuleList head_norm_{nullptr};
  torch::nn::ModuleList head_out_{nullptr};
};
TORCH_MODULE(Generator);

/// Builds the generator with parameters drawn deterministically from cfg.seed
/// and asserts the shape ledger (throws ShapeError on any mismatch).
Generator build_generator(const GeneratorConfig& cfg);

/// Inference-mode forward of a single frame.
ScaleSet generate(Generator& gen, const Image& night, Pathway pathway = Pathway::Both);

/// Inference-mode forward of several frames, processed `batch` at a time.
std::vector<ScaleSet> generate_all(Generator& gen, const std::vector<Image>& frames, Pathway pathway = Pathway::Both,
                                   int batch = 4);

}  // namespace n2d::nn
