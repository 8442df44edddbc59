#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "sslus/image.hpp"

namespace sslus {

enum class Architecture { ReferenceResNet50, TinyCnn };

std::string to_string(Architecture a);
Architecture parse_architecture(const std::string& s);

inline constexpr int kEmbeddingDim = 128;

struct EncoderConfig {
  Architecture architecture = Architecture::TinyCnn;
  /// Index into the encoder's flattened leaf-layer list; the perceptual tap is
  /// the output of the block that contains this layer. -1 selects the default
  /// (40 for the ResNet-50, stage 3 for tiny_cnn).
  int perceptual_tap_layer = -1;
  std::optional<std::filesystem::path> pretrained_weights;

  int resolved_tap_layer() const;
  std::int64_t feature_dim() const;
  /// Square input side for whole images (224 reference, 96 tiny).
  int image_size() const;
  /// Square input side for jigsaw patches (64 reference, 32 tiny).
  int patch_size() const;
};

struct EncoderOutput {
  torch::Tensor features;             // [B, feature_dim], globally pooled
  torch::Tensor tap;                  // [B, C, h, w] at the perceptual tap
  std::vector<torch::Tensor> stages;  // every stage output, shallow to deep
};

/// Common surface of the backbones. Both map [B,3,H,W] in [0,1] to pooled
/// features, the tap map and the per-stage maps used by the U-Net decoder.
class EncoderImpl : public torch::nn::Module {
 public:
  virtual EncoderOutput forward(const torch::Tensor& x) = 0;
  virtual std::int64_t feature_dim() const = 0;
  virtual std::vector<std::int64_t> stage_channels() const = 0;
  virtual std::int64_t tap_channels() const = 0;
  virtual std::size_t leaf_layer_count() const = 0;
};

using Encoder = std::shared_ptr<EncoderImpl>;

/// Builds the backbone and loads `pretrained_weights` when set. Throws
/// ConfigError if the tap layer does not exist or the weights fail to load.
Encoder make_encoder(const EncoderConfig& cfg);

/// Four stride-2 3×3 conv stages (16/32/64/128 channels) with ReLU, global
/// average pooling on top.
class TinyCnnImpl : public EncoderImpl {
 public:
  explicit TinyCnnImpl(int tap_layer);
  EncoderOutput forward(const torch::Tensor& x) override;
  std::int64_t feature_dim() const override { return 128; }
  std::vector<std::int64_t> stage_channels() const override { return {16, 32, 64, 128}; }
  std::int64_t tap_channels() const override;
  std::size_t leaf_layer_count() const override { return 8; }

 private:
  std::vector<torch::nn::Conv2d> convs_;
  int tap_stage_;
};

class BottleneckImpl : public torch::nn::Module {
 public:
  BottleneckImpl(std::int64_t in_ch, std::int64_t width, std::int64_t stride);
  torch::Tensor forward(const torch::Tensor& x);
  bool has_downsample() const { return !downsample_.is_empty(); }

 private:
  torch::nn::Conv2d conv1_{nullptr}, conv2_{nullptr}, conv3_{nullptr};
  torch::nn::BatchNorm2d bn1_{nullptr}, bn2_{nullptr}, bn3_{nullptr};
  torch::nn::Sequential downsample_{nullptr};
};
TORCH_MODULE(Bottleneck);

/// ResNet-50 (bottleneck layers 3/4/6/3). Leaf layers are counted in forward
/// order: stem conv, bn, relu, maxpool, then per bottleneck conv1, bn1, conv2,
/// bn2, conv3, bn3, [downsample conv, downsample bn], relu.
class ResNet50Impl : public EncoderImpl {
 public:
  explicit ResNet50Impl(int tap_layer);
  EncoderOutput forward(const torch::Tensor& x) override;
  std::int64_t feature_dim() const override { return 2048; }
  std::vector<std::int64_t> stage_channels() const override { return {64, 256, 512, 1024, 2048}; }
  std::int64_t tap_channels() const override { return tap_channels_; }
  std::size_t leaf_layer_count() const override { return leaf_count_; }
  /// Block index (0 = stem) whose output is the tap.
  int tap_block() const { return tap_block_; }

 private:
  torch::nn::Sequential stem_{nullptr};
  std::vector<Bottleneck> blocks_;
  std::vector<int> block_stage_;  // which of layer1..layer4 each block belongs to
  int tap_block_ = 0;
  std::int64_t tap_channels_ = 0;
  std::size_t leaf_count_ = 0;
};

/// Linear map to 128-d followed by L2 normalisation.
class ProjectionHeadImpl : public torch::nn::Module {
 public:
  explicit ProjectionHeadImpl(std::int64_t in_features);
  torch::Tensor forward(const torch::Tensor& x);
  std::int64_t in_features() const { return in_features_; }

 private:
  torch::nn::Linear linear_{nullptr};
  std::int64_t in_features_;
};
TORCH_MODULE(ProjectionHead);

/// Row-wise v / (‖v‖₂ + 1e-12).
torch::Tensor l2_normalize(const torch::Tensor& x);

/// Global average pool of a [B,C,h,w] map to [B,C].
torch::Tensor global_pool(const torch::Tensor& map);

/// Stacks images into a [B,3,H,W] float tensor.
torch::Tensor batch_tensor(const std::vector<Image>& images);

/// Runs the encoder on [N*36,3,p,p] patches and concatenates the per-patch
/// features of each sample in output-position order -> [N, 36*feature_dim].
/// The second element is the pooled tap of every patch, [N, 36, C].
std::pair<torch::Tensor, torch::Tensor> encode_patches_concat(EncoderImpl& encoder,
                                                              const torch::Tensor& patches);

/// Eval-mode, no-grad encoding of one image: (features [D], tap [C,h,w]).
std::pair<torch::Tensor, torch::Tensor> encode_image(EncoderImpl& encoder, const Image& img);

}  // namespace sslus
