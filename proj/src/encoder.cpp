#include "sslus/encoder.hpp"

#include <stdexcept>

#include "sslus/errors.hpp"

namespace sslus {

namespace nn = torch::nn;

std::string to_string(Architecture a) {
  return a == Architecture::ReferenceResNet50 ? "reference_resnet50" : "tiny_cnn";
}

Architecture parse_architecture(const std::string& s) {
  if (s == "reference_resnet50") return Architecture::ReferenceResNet50;
  if (s == "tiny_cnn") return Architecture::TinyCnn;
  throw ConfigError("unknown architecture '" + s + "'");
}

int EncoderConfig::resolved_tap_layer() const {
  if (perceptual_tap_layer >= 0) return perceptual_tap_layer;
  return architecture == Architecture::ReferenceResNet50 ? 40 : 4;
}

std::int64_t EncoderConfig::feature_dim() const {
  return architecture == Architecture::ReferenceResNet50 ? 2048 : 128;
}

int EncoderConfig::image_size() const {
  return architecture == Architecture::ReferenceResNet50 ? 224 : 96;
}

int EncoderConfig::patch_size() const {
  return architecture == Architecture::ReferenceResNet50 ? 64 : 32;
}

// ---------------------------------------------------------------------------
// tiny_cnn

TinyCnnImpl::TinyCnnImpl(int tap_layer) {
  // Leaves: (conv, relu) per stage.
  if (tap_layer < 0 || tap_layer >= 8) {
    throw ConfigError("tiny_cnn has no leaf layer " + std::to_string(tap_layer));
  }
  tap_stage_ = tap_layer / 2;
  std::int64_t in = 3;
  const auto chans = stage_channels();
  for (std::size_t i = 0; i < chans.size(); ++i) {
    auto conv = nn::Conv2d(nn::Conv2dOptions(in, chans[i], 3).stride(2).padding(1));
    convs_.push_back(register_module("conv" + std::to_string(i + 1), conv));
    in = chans[i];
  }
}

std::int64_t TinyCnnImpl::tap_channels() const { return stage_channels()[tap_stage_]; }

EncoderOutput TinyCnnImpl::forward(const torch::Tensor& x) {
  EncoderOutput out;
  torch::Tensor h = x;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    h = torch::relu(convs_[i]->forward(h));
    out.stages.push_back(h);
    if (static_cast<int>(i) == tap_stage_) out.tap = h;
  }
  out.features = global_pool(h);
  return out;
}

// ---------------------------------------------------------------------------
// ResNet-50

BottleneckImpl::BottleneckImpl(std::int64_t in_ch, std::int64_t width, std::int64_t stride) {
  const std::int64_t out_ch = width * 4;
  conv1_ = register_module("conv1", nn::Conv2d(nn::Conv2dOptions(in_ch, width, 1).bias(false)));
  bn1_ = register_module("bn1", nn::BatchNorm2d(width));
  conv2_ = register_module(
      "conv2", nn::Conv2d(nn::Conv2dOptions(width, width, 3).stride(stride).padding(1).bias(false)));
  bn2_ = register_module("bn2", nn::BatchNorm2d(width));
  conv3_ = register_module("conv3", nn::Conv2d(nn::Conv2dOptions(width, out_ch, 1).bias(false)));
  bn3_ = register_module("bn3", nn::BatchNorm2d(out_ch));
  if (stride != 1 || in_ch != out_ch) {
    downsample_ = register_module(
        "downsample",
        nn::Sequential(nn::Conv2d(nn::Conv2dOptions(in_ch, out_ch, 1).stride(stride).bias(false)),
                       nn::BatchNorm2d(out_ch)));
  }
}

torch::Tensor BottleneckImpl::forward(const torch::Tensor& x) {
  auto h = torch::relu(bn1_->forward(conv1_->forward(x)));
  h = torch::relu(bn2_->forward(conv2_->forward(h)));
  h = bn3_->forward(conv3_->forward(h));
  auto identity = downsample_.is_empty() ? x : downsample_->forward(x);
  return torch::relu(h + identity);
}

ResNet50Impl::ResNet50Impl(int tap_layer) {
  stem_ = register_module(
      "stem", nn::Sequential(nn::Conv2d(nn::Conv2dOptions(3, 64, 7).stride(2).padding(3).bias(false)),
                             nn::BatchNorm2d(64), nn::ReLU(),
                             nn::MaxPool2d(nn::MaxPool2dOptions(3).stride(2).padding(1))));
  std::vector<std::size_t> block_end{4};  // exclusive leaf bound per unit, stem first
  std::vector<std::int64_t> unit_channels{64};

  const std::int64_t widths[] = {64, 128, 256, 512};
  const int depths[] = {3, 4, 6, 3};
  std::int64_t in = 64;
  for (int stage = 0; stage < 4; ++stage) {
    for (int b = 0; b < depths[stage]; ++b) {
      const std::int64_t stride = (b == 0 && stage > 0) ? 2 : 1;
      auto block = Bottleneck(in, widths[stage], stride);
      register_module("layer" + std::to_string(stage + 1) + "_" + std::to_string(b), block);
      block_end.push_back(block_end.back() + (block->has_downsample() ? 9 : 7));
      blocks_.push_back(block);
      block_stage_.push_back(stage);
      in = widths[stage] * 4;
      unit_channels.push_back(in);
    }
  }
  leaf_count_ = block_end.back();
  if (tap_layer < 0 || static_cast<std::size_t>(tap_layer) >= leaf_count_) {
    throw ConfigError("reference_resnet50 has no leaf layer " + std::to_string(tap_layer));
  }
  for (std::size_t u = 0; u < block_end.size(); ++u) {
    if (static_cast<std::size_t>(tap_layer) < block_end[u]) {
      tap_block_ = static_cast<int>(u);
      break;
    }
  }
  tap_channels_ = unit_channels[tap_block_];
}

EncoderOutput ResNet50Impl::forward(const torch::Tensor& x) {
  EncoderOutput out;
  // The stem skip is taken before max-pooling (stride 2).
  auto h = stem_[0]->as<nn::Conv2d>()->forward(x);
  h = torch::relu(stem_[1]->as<nn::BatchNorm2d>()->forward(h));
  out.stages.push_back(h);
  h = stem_[3]->as<nn::MaxPool2d>()->forward(h);
  if (tap_block_ == 0) out.tap = h;
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    h = blocks_[b]->forward(h);
    if (static_cast<int>(b) + 1 == tap_block_) out.tap = h;
    const bool last_in_stage = b + 1 == blocks_.size() || block_stage_[b + 1] != block_stage_[b];
    if (last_in_stage) out.stages.push_back(h);
  }
  out.features = global_pool(h);
  return out;
}

// ---------------------------------------------------------------------------

Encoder make_encoder(const EncoderConfig& cfg) {
  Encoder enc;
  if (cfg.architecture == Architecture::TinyCnn) {
    enc = std::make_shared<TinyCnnImpl>(cfg.resolved_tap_layer());
  } else {
    enc = std::make_shared<ResNet50Impl>(cfg.resolved_tap_layer());
  }
  if (cfg.pretrained_weights) {
    try {
      torch::serialize::InputArchive archive;
      archive.load_from(cfg.pretrained_weights->string());
      enc->load(archive);
    } catch (const std::exception& e) {
      throw ConfigError("cannot load encoder weights from " + cfg.pretrained_weights->string() +
                        ": " + e.what());
    }
  }
  return enc;
}

ProjectionHeadImpl::ProjectionHeadImpl(std::int64_t in_features) : in_features_(in_features) {
  linear_ = register_module("linear", nn::Linear(in_features, kEmbeddingDim));
}

torch::Tensor ProjectionHeadImpl::forward(const torch::Tensor& x) {
  if (x.size(-1) != in_features_) {
    throw std::invalid_argument("projection head expects " + std::to_string(in_features_) +
                                " features, got " + std::to_string(x.size(-1)));
  }
  return l2_normalize(linear_->forward(x));
}

torch::Tensor l2_normalize(const torch::Tensor& x) {
  return x / (x.norm(2, -1, true) + 1e-12);
}

torch::Tensor global_pool(const torch::Tensor& map) { return map.mean({2, 3}); }

torch::Tensor batch_tensor(const std::vector<Image>& images) {
  std::vector<torch::Tensor> ts;
  ts.reserve(images.size());
  for (const auto& img : images) ts.push_back(to_tensor(img));
  return torch::stack(ts);
}

std::pair<torch::Tensor, torch::Tensor> encode_patches_concat(EncoderImpl& encoder,
                                                              const torch::Tensor& patches) {
  if (patches.dim() != 5 || patches.size(1) != 36) {
    throw std::invalid_argument("expected patches shaped [N,36,3,p,p]");
  }
  const auto n = patches.size(0);
  auto flat = patches.reshape({n * 36, patches.size(2), patches.size(3), patches.size(4)});
  auto out = encoder.forward(flat);
  return {out.features.reshape({n, 36 * out.features.size(1)}),
          global_pool(out.tap).reshape({n, 36, -1})};
}

std::pair<torch::Tensor, torch::Tensor> encode_image(EncoderImpl& encoder, const Image& img) {
  torch::NoGradGuard no_grad;
  const bool was_training = encoder.is_training();
  encoder.eval();
  auto param = encoder.parameters().front();
  auto x = to_tensor(img).unsqueeze(0).to(param.dtype());
  auto out = encoder.forward(x);
  encoder.train(was_training);
  return {out.features.squeeze(0), out.tap.squeeze(0)};
}

}  // namespace sslus
