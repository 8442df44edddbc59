#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include <torch/torch.h>

#include "sslus/config.hpp"
#include "sslus/data.hpp"
#include "sslus/encoder.hpp"
#include "sslus/metrics.hpp"

namespace sslus {

/// (start − end)·(1 − epoch/epochs)^power + end, for 0 <= epoch <= epochs.
double poly_lr(int epoch, const FinetuneConfig& cfg);

/// `history` holds one validation DSC per epoch. Returns true once the run is
/// past `warmup` epochs and more than `patience` epochs have passed since the
/// later of the best epoch and the end of warmup.
bool early_stop_check(const std::vector<double>& history, int warmup, int patience);

/// U-shaped decoder over the encoder stages: upsample ×2, concatenate the
/// matching skip, 3×3 conv + ReLU; a final upsample to input resolution and a
/// 1×1 conv to two logits.
class UNetDecoderImpl : public torch::nn::Module {
 public:
  explicit UNetDecoderImpl(const std::vector<std::int64_t>& stage_channels);
  torch::Tensor forward(const std::vector<torch::Tensor>& stages, std::int64_t out_h,
                        std::int64_t out_w);

 private:
  std::vector<torch::nn::Conv2d> fuse_;
  torch::nn::Conv2d head_conv_{nullptr};
  torch::nn::Conv2d classifier_{nullptr};
};
TORCH_MODULE(UNetDecoder);

class SegmentationNetImpl : public torch::nn::Module {
 public:
  explicit SegmentationNetImpl(Encoder encoder);
  /// [B,3,H,W] -> logits [B,2,H,W].
  torch::Tensor forward(const torch::Tensor& x);
  Encoder encoder() const { return encoder_; }

 private:
  Encoder encoder_;
  UNetDecoder decoder_{nullptr};
};
TORCH_MODULE(SegmentationNet);

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_dsc = 0.0;
};

struct FinetuneResult {
  SegmentationNet model{nullptr};  // weights of the best validation epoch
  EncoderConfig encoder_config;
  int image_size = 0;
  int best_epoch = 0;
  double best_val_dsc = 0.0;
  std::vector<EpochRecord> curve;
  bool stopped_early = false;
  std::size_t train_count = 0;
};

/// Trains encoder + decoder end to end with pixel-wise cross-entropy, Adam
/// and the polynomial schedule. `init` seeds the encoder (none = supervised
/// baseline). Train and val samples must all carry masks.
FinetuneResult finetune_segmentation(const std::vector<Sample>& train,
                                     const std::vector<Sample>& val, std::optional<Encoder> init,
                                     const FinetuneConfig& cfg);

/// Argmax masks for each image.
std::vector<Mask> predict_masks(SegmentationNetImpl& model, const std::vector<Image>& images);

/// Per-image metrics over argmax predictions plus mean and population SD.
MetricsReport evaluate_model(SegmentationNetImpl& model, const std::vector<Sample>& test);

void save_segmentation_model(const std::filesystem::path& path, const FinetuneResult& result);

struct LoadedSegmentationModel {
  SegmentationNet model{nullptr};
  EncoderConfig encoder_config;
  int image_size = 0;
};
LoadedSegmentationModel load_segmentation_model(const std::filesystem::path& path);

}  // namespace sslus
