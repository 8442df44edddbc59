#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include <torch/torch.h>

#include "sslus/config.hpp"
#include "sslus/data.hpp"
#include "sslus/encoder.hpp"
#include "sslus/jigsaw.hpp"
#include "sslus/losses.hpp"
#include "sslus/memory_bank.hpp"

namespace sslus {

/// Trainable parts of the pretext model.
struct PretextNetworks {
  Encoder encoder;
  ProjectionHead head_f{nullptr};  // image level
  ProjectionHead head_g{nullptr};  // concatenated patches
  RelationNetwork relation{nullptr};  // only for RCL methods

  static PretextNetworks create(const EncoderConfig& cfg, bool with_relation);
  std::vector<torch::Tensor> parameters() const;
  void to(torch::Dtype dtype);
  void train(bool on);
};

/// The two views of one training image.
struct PretextViews {
  Image t1;                    // flips + jitter of the whole image
  std::vector<Image> patches;  // 36 transformed, jittered, encoder-sized patches
};

/// Builds both views of `image` from its own stream.
PretextViews make_pretext_views(const Image& image, const PretextConfig& cfg, Rng& rng);

struct PretextObjective {
  torch::Tensor loss;       // scalar, differentiable
  torch::Tensor image_embedding;  // v_t1, [N,128]
  LossReport report;
};

/// Full pretext objective for one batch.
///   images:    [N,3,H,W] t1 views
///   patches:   [N,36,3,p,p] patch views
///   positives: [N,128] bank rows of the same images
///   negatives: [N,k,128] bank rows of other images
PretextObjective pretext_objective(PretextNetworks& nets, const torch::Tensor& images,
                                   const torch::Tensor& patches, const torch::Tensor& positives,
                                   const torch::Tensor& negatives, const PretextConfig& cfg);

/// Pretext training state. Everything needed to resume lives here and in
/// the checkpoint archive.
class PretextTrainer {
 public:
  using LogFn = std::function<void(const LossReport&)>;

  /// Initialises networks (seeded) and the memory bank from `train`.
  PretextTrainer(PretextConfig cfg, std::vector<Sample> train);

  /// Runs epochs until `cfg.epochs` (or `until_epoch` if given).
  void run(const LogFn& log = {}, std::optional<int> until_epoch = {});
  /// One epoch; returns its loss reports.
  std::vector<LossReport> run_epoch(const LogFn& log = {});

  int epoch() const { return epoch_; }
  const PretextConfig& config() const { return cfg_; }
  PretextNetworks& networks() { return nets_; }
  const MemoryBank& bank() const { return bank_; }

  /// Archive with entries encoder, head_f, head_g, relation_net, memory_bank,
  /// optimizer, epoch, config_json, rng_state.
  void save_checkpoint(const std::filesystem::path& path) const;
  static PretextTrainer load_checkpoint(const std::filesystem::path& path,
                                        std::vector<Sample> train);

 private:
  PretextTrainer(PretextConfig cfg, std::vector<Sample> train, bool init_bank);
  void build_optimizer();
  void initialise_bank(std::uint64_t stream_epoch);
  torch::Tensor embed_t1(const std::vector<std::size_t>& indices, std::uint64_t stream_epoch);

  PretextConfig cfg_;
  std::vector<Sample> train_;
  PretextNetworks nets_;
  MemoryBank bank_;
  std::unique_ptr<torch::optim::SGD> optimizer_;
  int epoch_ = 0;
  Rng rng_;
};

/// Convenience wrapper: trains from scratch and writes the per-step loss CSV.
PretextTrainer pretext_train(const std::vector<Sample>& train, const PretextConfig& cfg,
                             std::ostream* loss_csv = nullptr);

struct LoadedEncoder {
  Encoder encoder;
  EncoderConfig config;
};

/// Reads only the encoder of a pretext checkpoint.
LoadedEncoder load_pretext_encoder(const std::filesystem::path& checkpoint);

}  // namespace sslus
