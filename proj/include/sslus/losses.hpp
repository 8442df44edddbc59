#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <torch/torch.h>

namespace sslus {

/// Scores a pair of embeddings from their element-wise product:
/// sigmoid(W2 · relu(W1 · (a ⊙ b) + b1) + b2), 128 -> 64 -> 1.
class RelationNetworkImpl : public torch::nn::Module {
 public:
  explicit RelationNetworkImpl(std::int64_t input = 128, std::int64_t hidden = 64);
  /// a, b: [..., 128] -> scores [...] in (0,1).
  torch::Tensor forward(const torch::Tensor& a, const torch::Tensor& b);

  torch::nn::Linear layer1{nullptr};
  torch::nn::Linear layer2{nullptr};
};
TORCH_MODULE(RelationNetwork);

double relation_score(RelationNetworkImpl& net, const torch::Tensor& a, const torch::Tensor& b);

/// Mean over anchors of (s⁺−1)² + mean_k (s⁻_k)².
/// pos: [N], neg: [N,k].
torch::Tensor rcl_loss(const torch::Tensor& pos, const torch::Tensor& neg);
double rcl_loss(const std::vector<double>& pos, const std::vector<std::vector<double>>& neg);

/// w·image + (1−w)·patch; w must lie in [0,1].
torch::Tensor total_rcl(const torch::Tensor& image, const torch::Tensor& patch, double w);
double total_rcl(double image, double patch, double w);

/// Softmax cross-entropy of the positive against k negatives on cosine
/// similarities scaled by 1/τ, averaged over anchors.
/// anchor, positive: [N,D]; negatives: [N,k,D].
torch::Tensor nce_loss(const torch::Tensor& anchor, const torch::Tensor& positive,
                       const torch::Tensor& negatives, double temperature);
double nce_loss(const std::vector<double>& anchor, const std::vector<double>& positive,
                const std::vector<std::vector<double>>& negatives, double temperature);

/// Mean over the 36 patches (and over anchors) of the element-mean squared
/// difference between image and patch tap features.
/// image_tap: [N,D]; patch_taps: [N,36,D].
torch::Tensor perceptual_loss(const torch::Tensor& image_tap, const torch::Tensor& patch_taps);
double perceptual_loss(const std::vector<double>& image_tap,
                       const std::vector<std::vector<double>>& patch_taps);

/// λ·contrastive + (1−λ)·perceptual; λ must lie in [0,1].
torch::Tensor combined_loss(const torch::Tensor& contrastive, const torch::Tensor& perceptual,
                            double lambda);
double combined_loss(double contrastive, double perceptual, double lambda);

enum class Method { Pirl, PirlPercep, Rcl, RclPercep };

std::string to_string(Method m);
Method parse_method(const std::string& s);
bool uses_rcl(Method m);
bool uses_perceptual(Method m);
/// 0.1 for rcl_percep, 0.75 for pirl_percep, 1 otherwise.
double default_lambda(Method m);

inline constexpr double kDefaultPatchWeight = 0.5;  // w
inline constexpr double kDefaultTemperature = 0.07;

struct LossReport {
  int epoch = 0;
  int step = 0;
  std::optional<double> rcl_image;
  std::optional<double> rcl_patch;
  std::optional<double> rcl_total;
  std::optional<double> perceptual;
  std::optional<double> nce_total;
  double combined = 0.0;
  double w = kDefaultPatchWeight;
  double lambda = 1.0;

  static const char* csv_header();
  void write_csv(std::ostream& os) const;
};

}  // namespace sslus
