#pragma once

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include <torch/torch.h>

#include "sslus/rng.hpp"

namespace sslus {

/// One unit-norm 128-d row per training image, refreshed by an exponential
/// moving average whenever that image is seen.
class MemoryBank {
 public:
  static constexpr double kDefaultMomentum = 0.5;

  MemoryBank() = default;
  /// rows: [N,D], renormalised on entry. ids must be unique.
  MemoryBank(std::vector<std::string> ids, torch::Tensor rows, double momentum = kDefaultMomentum);

  std::size_t size() const { return ids_.size(); }
  double momentum() const { return momentum_; }
  const std::vector<std::string>& ids() const { return ids_; }
  const torch::Tensor& entries() const { return entries_; }

  /// Throws LookupError for unknown ids.
  std::int64_t row_index(const std::string& id) const;
  torch::Tensor row(const std::string& id) const;

  /// row <- normalize(m·row + (1−m)·fresh).
  void update_ema(const std::string& id, const torch::Tensor& fresh);
  /// Replaces a row outright (used by the full-recompute mode).
  void assign(const std::string& id, const torch::Tensor& fresh);

  /// k distinct row indices drawn uniformly, never `exclude`. Requires k <= N-1.
  std::vector<std::int64_t> sample_negatives(const std::string& exclude, std::size_t k,
                                             Rng& rng) const;
  /// Rows for the given indices, [k,D].
  torch::Tensor gather(const std::vector<std::int64_t>& indices) const;

  void save(torch::serialize::OutputArchive& archive) const;
  static MemoryBank load(torch::serialize::InputArchive& archive);

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::int64_t> index_;
  torch::Tensor entries_;
  double momentum_ = kDefaultMomentum;
};

/// Builds the bank from one embedding per image. `embed(i)` returns the
/// (unit-norm) embedding of image i.
MemoryBank init_bank(const std::vector<std::string>& ids,
                     const std::function<torch::Tensor(std::size_t)>& embed,
                     double momentum = MemoryBank::kDefaultMomentum);

}  // namespace sslus
