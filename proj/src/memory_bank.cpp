#include "sslus/memory_bank.hpp"

#include <numeric>
#include <sstream>
#include <stdexcept>

#include "sslus/encoder.hpp"
#include "sslus/errors.hpp"

namespace sslus {

MemoryBank::MemoryBank(std::vector<std::string> ids, torch::Tensor rows, double momentum)
    : ids_(std::move(ids)), momentum_(momentum) {
  if (ids_.empty()) throw std::invalid_argument("memory bank needs at least one entry");
  if (rows.dim() != 2 || rows.size(0) != static_cast<std::int64_t>(ids_.size())) {
    throw std::invalid_argument("memory bank rows do not match ids");
  }
  if (!(momentum >= 0.0 && momentum <= 1.0)) {
    throw std::invalid_argument("bank momentum must lie in [0,1]");
  }
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], static_cast<std::int64_t>(i)).second) {
      throw std::invalid_argument("duplicate image id in memory bank: " + ids_[i]);
    }
  }
  entries_ = l2_normalize(rows.detach().clone());
}

std::int64_t MemoryBank::row_index(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw LookupError("image id not in memory bank: " + id);
  return it->second;
}

torch::Tensor MemoryBank::row(const std::string& id) const { return entries_[row_index(id)]; }

void MemoryBank::update_ema(const std::string& id, const torch::Tensor& fresh) {
  const auto i = row_index(id);
  torch::NoGradGuard no_grad;
  auto mixed = momentum_ * entries_[i] + (1.0 - momentum_) * fresh.detach().to(entries_.dtype());
  entries_[i].copy_(l2_normalize(mixed));
}

void MemoryBank::assign(const std::string& id, const torch::Tensor& fresh) {
  const auto i = row_index(id);
  torch::NoGradGuard no_grad;
  entries_[i].copy_(l2_normalize(fresh.detach().to(entries_.dtype())));
}

std::vector<std::int64_t> MemoryBank::sample_negatives(const std::string& exclude, std::size_t k,
                                                       Rng& rng) const {
  const auto skip = row_index(exclude);
  if (k + 1 > ids_.size()) {
    throw std::invalid_argument("cannot draw " + std::to_string(k) + " negatives from a bank of " +
                                std::to_string(ids_.size()));
  }
  // Partial Fisher-Yates over every row except `skip`.
  std::vector<std::int64_t> pool;
  pool.reserve(ids_.size() - 1);
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(ids_.size()); ++i) {
    if (i != skip) pool.push_back(i);
  }
  for (std::size_t i = 0; i < k; ++i) {
    auto j = static_cast<std::size_t>(rng.integer(static_cast<std::int64_t>(i),
                                                  static_cast<std::int64_t>(pool.size()) - 1));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

torch::Tensor MemoryBank::gather(const std::vector<std::int64_t>& indices) const {
  auto idx = torch::tensor(indices, torch::kInt64);
  return entries_.index_select(0, idx);
}

void MemoryBank::save(torch::serialize::OutputArchive& archive) const {
  std::ostringstream joined;
  for (const auto& id : ids_) joined << id << '\n';
  archive.write("entries", entries_);
  archive.write("ids", c10::IValue(joined.str()));
  archive.write("momentum", c10::IValue(momentum_));
}

MemoryBank MemoryBank::load(torch::serialize::InputArchive& archive) {
  torch::Tensor entries;
  archive.read("entries", entries);
  c10::IValue ids_value, momentum_value;
  archive.read("ids", ids_value);
  archive.read("momentum", momentum_value);
  std::vector<std::string> ids;
  std::istringstream is(ids_value.toStringRef());
  for (std::string line; std::getline(is, line);) ids.push_back(line);
  MemoryBank bank(std::move(ids), entries, momentum_value.toDouble());
  bank.entries_ = entries.clone();  // keep stored rows bit-exact
  return bank;
}

MemoryBank init_bank(const std::vector<std::string>& ids,
                     const std::function<torch::Tensor(std::size_t)>& embed, double momentum) {
  if (ids.empty()) throw std::invalid_argument("cannot initialise a bank from an empty train set");
  std::vector<torch::Tensor> rows;
  rows.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) rows.push_back(embed(i).detach().reshape({-1}));
  return MemoryBank(ids, torch::stack(rows), momentum);
}

}  // namespace sslus
