#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>
#include "sslus/encoder.hpp"
#include "sslus/losses.hpp"
#include "sslus/photometric.hpp"

namespace sslus {

enum class Profile { Desk, Full };
std::string to_string(Profile p);
Profile parse_profile(const std::string& s);

enum class PretextTask { Jigsaw, JigsawFreq, CrossPatch, CrossPatchFreq };
std::string to_string(PretextTask t);
PretextTask parse_pretext_task(const std::string& s);
bool uses_frequency(PretextTask t);
bool uses_crosspatch(PretextTask t);

/// Learning rates explored for the pretext SGD optimiser.
inline constexpr double kPretextLrGrid[] = {0.05, 0.01, 0.005, 0.001, 0.0005, 0.0001};

struct PretextConfig {
  Profile profile = Profile::Desk;
  EncoderConfig encoder;
  int image_size = 96;
  int epochs = 50;
  double lr = 0.001;
  double momentum = 0.9;
  double weight_decay = 0.0;
  int batch_size = 8;
  Method method = Method::RclPercep;
  PretextTask pretext_task = PretextTask::CrossPatchFreq;
  std::uint64_t seed = 42;
  double lambda = 0.1;
  double w = kDefaultPatchWeight;
  int negatives_per_anchor = 8;
  double temperature = kDefaultTemperature;
  double bank_momentum = 0.5;
  bool bank_full_recompute = false;
  bool crosspatch_literal = false;
  JitterSpec jitter;
  int threads = 1;
  int workers = 1;

  /// Profile defaults; λ follows the method.
  static PretextConfig for_profile(Profile p, Method m = Method::RclPercep);
  void validate() const;
  nlohmann::json to_json() const;
  /// Applies the keys present in `j` on top of *this. Unknown keys or wrong
  /// types raise ConfigError.
  void merge_json(const nlohmann::json& j);
};

struct FinetuneConfig {
  Profile profile = Profile::Desk;
  EncoderConfig encoder;
  int image_size = 96;
  int epochs = 60;
  double lr_start = 1e-3;
  double lr_end = 1e-6;
  double power = 0.9;
  int batch_size = 8;
  int warmup = 30;
  int patience = 15;
  double train_fraction = 1.0;
  std::uint64_t seed = 42;
  int threads = 1;

  static FinetuneConfig for_profile(Profile p);
  void validate() const;
  nlohmann::json to_json() const;
  void merge_json(const nlohmann::json& j);
};

/// Reads a JSON object from disk (ConfigError on failure).
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace sslus
