#include "sslus/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "sslus/errors.hpp"

namespace sslus {

using nlohmann::json;

std::string to_string(Profile p) { return p == Profile::Desk ? "desk" : "full"; }

Profile parse_profile(const std::string& s) {
  if (s == "desk") return Profile::Desk;
  if (s == "full") return Profile::Full;
  throw ConfigError("unknown profile '" + s + "'");
}

std::string to_string(PretextTask t) {
  switch (t) {
    case PretextTask::Jigsaw: return "jigsaw";
    case PretextTask::JigsawFreq: return "jigsaw_freq";
    case PretextTask::CrossPatch: return "crosspatch";
    case PretextTask::CrossPatchFreq: return "crosspatch_freq";
  }
  return "jigsaw";
}

PretextTask parse_pretext_task(const std::string& s) {
  if (s == "jigsaw") return PretextTask::Jigsaw;
  if (s == "jigsaw_freq") return PretextTask::JigsawFreq;
  if (s == "crosspatch") return PretextTask::CrossPatch;
  if (s == "crosspatch_freq") return PretextTask::CrossPatchFreq;
  throw ConfigError("unknown pretext task '" + s + "'");
}

bool uses_frequency(PretextTask t) {
  return t == PretextTask::JigsawFreq || t == PretextTask::CrossPatchFreq;
}

bool uses_crosspatch(PretextTask t) {
  return t == PretextTask::CrossPatch || t == PretextTask::CrossPatchFreq;
}

namespace {

// Best learning rate per method from the pretext tuning sweep.
double tuned_lr(Method m) {
  switch (m) {
    case Method::Pirl: return 0.0001;
    case Method::PirlPercep: return 0.0005;
    case Method::Rcl: return 0.01;
    case Method::RclPercep: return 0.001;
  }
  return 0.001;
}

template <typename T>
void read_key(const json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

void check_keys(const json& j, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) throw ConfigError("unknown config key '" + it.key() + "'");
  }
}

void merge_encoder(const json& j, EncoderConfig& enc) {
  std::string arch = to_string(enc.architecture);
  read_key(j, "architecture", arch);
  enc.architecture = parse_architecture(arch);
  read_key(j, "perceptual_tap_layer", enc.perceptual_tap_layer);
  if (j.contains("pretrained_weights")) {
    if (j["pretrained_weights"].is_null()) {
      enc.pretrained_weights.reset();
    } else {
      std::string p;
      read_key(j, "pretrained_weights", p);
      enc.pretrained_weights = p;
    }
  }
}

void encoder_json(json& j, const EncoderConfig& enc) {
  j["architecture"] = to_string(enc.architecture);
  j["perceptual_tap_layer"] = enc.resolved_tap_layer();
  j["pretrained_weights"] =
      enc.pretrained_weights ? json(enc.pretrained_weights->string()) : json(nullptr);
}

}  // namespace

PretextConfig PretextConfig::for_profile(Profile p, Method m) {
  PretextConfig c;
  c.profile = p;
  c.method = m;
  c.lambda = default_lambda(m);
  c.lr = tuned_lr(m);
  if (p == Profile::Full) {
    c.encoder.architecture = Architecture::ReferenceResNet50;
    c.image_size = 224;
    c.epochs = 2000;
    c.batch_size = 16;
    c.negatives_per_anchor = 4096;
  }
  return c;
}

void PretextConfig::validate() const {
  bool on_grid = false;
  for (double g : kPretextLrGrid) on_grid |= std::abs(lr - g) <= 1e-12 * g;
  if (!on_grid) throw ConfigError("lr " + std::to_string(lr) + " is not on the tuning grid");
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (image_size < 32) throw ConfigError("image_size must be >= 32");
  if (!(lambda >= 0 && lambda <= 1)) throw ConfigError("lambda must lie in [0,1]");
  if (!(w >= 0 && w <= 1)) throw ConfigError("w must lie in [0,1]");
  if (negatives_per_anchor < 1) throw ConfigError("negatives_per_anchor must be >= 1");
  if (!(temperature > 0)) throw ConfigError("temperature must be positive");
  if (!(bank_momentum >= 0 && bank_momentum <= 1)) throw ConfigError("bank_momentum must lie in [0,1]");
  if (momentum < 0 || weight_decay < 0) throw ConfigError("momentum/weight_decay must be >= 0");
  if (threads < 1 || workers < 1) throw ConfigError("threads/workers must be >= 1");
  try {
    jitter.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

json PretextConfig::to_json() const {
  json j;
  j["profile"] = to_string(profile);
  encoder_json(j, encoder);
  j["image_size"] = image_size;
  j["epochs"] = epochs;
  j["lr"] = lr;
  j["momentum"] = momentum;
  j["weight_decay"] = weight_decay;
  j["batch_size"] = batch_size;
  j["method"] = to_string(method);
  j["pretext_task"] = to_string(pretext_task);
  j["seed"] = seed;
  j["lambda"] = lambda;
  j["w"] = w;
  j["negatives_per_anchor"] = negatives_per_anchor;
  j["temperature"] = temperature;
  j["bank_momentum"] = bank_momentum;
  j["bank_full_recompute"] = bank_full_recompute;
  j["crosspatch_literal"] = crosspatch_literal;
  j["brightness"] = jitter.brightness;
  j["contrast"] = jitter.contrast;
  j["saturation"] = jitter.saturation;
  j["hue"] = jitter.hue;
  j["flip_prob"] = jitter.flip_prob;
  j["threads"] = threads;
  j["workers"] = workers;
  return j;
}

void PretextConfig::merge_json(const json& j) {
  check_keys(j, {"profile", "architecture", "perceptual_tap_layer", "pretrained_weights",
                 "image_size", "epochs", "lr", "momentum", "weight_decay", "batch_size", "method",
                 "pretext_task", "seed", "lambda", "w", "negatives_per_anchor", "temperature",
                 "bank_momentum", "bank_full_recompute", "crosspatch_literal", "brightness",
                 "contrast", "saturation", "hue", "flip_prob", "threads", "workers"});
  std::string s;
  if (j.contains("profile")) {
    read_key(j, "profile", s);
    profile = parse_profile(s);
  }
  merge_encoder(j, encoder);
  read_key(j, "image_size", image_size);
  read_key(j, "epochs", epochs);
  read_key(j, "lr", lr);
  read_key(j, "momentum", momentum);
  read_key(j, "weight_decay", weight_decay);
  read_key(j, "batch_size", batch_size);
  if (j.contains("method")) {
    read_key(j, "method", s);
    method = parse_method(s);
  }
  if (j.contains("pretext_task")) {
    read_key(j, "pretext_task", s);
    pretext_task = parse_pretext_task(s);
  }
  read_key(j, "seed", seed);
  read_key(j, "lambda", lambda);
  read_key(j, "w", w);
  read_key(j, "negatives_per_anchor", negatives_per_anchor);
  read_key(j, "temperature", temperature);
  read_key(j, "bank_momentum", bank_momentum);
  read_key(j, "bank_full_recompute", bank_full_recompute);
  read_key(j, "crosspatch_literal", crosspatch_literal);
  read_key(j, "brightness", jitter.brightness);
  read_key(j, "contrast", jitter.contrast);
  read_key(j, "saturation", jitter.saturation);
  read_key(j, "hue", jitter.hue);
  read_key(j, "flip_prob", jitter.flip_prob);
  read_key(j, "threads", threads);
  read_key(j, "workers", workers);
}

FinetuneConfig FinetuneConfig::for_profile(Profile p) {
  FinetuneConfig c;
  c.profile = p;
  if (p == Profile::Full) {
    c.encoder.architecture = Architecture::ReferenceResNet50;
    c.image_size = 224;
    c.epochs = 500;
    c.batch_size = 16;
    c.warmup = 100;
    c.patience = 50;
  }
  return c;
}

void FinetuneConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (warmup >= epochs) throw ConfigError("warmup must be smaller than epochs");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (image_size < 32) throw ConfigError("image_size must be >= 32");
  if (!(lr_start > 0 && lr_end > 0 && lr_end <= lr_start)) {
    throw ConfigError("need 0 < lr_end <= lr_start");
  }
  if (!(power > 0)) throw ConfigError("power must be positive");
  if (!(train_fraction > 0 && train_fraction <= 1)) throw ConfigError("train_fraction must lie in (0,1]");
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

json FinetuneConfig::to_json() const {
  json j;
  j["profile"] = to_string(profile);
  encoder_json(j, encoder);
  j["image_size"] = image_size;
  j["epochs"] = epochs;
  j["lr_start"] = lr_start;
  j["lr_end"] = lr_end;
  j["power"] = power;
  j["batch_size"] = batch_size;
  j["warmup"] = warmup;
  j["patience"] = patience;
  j["train_fraction"] = train_fraction;
  j["seed"] = seed;
  j["threads"] = threads;
  return j;
}

void FinetuneConfig::merge_json(const json& j) {
  check_keys(j, {"profile", "architecture", "perceptual_tap_layer", "pretrained_weights",
                 "image_size", "epochs", "lr_start", "lr_end", "power", "batch_size", "warmup",
                 "patience", "train_fraction", "seed", "threads"});
  if (j.contains("profile")) {
    std::string s;
    read_key(j, "profile", s);
    profile = parse_profile(s);
  }
  merge_encoder(j, encoder);
  read_key(j, "image_size", image_size);
  read_key(j, "epochs", epochs);
  read_key(j, "lr_start", lr_start);
  read_key(j, "lr_end", lr_end);
  read_key(j, "power", power);
  read_key(j, "batch_size", batch_size);
  read_key(j, "warmup", warmup);
  read_key(j, "patience", patience);
  read_key(j, "train_fraction", train_fraction);
  read_key(j, "seed", seed);
  read_key(j, "threads", threads);
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace sslus
