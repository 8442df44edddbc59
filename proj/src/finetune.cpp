#include "sslus/finetune.hpp"

#include <cmath>
#include <map>
#include <numeric>

#include "sslus/errors.hpp"
#include "sslus/rng.hpp"

namespace sslus {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

double poly_lr(int epoch, const FinetuneConfig& cfg) {
  if (epoch < 0 || epoch > cfg.epochs) {
    throw std::invalid_argument("epoch " + std::to_string(epoch) + " outside [0, " +
                                std::to_string(cfg.epochs) + "]");
  }
  const double progress = 1.0 - static_cast<double>(epoch) / cfg.epochs;
  return (cfg.lr_start - cfg.lr_end) * std::pow(progress, cfg.power) + cfg.lr_end;
}

bool early_stop_check(const std::vector<double>& history, int warmup, int patience) {
  const int n = static_cast<int>(history.size());
  if (n <= warmup) return false;
  int best = 0;  // 1-based epoch of the first maximum
  double best_value = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    if (history[i] > best_value) {
      best_value = history[i];
      best = i + 1;
    }
  }
  return n - std::max(best, warmup) > patience;
}

// ---------------------------------------------------------------------------

UNetDecoderImpl::UNetDecoderImpl(const std::vector<std::int64_t>& stage_channels) {
  if (stage_channels.size() < 2) throw std::invalid_argument("decoder needs at least two stages");
  std::int64_t in = stage_channels.back();
  for (int i = static_cast<int>(stage_channels.size()) - 2; i >= 0; --i) {
    const std::int64_t out = stage_channels[i];
    auto conv = nn::Conv2d(nn::Conv2dOptions(in + out, out, 3).padding(1));
    fuse_.push_back(register_module("fuse" + std::to_string(fuse_.size()), conv));
    in = out;
  }
  head_conv_ = register_module("head_conv", nn::Conv2d(nn::Conv2dOptions(in, 16, 3).padding(1)));
  classifier_ = register_module("classifier", nn::Conv2d(nn::Conv2dOptions(16, 2, 1)));
}

torch::Tensor UNetDecoderImpl::forward(const std::vector<torch::Tensor>& stages,
                                       std::int64_t out_h, std::int64_t out_w) {
  auto up = [](const torch::Tensor& x, std::int64_t h, std::int64_t w) {
    return F::interpolate(x, F::InterpolateFuncOptions()
                                 .size(std::vector<std::int64_t>{h, w})
                                 .mode(torch::kBilinear)
                                 .align_corners(false));
  };
  torch::Tensor x = stages.back();
  for (std::size_t k = 0; k < fuse_.size(); ++k) {
    const auto& skip = stages[stages.size() - 2 - k];
    x = up(x, skip.size(2), skip.size(3));
    x = torch::relu(fuse_[k]->forward(torch::cat({x, skip}, 1)));
  }
  x = up(x, out_h, out_w);
  x = torch::relu(head_conv_->forward(x));
  return classifier_->forward(x);
}

SegmentationNetImpl::SegmentationNetImpl(Encoder encoder) : encoder_(std::move(encoder)) {
  register_module("encoder", encoder_);
  decoder_ = register_module("decoder", UNetDecoder(encoder_->stage_channels()));
}

torch::Tensor SegmentationNetImpl::forward(const torch::Tensor& x) {
  auto enc = encoder_->forward(x);
  return decoder_->forward(enc.stages, x.size(2), x.size(3));
}

// ---------------------------------------------------------------------------

namespace {

using StateDict = std::vector<std::pair<std::string, torch::Tensor>>;

StateDict snapshot(const nn::Module& m) {
  StateDict out;
  for (const auto& p : m.named_parameters()) out.emplace_back(p.key(), p.value().detach().clone());
  for (const auto& b : m.named_buffers()) out.emplace_back(b.key(), b.value().detach().clone());
  return out;
}

void restore(nn::Module& m, const StateDict& state) {
  torch::NoGradGuard no_grad;
  auto params = m.named_parameters();
  auto buffers = m.named_buffers();
  for (const auto& [name, value] : state) {
    if (auto* p = params.find(name)) {
      p->copy_(value);
    } else if (auto* b = buffers.find(name)) {
      b->copy_(value);
    }
  }
}

void copy_encoder(EncoderImpl& dst, const EncoderImpl& src) {
  auto state = snapshot(src);
  auto params = dst.named_parameters();
  for (const auto& [name, value] : state) {
    auto* p = params.find(name);
    auto* b = p ? nullptr : dst.named_buffers().find(name);
    if (!p && !b) throw ConfigError("initial encoder has unexpected tensor '" + name + "'");
    const auto& target = p ? *p : *b;
    if (target.sizes() != value.sizes()) {
      throw ConfigError("initial encoder tensor '" + name + "' has the wrong shape");
    }
  }
  restore(dst, state);
}

void require_masks(const std::vector<Sample>& samples, const char* split) {
  for (const auto& s : samples) {
    if (!s.mask) throw DataError(std::string(split) + " image '" + s.image.id + "' has no mask");
  }
}

torch::Tensor mask_batch(const std::vector<const Sample*>& batch) {
  std::vector<torch::Tensor> ts;
  for (const auto* s : batch) ts.push_back(to_tensor(*s->mask));
  return torch::stack(ts);
}

double mean_dsc(SegmentationNetImpl& model, const std::vector<Sample>& samples) {
  std::vector<Image> images;
  for (const auto& s : samples) images.push_back(s.image);
  auto preds = predict_masks(model, images);
  double total = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    total += overlap_metrics(preds[i], *samples[i].mask).dsc;
  }
  return total / static_cast<double>(samples.size());
}

}  // namespace

FinetuneResult finetune_segmentation(const std::vector<Sample>& train,
                                     const std::vector<Sample>& val, std::optional<Encoder> init,
                                     const FinetuneConfig& cfg) {
  cfg.validate();
  if (train.empty()) throw DataError("fine-tuning needs a non-empty train split");
  if (val.empty()) throw DataError("fine-tuning needs a non-empty validation split");
  require_masks(train, "train");
  require_masks(val, "val");

  torch::set_num_threads(cfg.threads);
  torch::manual_seed(cfg.seed);
  EncoderConfig enc_cfg = cfg.encoder;
  if (init) enc_cfg.pretrained_weights.reset();
  Encoder encoder = make_encoder(enc_cfg);
  if (init) copy_encoder(*encoder, **init);
  SegmentationNet model(encoder);

  torch::optim::Adam optimizer(model->parameters(), torch::optim::AdamOptions(cfg.lr_start));
  Rng rng(mix_seed(cfg.seed, 0xf1e7ULL));

  FinetuneResult result;
  result.encoder_config = enc_cfg;
  result.image_size = cfg.image_size;
  result.train_count = train.size();
  result.best_val_dsc = -1.0;
  StateDict best_state = snapshot(*model);
  std::vector<double> history;

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double lr = poly_lr(epoch - 1, cfg);
    for (auto& group : optimizer.param_groups()) {
      static_cast<torch::optim::AdamOptions&>(group.options()).lr(lr);
    }
    std::shuffle(order.begin(), order.end(), rng.engine());
    model->train();
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::vector<const Sample*> batch;
      std::vector<Image> images;
      for (std::size_t i = start; i < std::min(order.size(), start + cfg.batch_size); ++i) {
        batch.push_back(&train[order[i]]);
        images.push_back(train[order[i]].image);
      }
      auto logits = model->forward(batch_tensor(images));
      auto loss = F::cross_entropy(logits, mask_batch(batch));
      optimizer.zero_grad();
      loss.backward();
      optimizer.step();
      loss_sum += loss.item<double>();
      ++batches;
    }

    const double dsc = mean_dsc(*model, val);
    history.push_back(dsc);
    result.curve.push_back({epoch, lr, loss_sum / batches, dsc});
    if (dsc > result.best_val_dsc) {
      result.best_val_dsc = dsc;
      result.best_epoch = epoch;
      best_state = snapshot(*model);
    }
    if (early_stop_check(history, cfg.warmup, cfg.patience)) {
      result.stopped_early = true;
      break;
    }
  }
  restore(*model, best_state);
  model->eval();
  result.model = model;
  return result;
}

std::vector<Mask> predict_masks(SegmentationNetImpl& model, const std::vector<Image>& images) {
  torch::NoGradGuard no_grad;
  const bool was_training = model.is_training();
  model.eval();
  std::vector<Mask> out;
  constexpr std::size_t kChunk = 8;
  for (std::size_t start = 0; start < images.size(); start += kChunk) {
    std::vector<Image> chunk(images.begin() + start,
                             images.begin() + std::min(images.size(), start + kChunk));
    auto labels = model.forward(batch_tensor(chunk)).argmax(1).to(torch::kUInt8).contiguous();
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      Mask m(chunk[i].height, chunk[i].width, 0, chunk[i].id);
      auto plane = labels[static_cast<std::int64_t>(i)];
      std::copy(plane.data_ptr<std::uint8_t>(), plane.data_ptr<std::uint8_t>() + plane.numel(),
                m.pixels.begin());
      out.push_back(std::move(m));
    }
  }
  model.train(was_training);
  return out;
}

MetricsReport evaluate_model(SegmentationNetImpl& model, const std::vector<Sample>& test) {
  if (test.empty()) throw std::invalid_argument("evaluation needs a non-empty test set");
  require_masks(test, "test");
  std::vector<Image> images;
  for (const auto& s : test) images.push_back(s.image);
  auto preds = predict_masks(model, images);
  MetricsReport report;
  for (std::size_t i = 0; i < test.size(); ++i) {
    report.add(score_image(test[i].image.id, preds[i], *test[i].mask));
  }
  report.finalize();
  return report;
}

void save_segmentation_model(const std::filesystem::path& path, const FinetuneResult& result) {
  torch::serialize::OutputArchive root;
  torch::serialize::OutputArchive model;
  result.model->save(model);
  root.write("model", model);
  nlohmann::json meta;
  meta["architecture"] = to_string(result.encoder_config.architecture);
  meta["perceptual_tap_layer"] = result.encoder_config.resolved_tap_layer();
  meta["image_size"] = result.image_size;
  meta["best_epoch"] = result.best_epoch;
  meta["best_val_dsc"] = result.best_val_dsc;
  root.write("config_json", c10::IValue(meta.dump()));
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  root.save_to(path.string());
}

LoadedSegmentationModel load_segmentation_model(const std::filesystem::path& path) {
  torch::serialize::InputArchive root;
  try {
    root.load_from(path.string());
  } catch (const std::exception& e) {
    throw ConfigError("cannot read model " + path.string() + ": " + e.what());
  }
  c10::IValue meta_value;
  root.read("config_json", meta_value);
  auto meta = nlohmann::json::parse(meta_value.toStringRef());
  LoadedSegmentationModel out;
  out.encoder_config.architecture = parse_architecture(meta.at("architecture").get<std::string>());
  out.encoder_config.perceptual_tap_layer = meta.at("perceptual_tap_layer").get<int>();
  out.image_size = meta.at("image_size").get<int>();
  out.model = SegmentationNet(make_encoder(out.encoder_config));
  torch::serialize::InputArchive model;
  root.read("model", model);
  out.model->load(model);
  out.model->eval();
  return out;
}

}  // namespace sslus
