#include "sslus/pretext.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include "sslus/errors.hpp"
#include "sslus/frequency.hpp"
#include "sslus/photometric.hpp"

namespace sslus {

PretextNetworks PretextNetworks::create(const EncoderConfig& cfg, bool with_relation) {
  PretextNetworks n;
  n.encoder = make_encoder(cfg);
  const auto d = n.encoder->feature_dim();
  n.head_f = ProjectionHead(d);
  n.head_g = ProjectionHead(kPatchCount * d);
  if (with_relation) n.relation = RelationNetwork(kEmbeddingDim, 64);
  return n;
}

std::vector<torch::Tensor> PretextNetworks::parameters() const {
  std::vector<torch::Tensor> out = encoder->parameters();
  for (auto& p : head_f->parameters()) out.push_back(p);
  for (auto& p : head_g->parameters()) out.push_back(p);
  if (relation) {
    for (auto& p : relation->parameters()) out.push_back(p);
  }
  return out;
}

void PretextNetworks::to(torch::Dtype dtype) {
  encoder->to(dtype);
  head_f->to(dtype);
  head_g->to(dtype);
  if (relation) relation->to(dtype);
}

void PretextNetworks::train(bool on) {
  encoder->train(on);
  head_f->train(on);
  head_g->train(on);
  if (relation) relation->train(on);
}

PretextViews make_pretext_views(const Image& image, const PretextConfig& cfg, Rng& rng) {
  PretextViews views;
  views.t1 = apply_t1(image, cfg.jitter, rng);

  const Rect rect = sample_crop_rect(image.height, image.width, rng);
  Image source = image;
  if (uses_frequency(cfg.pretext_task)) {
    source = apply_frequency_filter(image, sample_filter_spec(rng), rect).image;
  }
  PatchBundle bundle = partition_grid(resize_image(crop(source, rect), kCropSide, kCropSide));
  if (uses_crosspatch(cfg.pretext_task)) {
    const PatchLayout layout = select_focal_sets(rng);
    bundle = transform_crosspatch(
        bundle, layout, rng,
        cfg.crosspatch_literal ? CrossPatchMode::Literal : CrossPatchMode::Positional);
  } else {
    bundle = transform_jigsaw_baseline(bundle, rng);
  }
  const int side = cfg.encoder.patch_size();
  views.patches = apply_t2_patch_jitter(bundle.patches, cfg.jitter, rng);
  for (auto& p : views.patches) p = resize_image(p, side, side);
  return views;
}

PretextObjective pretext_objective(PretextNetworks& nets, const torch::Tensor& images,
                                   const torch::Tensor& patches, const torch::Tensor& positives,
                                   const torch::Tensor& negatives, const PretextConfig& cfg) {
  PretextObjective out;
  const auto image_out = nets.encoder->forward(images);
  const auto v_img = nets.head_f->forward(image_out.features);
  auto [patch_features, patch_taps] = encode_patches_concat(*nets.encoder, patches);
  const auto v_patch = nets.head_g->forward(patch_features);

  torch::Tensor contrastive;
  if (uses_rcl(cfg.method)) {
    if (!nets.relation) throw std::logic_error("RCL method without a relation network");
    auto scores = [&](const torch::Tensor& v) {
      auto pos = nets.relation->forward(v, positives);
      auto neg = nets.relation->forward(v.unsqueeze(1).expand_as(negatives), negatives);
      return rcl_loss(pos, neg);
    };
    auto rcl_img = scores(v_img);
    auto rcl_patch = scores(v_patch);
    contrastive = total_rcl(rcl_img, rcl_patch, cfg.w);
    out.report.rcl_image = rcl_img.item<double>();
    out.report.rcl_patch = rcl_patch.item<double>();
    out.report.rcl_total = contrastive.item<double>();
  } else {
    auto nce_img = nce_loss(v_img, positives, negatives, cfg.temperature);
    auto nce_patch = nce_loss(v_patch, positives, negatives, cfg.temperature);
    contrastive = cfg.w * nce_img + (1.0 - cfg.w) * nce_patch;
    out.report.nce_total = contrastive.item<double>();
  }

  if (uses_perceptual(cfg.method)) {
    auto perc = perceptual_loss(global_pool(image_out.tap), patch_taps);
    out.report.perceptual = perc.item<double>();
    out.loss = combined_loss(contrastive, perc, cfg.lambda);
    out.report.lambda = cfg.lambda;
  } else {
    out.loss = contrastive;
    out.report.lambda = 1.0;
  }
  out.report.w = cfg.w;
  out.report.combined = out.loss.item<double>();
  out.image_embedding = v_img;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::uint64_t kInitStream = 0;

template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t w = std::min<std::size_t>(workers, n);
  std::vector<std::exception_ptr> errors(w);
  for (std::size_t t = 0; t < w; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += w) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

Rng sample_stream(const PretextConfig& cfg, std::uint64_t epoch, const std::string& id) {
  return derive_stream(cfg.seed, epoch, hash_string(id));
}

}  // namespace

PretextTrainer::PretextTrainer(PretextConfig cfg, std::vector<Sample> train)
    : PretextTrainer(std::move(cfg), std::move(train), true) {}

PretextTrainer::PretextTrainer(PretextConfig cfg, std::vector<Sample> train, bool init_bank)
    : cfg_(std::move(cfg)), train_(std::move(train)), rng_(mix_seed(cfg_.seed, 0x7a11ULL)) {
  cfg_.validate();
  if (train_.empty()) throw std::invalid_argument("pretext training needs a non-empty train split");
  if (train_.size() < 2) throw DataError("pretext training needs at least 2 images for negatives");
  for (auto& s : train_) {
    if (s.image.height != cfg_.image_size || s.image.width != cfg_.image_size) {
      s.image = resize_image(s.image, cfg_.image_size, cfg_.image_size);
    }
  }
  torch::set_num_threads(cfg_.threads);
  torch::manual_seed(cfg_.seed);
  nets_ = PretextNetworks::create(cfg_.encoder, uses_rcl(cfg_.method));
  build_optimizer();
  if (init_bank) initialise_bank(kInitStream);
}

void PretextTrainer::build_optimizer() {
  optimizer_ = std::make_unique<torch::optim::SGD>(
      nets_.parameters(),
      torch::optim::SGDOptions(cfg_.lr).momentum(cfg_.momentum).weight_decay(cfg_.weight_decay));
}

torch::Tensor PretextTrainer::embed_t1(const std::vector<std::size_t>& indices,
                                       std::uint64_t stream_epoch) {
  std::vector<Image> views(indices.size());
  parallel_for(indices.size(), cfg_.workers, [&](std::size_t j) {
    const auto& img = train_[indices[j]].image;
    Rng r = sample_stream(cfg_, stream_epoch, img.id);
    views[j] = apply_t1(img, cfg_.jitter, r);
  });
  auto out = nets_.encoder->forward(batch_tensor(views));
  return nets_.head_f->forward(out.features);
}

void PretextTrainer::initialise_bank(std::uint64_t stream_epoch) {
  torch::NoGradGuard no_grad;
  nets_.train(false);
  std::vector<std::string> ids;
  std::vector<torch::Tensor> rows;
  for (std::size_t start = 0; start < train_.size(); start += cfg_.batch_size) {
    std::vector<std::size_t> idx;
    for (std::size_t i = start; i < std::min(train_.size(), start + cfg_.batch_size); ++i) {
      idx.push_back(i);
      ids.push_back(train_[i].image.id);
    }
    rows.push_back(embed_t1(idx, stream_epoch));
  }
  nets_.train(true);
  auto all = torch::cat(rows);
  if (bank_.size() == 0) {
    bank_ = MemoryBank(ids, all, cfg_.bank_momentum);
  } else {
    for (std::size_t i = 0; i < ids.size(); ++i) bank_.assign(ids[i], all[i]);
  }
}

std::vector<LossReport> PretextTrainer::run_epoch(const LogFn& log) {
  ++epoch_;
  const auto stream_epoch = static_cast<std::uint64_t>(epoch_);
  if (cfg_.bank_full_recompute && epoch_ > 1) initialise_bank(stream_epoch);

  std::vector<std::size_t> order(train_.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng_.engine());

  const std::size_t k =
      std::min<std::size_t>(static_cast<std::size_t>(cfg_.negatives_per_anchor), train_.size() - 1);
  std::vector<LossReport> reports;
  int step = 0;
  for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
    const std::size_t end = std::min(order.size(), start + cfg_.batch_size);
    const std::size_t b = end - start;

    std::vector<PretextViews> views(b);
    parallel_for(b, cfg_.workers, [&](std::size_t j) {
      const auto& img = train_[order[start + j]].image;
      Rng r = sample_stream(cfg_, stream_epoch, img.id);
      views[j] = make_pretext_views(img, cfg_, r);
    });

    std::vector<Image> t1s;
    std::vector<torch::Tensor> patch_sets;
    std::vector<std::int64_t> pos_rows;
    std::vector<torch::Tensor> neg_sets;
    for (std::size_t j = 0; j < b; ++j) {
      const auto& id = train_[order[start + j]].image.id;
      t1s.push_back(std::move(views[j].t1));
      patch_sets.push_back(batch_tensor(views[j].patches));
      pos_rows.push_back(bank_.row_index(id));
      neg_sets.push_back(bank_.gather(bank_.sample_negatives(id, k, rng_)));
    }
    auto images = batch_tensor(t1s);
    auto patches = torch::stack(patch_sets);
    auto positives = bank_.gather(pos_rows);
    auto negatives = torch::stack(neg_sets);

    auto objective = pretext_objective(nets_, images, patches, positives, negatives, cfg_);
    if (!std::isfinite(objective.report.combined)) {
      std::ostringstream ids;
      for (std::size_t j = 0; j < b; ++j) ids << ' ' << train_[order[start + j]].image.id;
      throw NumericalError("non-finite pretext loss at epoch " + std::to_string(epoch_) +
                           ", step " + std::to_string(step + 1) + "; batch ids:" + ids.str());
    }
    optimizer_->zero_grad();
    objective.loss.backward();
    optimizer_->step();

    if (!cfg_.bank_full_recompute) {
      auto fresh = objective.image_embedding.detach();
      for (std::size_t j = 0; j < b; ++j) {
        bank_.update_ema(train_[order[start + j]].image.id, fresh[static_cast<std::int64_t>(j)]);
      }
    }

    objective.report.epoch = epoch_;
    objective.report.step = ++step;
    if (log) log(objective.report);
    reports.push_back(objective.report);
  }
  return reports;
}

void PretextTrainer::run(const LogFn& log, std::optional<int> until_epoch) {
  const int last = until_epoch.value_or(cfg_.epochs);
  while (epoch_ < last) run_epoch(log);
}

void PretextTrainer::save_checkpoint(const std::filesystem::path& path) const {
  torch::serialize::OutputArchive root;
  auto sub = [&root](const char* key, const torch::nn::Module& m) {
    torch::serialize::OutputArchive a;
    m.save(a);
    root.write(key, a);
  };
  sub("encoder", *nets_.encoder);
  sub("head_f", *nets_.head_f);
  sub("head_g", *nets_.head_g);
  if (nets_.relation) sub("relation_net", *nets_.relation);
  {
    torch::serialize::OutputArchive a;
    bank_.save(a);
    root.write("memory_bank", a);
  }
  {
    torch::serialize::OutputArchive a;
    optimizer_->save(a);
    root.write("optimizer", a);
  }
  root.write("epoch", c10::IValue(static_cast<std::int64_t>(epoch_)));
  root.write("config_json", c10::IValue(cfg_.to_json().dump()));
  root.write("rng_state", c10::IValue(rng_.state()));
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  root.save_to(path.string());
}

namespace {

torch::serialize::InputArchive open_archive(const std::filesystem::path& path) {
  torch::serialize::InputArchive root;
  try {
    root.load_from(path.string());
  } catch (const std::exception& e) {
    throw ConfigError("cannot read checkpoint " + path.string() + ": " + e.what());
  }
  return root;
}

PretextConfig read_config(torch::serialize::InputArchive& root) {
  c10::IValue cfg_json;
  root.read("config_json", cfg_json);
  PretextConfig cfg;
  cfg.merge_json(nlohmann::json::parse(cfg_json.toStringRef()));
  return cfg;
}

}  // namespace

PretextTrainer PretextTrainer::load_checkpoint(const std::filesystem::path& path,
                                               std::vector<Sample> train) {
  auto root = open_archive(path);
  PretextConfig cfg = read_config(root);
  cfg.encoder.pretrained_weights.reset();
  PretextTrainer t(cfg, std::move(train), false);

  auto sub = [&root](const char* key, torch::nn::Module& m) {
    torch::serialize::InputArchive a;
    root.read(key, a);
    m.load(a);
  };
  sub("encoder", *t.nets_.encoder);
  sub("head_f", *t.nets_.head_f);
  sub("head_g", *t.nets_.head_g);
  if (t.nets_.relation) sub("relation_net", *t.nets_.relation);
  {
    torch::serialize::InputArchive a;
    root.read("memory_bank", a);
    t.bank_ = MemoryBank::load(a);
  }
  t.build_optimizer();
  {
    torch::serialize::InputArchive a;
    root.read("optimizer", a);
    t.optimizer_->load(a);
  }
  c10::IValue epoch, rng_state;
  root.read("epoch", epoch);
  root.read("rng_state", rng_state);
  t.epoch_ = static_cast<int>(epoch.toInt());
  t.rng_.restore(rng_state.toStringRef());
  return t;
}

PretextTrainer pretext_train(const std::vector<Sample>& train, const PretextConfig& cfg,
                             std::ostream* loss_csv) {
  PretextTrainer trainer(cfg, train);
  if (loss_csv) *loss_csv << LossReport::csv_header() << '\n';
  trainer.run([&](const LossReport& r) {
    if (loss_csv) r.write_csv(*loss_csv);
  });
  return trainer;
}

LoadedEncoder load_pretext_encoder(const std::filesystem::path& checkpoint) {
  auto root = open_archive(checkpoint);
  PretextConfig cfg = read_config(root);
  cfg.encoder.pretrained_weights.reset();
  LoadedEncoder out{make_encoder(cfg.encoder), cfg.encoder};
  torch::serialize::InputArchive a;
  root.read("encoder", a);
  out.encoder->load(a);
  return out;
}

}  // namespace sslus
