#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "sslus/config.hpp"
#include "sslus/data.hpp"
#include "sslus/errors.hpp"
#include "sslus/finetune.hpp"
#include "sslus/frequency.hpp"
#include "sslus/jigsaw.hpp"
#include "sslus/metrics.hpp"
#include "sslus/pretext.hpp"

namespace sslus::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OutputOptions {
  std::string out;
  bool overwrite = false;
};

void add_output_options(CLI::App* cmd, OutputOptions& o) {
  cmd->add_option("--out", o.out, "Output directory (relative paths resolve under $SSLUS_OUTPUT_DIR)");
  cmd->add_flag("--overwrite", o.overwrite, "Replace an existing non-empty output directory");
}

fs::path output_root() {
  const char* env = std::getenv("SSLUS_OUTPUT_DIR");
  return env && *env ? fs::path(env) : fs::path("runs");
}

// Resolves and prepares the output directory. Refuses to reuse a non-empty
// directory unless --overwrite was given, in which case it is emptied.
fs::path prepare_output(const OutputOptions& o, const std::string& command) {
  fs::path dir;
  if (o.out.empty()) {
    dir = output_root() / command;
  } else {
    dir = fs::path(o.out);
    if (dir.is_relative() && std::getenv("SSLUS_OUTPUT_DIR")) dir = output_root() / dir;
  }
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw UsageError("output path " + dir.string() + " is not a directory");
    if (!fs::is_empty(dir)) {
      if (!o.overwrite) {
        throw UsageError("output directory " + dir.string() +
                         " is not empty; pass --overwrite to replace it");
      }
      const auto canon = fs::weakly_canonical(dir);
      if (canon == canon.root_path() || canon == fs::weakly_canonical(fs::current_path())) {
        throw UsageError("refusing to clear " + canon.string());
      }
      for (const auto& entry : fs::directory_iterator(dir)) fs::remove_all(entry.path());
    }
  }
  fs::create_directories(dir);
  return dir;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

DatasetManifest open_manifest(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("manifest " + path + " does not exist");
  return load_manifest(path);
}

std::optional<json> config_file(const std::string& path) {
  if (path.empty()) return std::nullopt;
  if (!fs::exists(path)) throw UsageError("config file " + path + " does not exist");
  return read_json_file(path);
}

// Profile and method pick the defaults; the config file and then flags go on top.
template <typename T>
T value_or(const std::optional<json>& j, const char* key, const std::optional<T>& flag, T fallback) {
  if (flag) return *flag;
  if (j && j->contains(key)) {
    try {
      return j->at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
  }
  return fallback;
}

// ---------------------------------------------------------------------------

struct PretextFlags {
  std::string manifest;
  std::string config;
  std::optional<std::string> profile;
  std::optional<std::string> method;
  std::optional<std::string> task;
  std::optional<double> lambda;
  std::optional<double> lr;
  std::optional<int> epochs;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<int> workers;
  std::string resume;
  OutputOptions output;
};

PretextConfig build_pretext_config(const PretextFlags& f) {
  auto file = config_file(f.config);
  const auto profile = parse_profile(value_or<std::string>(file, "profile", f.profile, "desk"));
  const auto method = parse_method(value_or<std::string>(file, "method", f.method, "rcl_percep"));
  auto cfg = PretextConfig::for_profile(profile, method);
  if (file) cfg.merge_json(*file);
  if (f.task) cfg.pretext_task = parse_pretext_task(*f.task);
  if (f.lambda) cfg.lambda = *f.lambda;
  if (f.lr) cfg.lr = *f.lr;
  if (f.epochs) cfg.epochs = *f.epochs;
  if (f.seed) cfg.seed = *f.seed;
  if (f.threads) cfg.threads = *f.threads;
  if (f.workers) cfg.workers = *f.workers;
  cfg.validate();
  return cfg;
}

void add_pretext_flags(CLI::App* cmd, PretextFlags& f) {
  cmd->add_option("--config", f.config, "JSON config with PretextConfig keys");
  cmd->add_option("--profile", f.profile, "desk or full");
  cmd->add_option("--method", f.method, "pirl, pirl_percep, rcl or rcl_percep");
  cmd->add_option("--task", f.task, "jigsaw, jigsaw_freq, crosspatch or crosspatch_freq");
  cmd->add_option("--lambda", f.lambda, "Contrastive weight in the combined loss");
  cmd->add_option("--lr", f.lr, "SGD learning rate (must be on the tuning grid)");
  cmd->add_option("--epochs", f.epochs, "Pretext epochs");
  cmd->add_option("--seed", f.seed, "Random seed (default 42)");
  cmd->add_option("--threads", f.threads, "Intra-op threads");
  cmd->add_option("--workers", f.workers, "Augmentation workers");
}

int cmd_pretext_train(const PretextFlags& f, std::ostream& log) {
  const auto manifest = open_manifest(f.manifest);
  auto train = load_samples(manifest.entries_in(Split::Train), 0, false);
  const fs::path out = prepare_output(f.output, "pretext-train");

  std::ofstream csv(out / "loss.csv");
  csv << LossReport::csv_header() << '\n';
  auto log_step = [&](const LossReport& r) {
    r.write_csv(csv);
    csv.flush();
  };

  std::optional<PretextTrainer> trainer;
  if (!f.resume.empty()) {
    if (!fs::exists(f.resume)) throw UsageError("checkpoint " + f.resume + " does not exist");
    trainer.emplace(PretextTrainer::load_checkpoint(f.resume, std::move(train)));
    const int until = f.epochs.value_or(trainer->config().epochs);
    log << "resuming " << f.resume << " at epoch " << trainer->epoch() << ", running to " << until
        << '\n';
    trainer->run(log_step, until);
  } else {
    const auto cfg = build_pretext_config(f);
    write_json(out / "config.json", cfg.to_json());
    log << "pretext " << to_string(cfg.method) << " (" << to_string(cfg.pretext_task)
        << ", lambda " << cfg.lambda << ", lr " << cfg.lr << ") on " << train.size()
        << " images for " << cfg.epochs << " epochs\n";
    trainer.emplace(cfg, std::move(train));
    trainer->run([&](const LossReport& r) {
      log_step(r);
      if (r.step == 1 && r.epoch % 10 == 0) log << "  epoch " << r.epoch << '\n';
    });
  }
  trainer->save_checkpoint(out / "checkpoint.pt");
  log << "wrote " << (out / "checkpoint.pt").string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct FinetuneFlags {
  std::string manifest;
  std::string config;
  std::string init;
  std::optional<std::string> profile;
  std::optional<double> fraction;
  std::optional<int> epochs;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  OutputOptions output;
};

FinetuneConfig build_finetune_config(const FinetuneFlags& f) {
  auto file = config_file(f.config);
  const auto profile = parse_profile(value_or<std::string>(file, "profile", f.profile, "desk"));
  auto cfg = FinetuneConfig::for_profile(profile);
  if (file) cfg.merge_json(*file);
  if (f.fraction) cfg.train_fraction = *f.fraction;
  if (f.epochs) cfg.epochs = *f.epochs;
  if (f.seed) cfg.seed = *f.seed;
  if (f.threads) cfg.threads = *f.threads;
  if (cfg.warmup >= cfg.epochs) cfg.warmup = cfg.epochs / 2;
  cfg.validate();
  return cfg;
}

struct FinetuneData {
  std::vector<Sample> train;
  std::vector<Sample> val;
  std::size_t train_total = 0;
};

FinetuneData load_finetune_data(const DatasetManifest& manifest, const FinetuneConfig& cfg) {
  FinetuneData d;
  d.train_total = manifest.entries_in(Split::Train).size();
  const auto subset = take_train_subset(manifest, {cfg.train_fraction, cfg.seed});
  d.train = load_samples(subset.entries_in(Split::Train), cfg.image_size, true);
  d.val = load_samples(subset.entries_in(Split::Val), cfg.image_size, true);
  return d;
}

void write_curve(const fs::path& path, const FinetuneResult& r) {
  std::ofstream os(path);
  os << "epoch,lr,train_loss,val_dsc\n" << std::setprecision(17);
  for (const auto& e : r.curve) {
    os << e.epoch << ',' << e.lr << ',' << e.train_loss << ',' << e.val_dsc << '\n';
  }
}

int cmd_finetune(const FinetuneFlags& f, std::ostream& log) {
  auto cfg = build_finetune_config(f);
  const auto manifest = open_manifest(f.manifest);
  std::optional<Encoder> init;
  if (!f.init.empty()) {
    if (!fs::exists(f.init)) throw UsageError("checkpoint " + f.init + " does not exist");
    auto loaded = load_pretext_encoder(f.init);
    cfg.encoder = loaded.config;
    init = loaded.encoder;
  }
  const auto data = load_finetune_data(manifest, cfg);
  const fs::path out = prepare_output(f.output, "finetune");
  write_json(out / "config.json", cfg.to_json());
  log << (init ? "fine-tuning from " + f.init : std::string("supervised baseline")) << ": training on "
      << data.train.size() << " of " << data.train_total << " train images, " << data.val.size()
      << " val images\n";

  const auto result = finetune_segmentation(data.train, data.val, init, cfg);
  write_curve(out / "curve.csv", result);
  save_segmentation_model(out / "model.pt", result);
  log << "best val DSC " << result.best_val_dsc << " at epoch " << result.best_epoch
      << (result.stopped_early ? " (stopped early)" : "") << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvaluateFlags {
  std::string manifest;
  std::string model;
  std::string split = "test";
  bool overlays = false;
  OutputOptions output;
};

int cmd_evaluate(const EvaluateFlags& f, std::ostream& log) {
  const auto manifest = open_manifest(f.manifest);
  const auto split = parse_split(f.split);
  if (!fs::exists(f.model)) throw UsageError("model " + f.model + " does not exist");
  auto loaded = load_segmentation_model(f.model);
  const auto samples = load_samples(manifest.entries_in(split), loaded.image_size, true);
  if (samples.empty()) throw UsageError("split '" + f.split + "' has no images");
  const fs::path out = prepare_output(f.output, "evaluate");

  const auto report = evaluate_model(*loaded.model, samples);
  report.write_csv(out / "metrics.csv");
  if (f.overlays) {
    fs::create_directories(out / "overlays");
    std::vector<Image> images;
    for (const auto& s : samples) images.push_back(s.image);
    const auto preds = predict_masks(*loaded.model, images);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      write_overlay_png(out / "overlays" / (samples[i].image.id + ".png"), samples[i].image, preds[i],
                        *samples[i].mask);
    }
  }
  log << std::fixed << std::setprecision(4) << "DSC " << report.dsc.mean << " +- " << report.dsc.sd
      << ", HD " << report.hd.mean << " over " << samples.size() << " images\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct PreviewFlags {
  std::string image;
  std::vector<std::string> filters;
  int count = 2;
  std::uint64_t seed = 42;
  OutputOptions output;
};

FrequencyFilterSpec parse_filter(const std::string& text) {
  FrequencyFilterSpec spec;
  std::map<std::string, double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("filter item '" + item + "' is not key=value");
    const std::string key = item.substr(0, eq);
    if (key != "inner" && key != "outer" && key != "x") {
      throw UsageError("unknown filter key '" + key + "' (expected inner, outer, x)");
    }
    try {
      values[key] = std::stod(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw UsageError("filter value '" + item + "' is not a number");
    }
  }
  if (!values.count("inner") || !values.count("outer")) {
    throw UsageError("filter needs inner= and outer=");
  }
  spec.band_inner_radius = values["inner"];
  spec.band_outer_radius = values["outer"];
  spec.x_thickness = values.count("x") ? values["x"] : 0.0;
  spec.x_enabled = spec.x_thickness > 0.0;
  try {
    spec.validate();
  } catch (const std::exception& e) {
    throw UsageError(std::string("invalid filter: ") + e.what());
  }
  return spec;
}

Plane first_channel(const Image& img) {
  Plane p(img.height, img.width);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) p.at(y, x) = img.at(0, y, x);
  }
  return p;
}

void save_plane(const fs::path& path, const Plane& p) {
  std::vector<float> v(p.values.begin(), p.values.end());
  save_plane_png(path, v, p.height, p.width);
}

int cmd_augment_preview(const PreviewFlags& f, std::ostream& log) {
  std::vector<FrequencyFilterSpec> specs;
  for (const auto& text : f.filters) specs.push_back(parse_filter(text));
  if (f.count < 0) throw UsageError("--count must be >= 0");
  const Image image = load_image(f.image, fs::path(f.image).stem().string());
  validate_image(image);
  const fs::path out = prepare_output(f.output, "augment-preview");
  save_image_png(out / "original.png", image);

  Rng rng(f.seed);
  if (specs.empty()) {
    for (int i = 0; i < f.count; ++i) specs.push_back(sample_filter_spec(rng));
  }
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const Rect rect = sample_crop_rect(image.height, image.width, rng);
    const auto filtered = crop(apply_frequency_filter(image, specs[i], rect).image, rect);
    const std::string stem = "filter_" + std::to_string(i + 1);
    save_image_png(out / (stem + "_crop.png"), filtered);
    save_plane(out / (stem + "_spectrum.png"), log_amplitude(first_channel(filtered)));
    log << stem << ": band " << specs[i].band_inner_radius << "-" << specs[i].band_outer_radius
        << ", x " << (specs[i].x_enabled ? specs[i].x_thickness : 0.0) << '\n';
  }

  // Three panels: grid crop, non-focal shuffle, full cross-patch transform.
  const Image grid = resize_image(image, kCropSide, kCropSide);
  const auto bundle = partition_grid(grid);
  const auto layout = select_focal_sets(rng);
  const auto full = transform_crosspatch(bundle, layout, rng);
  const auto shuffled =
      reverse_focal_row(reverse_focal_column(rotate_focal_patches(full, layout), layout), layout);
  save_image_png(out / "jigsaw_1_grid.png", reassemble(bundle));
  save_image_png(out / "jigsaw_2_shuffled.png", reassemble(shuffled));
  save_image_png(out / "jigsaw_3_crosspatch.png", reassemble(full));
  log << "anchor cell (" << layout.anchor.row << ", " << layout.anchor.col << "), wrote "
      << out.string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct AblateFlags {
  std::string manifest;
  std::vector<std::string> methods{"pirl_percep", "rcl_percep"};
  std::vector<double> lambdas{0.1, 0.25, 0.5, 0.75};
  std::optional<std::string> profile;
  std::optional<double> fraction;
  std::optional<int> pretext_epochs;
  std::optional<int> finetune_epochs;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  OutputOptions output;
};

int cmd_ablate_lambda(const AblateFlags& f, std::ostream& log) {
  std::vector<Method> methods;
  for (const auto& m : f.methods) {
    const auto method = parse_method(m);
    if (!uses_perceptual(method)) throw UsageError("ablate-lambda needs a *_percep method, got " + m);
    methods.push_back(method);
  }
  for (double l : f.lambdas) {
    if (!(l >= 0.0 && l <= 1.0)) throw UsageError("lambda " + std::to_string(l) + " outside [0,1]");
  }
  const auto manifest = open_manifest(f.manifest);
  const auto profile = parse_profile(f.profile.value_or("desk"));

  auto ft = FinetuneConfig::for_profile(profile);
  if (f.fraction) ft.train_fraction = *f.fraction;
  if (f.finetune_epochs) ft.epochs = *f.finetune_epochs;
  if (f.seed) ft.seed = *f.seed;
  if (f.threads) ft.threads = *f.threads;
  if (ft.warmup >= ft.epochs) ft.warmup = ft.epochs / 2;
  ft.validate();

  std::vector<PretextConfig> runs;
  for (auto method : methods) {
    for (double l : f.lambdas) {
      auto pc = PretextConfig::for_profile(profile, method);
      pc.lambda = l;
      if (f.pretext_epochs) pc.epochs = *f.pretext_epochs;
      if (f.seed) pc.seed = *f.seed;
      if (f.threads) pc.threads = *f.threads;
      pc.validate();
      runs.push_back(pc);
    }
  }

  auto pretext_data = load_samples(manifest.entries_in(Split::Train), runs.front().image_size, false);
  const auto data = load_finetune_data(manifest, ft);
  const fs::path out = prepare_output(f.output, "ablate-lambda");
  write_json(out / "config.json", {{"finetune", ft.to_json()}, {"methods", f.methods},
                                   {"lambdas", f.lambdas}, {"pretext", runs.front().to_json()}});

  std::ofstream csv(out / "ablation.csv");
  csv << "method,lambda,dsc\n" << std::setprecision(17);
  for (const auto& pc : runs) {
    log << to_string(pc.method) << " lambda " << pc.lambda << ": pretext\n";
    auto trainer = pretext_train(pretext_data, pc);
    auto ft_run = ft;
    ft_run.encoder = pc.encoder;
    const auto result =
        finetune_segmentation(data.train, data.val, trainer.networks().encoder, ft_run);
    csv << to_string(pc.method) << ',' << pc.lambda << ',' << result.best_val_dsc << '\n';
    csv.flush();
    log << "  val DSC " << result.best_val_dsc << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SyntheticFlags {
  int count = 200;
  int size = 96;
  double train = 0.7;
  double val = 0.1;
  std::uint64_t seed = 42;
  OutputOptions output;
};

int cmd_make_synthetic(const SyntheticFlags& f, std::ostream& log) {
  if (f.count < 3) throw UsageError("--count must be >= 3");
  if (f.size < 32) throw UsageError("--size must be >= 32");
  if (!(f.train > 0 && f.val >= 0 && f.train + f.val < 1)) {
    throw UsageError("need train > 0, val >= 0 and train + val < 1");
  }
  const fs::path out = prepare_output(f.output, "make-synthetic");
  const auto samples = generate_synthetic_dataset(f.count, f.size, f.size, f.seed);
  const auto manifest = write_synthetic_dataset(out, samples, f.train, f.val);
  const auto counts = manifest.split_counts();
  log << "wrote " << f.count << " images (" << counts[0] << " train, " << counts[1] << " val, "
      << counts[2] << " test) to " << out.string() << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& log) {
  CLI::App app{"Self-supervised pretext training and lesion segmentation for ultrasound images",
               "sslus"};
  app.require_subcommand(1);

  PretextFlags pretext;
  auto* c_pretext = app.add_subcommand("pretext-train", "Train an encoder on a pretext task");
  c_pretext->add_option("--manifest", pretext.manifest, "Dataset manifest CSV")->required();
  c_pretext->add_option("--resume", pretext.resume, "Continue from a pretext checkpoint");
  add_pretext_flags(c_pretext, pretext);
  add_output_options(c_pretext, pretext.output);

  FinetuneFlags finetune;
  auto* c_finetune = app.add_subcommand("finetune", "Train the segmentation network");
  c_finetune->add_option("--manifest", finetune.manifest, "Dataset manifest CSV")->required();
  c_finetune->add_option("--init", finetune.init, "Pretext checkpoint (omit for the supervised baseline)");
  c_finetune->add_option("--config", finetune.config, "JSON config with FinetuneConfig keys");
  c_finetune->add_option("--profile", finetune.profile, "desk or full");
  c_finetune->add_option("--fraction", finetune.fraction, "Fraction of labelled train images");
  c_finetune->add_option("--epochs", finetune.epochs, "Maximum epochs");
  c_finetune->add_option("--seed", finetune.seed, "Random seed (default 42)");
  c_finetune->add_option("--threads", finetune.threads, "Intra-op threads");
  add_output_options(c_finetune, finetune.output);

  EvaluateFlags evaluate;
  auto* c_evaluate = app.add_subcommand("evaluate", "Score a segmentation model");
  c_evaluate->add_option("--manifest", evaluate.manifest, "Dataset manifest CSV")->required();
  c_evaluate->add_option("--model", evaluate.model, "Model written by finetune")->required();
  c_evaluate->add_option("--split", evaluate.split, "train, val or test");
  c_evaluate->add_flag("--overlays", evaluate.overlays, "Write one overlay PNG per image");
  add_output_options(c_evaluate, evaluate.output);

  PreviewFlags preview;
  auto* c_preview = app.add_subcommand("augment-preview", "Render frequency filters and the cross-patch jigsaw");
  c_preview->add_option("--image", preview.image, "Input image")->required();
  c_preview->add_option("--filter", preview.filters, "inner=R1,outer=R2[,x=T]; repeatable");
  c_preview->add_option("--count", preview.count, "Random filters when no --filter is given");
  c_preview->add_option("--seed", preview.seed, "Random seed (default 42)");
  add_output_options(c_preview, preview.output);

  AblateFlags ablate;
  auto* c_ablate = app.add_subcommand("ablate-lambda", "Sweep lambda for the perceptual variants");
  c_ablate->add_option("--manifest", ablate.manifest, "Dataset manifest CSV")->required();
  c_ablate->add_option("--method", ablate.methods, "pirl_percep and/or rcl_percep");
  c_ablate->add_option("--lambdas", ablate.lambdas, "Lambda values");
  c_ablate->add_option("--profile", ablate.profile, "desk or full");
  c_ablate->add_option("--fraction", ablate.fraction, "Fraction of labelled train images");
  c_ablate->add_option("--pretext-epochs", ablate.pretext_epochs, "Override pretext epochs");
  c_ablate->add_option("--finetune-epochs", ablate.finetune_epochs, "Override fine-tuning epochs");
  c_ablate->add_option("--seed", ablate.seed, "Random seed (default 42)");
  c_ablate->add_option("--threads", ablate.threads, "Intra-op threads");
  add_output_options(c_ablate, ablate.output);

  SyntheticFlags synthetic;
  auto* c_synth = app.add_subcommand("make-synthetic", "Write a synthetic lesion dataset");
  c_synth->add_option("--count", synthetic.count, "Number of images");
  c_synth->add_option("--size", synthetic.size, "Image side in pixels");
  c_synth->add_option("--train", synthetic.train, "Train fraction");
  c_synth->add_option("--val", synthetic.val, "Validation fraction");
  c_synth->add_option("--seed", synthetic.seed, "Random seed (default 42)");
  add_output_options(c_synth, synthetic.output);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    log << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    log << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    log << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (c_pretext->parsed()) return cmd_pretext_train(pretext, log);
    if (c_finetune->parsed()) return cmd_finetune(finetune, log);
    if (c_evaluate->parsed()) return cmd_evaluate(evaluate, log);
    if (c_preview->parsed()) return cmd_augment_preview(preview, log);
    if (c_ablate->parsed()) return cmd_ablate_lambda(ablate, log);
    if (c_synth->parsed()) return cmd_make_synthetic(synthetic, log);
  } catch (const UsageError& e) {
    log << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace sslus::cli
