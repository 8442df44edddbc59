#include "doctest_torch.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "sslus/data.hpp"
#include "sslus/pretext.hpp"

using namespace sslus;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string log;
};

CliResult run_cli(std::vector<std::string> args) {
  std::ostringstream log;
  const int code = cli::run(args, log);
  return {code, log.str()};
}

// Fresh output root shared by the CLI tests; the dataset is built once.
struct CliFixture {
  fs::path root;
  fs::path manifest;

  CliFixture() {
    root = fs::temp_directory_path() / "sslus_cli_tests";
    fs::remove_all(root);
    fs::create_directories(root);
    setenv("SSLUS_OUTPUT_DIR", root.c_str(), 1);
    const auto r = run_cli({"make-synthetic", "--count", "20", "--size", "96", "--out", "data"});
    REQUIRE(r.code == cli::kExitOk);
    manifest = root / "data" / "manifest.csv";
  }
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) ++n;
  return n;
}

std::size_t count_files(const fs::path& dir) {
  std::size_t n = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++n;
  return n;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit with 2") {
  CHECK(run_cli({}).code == cli::kExitUsage);
  CHECK(run_cli({"no-such-command"}).code == cli::kExitUsage);
  CHECK(run_cli({"pretext-train"}).code == cli::kExitUsage);
  CHECK(run_cli({"make-synthetic", "--count", "lots"}).code == cli::kExitUsage);
  CHECK(run_cli({"--help"}).code == cli::kExitOk);
}

TEST_CASE_FIXTURE(CliFixture, "make-synthetic writes a split dataset and refuses to clobber") {
  const auto m = load_manifest(manifest);
  CHECK(m.entries.size() == 20);
  CHECK((m.split_counts() == std::array<std::size_t, 3>{14, 2, 4}));

  const auto again = run_cli({"make-synthetic", "--count", "20", "--out", "data"});
  CHECK(again.code == cli::kExitUsage);
  CHECK(again.log.find("--overwrite") != std::string::npos);
  CHECK(run_cli({"make-synthetic", "--count", "10", "--out", "data", "--overwrite"}).code ==
        cli::kExitOk);
  CHECK(load_manifest(manifest).entries.size() == 10);
}

TEST_CASE_FIXTURE(CliFixture, "config and manifest problems are usage errors") {
  CHECK(run_cli({"pretext-train", "--manifest", (root / "missing.csv").string()}).code ==
        cli::kExitUsage);
  CHECK(run_cli({"pretext-train", "--manifest", manifest.string(), "--config",
                 (root / "missing.json").string()})
            .code == cli::kExitUsage);
  {
    std::ofstream(root / "bad.json") << R"({"not_a_key": 1})";
  }
  CHECK(run_cli({"pretext-train", "--manifest", manifest.string(), "--config",
                 (root / "bad.json").string()})
            .code == cli::kExitUsage);
  CHECK(run_cli({"pretext-train", "--manifest", manifest.string(), "--lr", "0.003"}).code ==
        cli::kExitUsage);
  CHECK(run_cli({"pretext-train", "--manifest", manifest.string(), "--method", "byol"}).code ==
        cli::kExitUsage);
}

TEST_CASE_FIXTURE(CliFixture, "pretext-train from a config file") {
  {
    std::ofstream(root / "cfg.json") << R"({"epochs": 1, "method": "rcl_percep", "lambda": 0.1})";
  }
  const auto r = run_cli({"pretext-train", "--manifest", manifest.string(), "--config",
                          (root / "cfg.json").string(), "--profile", "desk", "--out", "cfg_run"});
  REQUIRE(r.code == cli::kExitOk);
  CHECK(fs::exists(root / "cfg_run" / "checkpoint.pt"));
  CHECK(count_lines(root / "cfg_run" / "loss.csv") > 1);
  const auto cfg = nlohmann::json::parse(read_file(root / "cfg_run" / "config.json"));
  CHECK(cfg["epochs"].get<int>() == 1);
  CHECK(cfg["lambda"].get<double>() == 0.1);
}

TEST_CASE_FIXTURE(CliFixture, "pretext-train then finetune then evaluate") {
  const auto pre = run_cli({"pretext-train", "--manifest", manifest.string(), "--epochs", "1",
                            "--lambda", "0.25", "--out", "pre"});
  REQUIRE(pre.code == cli::kExitOk);
  const auto ckpt = root / "pre" / "checkpoint.pt";
  CHECK(fs::exists(ckpt));
  // 14 train images, batch 8: two steps plus the header.
  CHECK(count_lines(root / "pre" / "loss.csv") == 3);
  const auto cfg = nlohmann::json::parse(read_file(root / "pre" / "config.json"));
  CHECK(cfg["lambda"].get<double>() == 0.25);
  CHECK(cfg["seed"].get<int>() == 42);

  const auto train = load_samples(load_manifest(manifest).entries_in(Split::Train), 0, false);
  const auto trainer = PretextTrainer::load_checkpoint(ckpt, train);
  CHECK(trainer.config().lambda == 0.25);
  CHECK(trainer.epoch() == 1);

  const auto ft = run_cli({"finetune", "--manifest", manifest.string(), "--init", ckpt.string(),
                           "--fraction", "0.5", "--epochs", "2", "--out", "ft"});
  REQUIRE(ft.code == cli::kExitOk);
  CHECK(ft.log.find("training on 7 of 14 train images") != std::string::npos);
  CHECK(fs::exists(root / "ft" / "model.pt"));
  CHECK(count_lines(root / "ft" / "curve.csv") >= 2);

  const auto ev = run_cli({"evaluate", "--manifest", manifest.string(), "--model",
                           (root / "ft" / "model.pt").string(), "--overlays", "--out", "ev"});
  REQUIRE(ev.code == cli::kExitOk);
  // Header, 4 test images, mean and sd.
  CHECK(count_lines(root / "ev" / "metrics.csv") == 7);
  CHECK(count_files(root / "ev" / "overlays") == 4);

  CHECK(run_cli({"evaluate", "--manifest", manifest.string(), "--model",
                 (root / "nope.pt").string(), "--out", "ev2"})
            .code != cli::kExitOk);
  CHECK(run_cli({"finetune", "--manifest", manifest.string(), "--fraction", "1.5", "--out",
                 "ft2"})
            .code == cli::kExitUsage);
}

TEST_CASE_FIXTURE(CliFixture, "augment-preview is deterministic") {
  const auto img_path = load_manifest(manifest).entries[0].image_path;
  auto a = run_cli({"augment-preview", "--image", img_path.string(), "--count", "3", "--out", "pa"});
  auto b = run_cli({"augment-preview", "--image", img_path.string(), "--count", "3", "--out", "pb"});
  REQUIRE(a.code == cli::kExitOk);
  REQUIRE(b.code == cli::kExitOk);
  // original + 3 × (crop, spectrum) + 3 jigsaw panels.
  CHECK(count_files(root / "pa") == 10);
  for (const auto& e : fs::directory_iterator(root / "pa")) {
    CHECK(read_file(e.path()) == read_file(root / "pb" / e.path().filename()));
  }
  const auto fixed = run_cli({"augment-preview", "--image", img_path.string(), "--filter",
                              "inner=20,outer=30,x=2", "--out", "pc"});
  CHECK(fixed.code == cli::kExitOk);
  CHECK(fs::exists(root / "pc" / "filter_1_crop.png"));
  CHECK(run_cli({"augment-preview", "--image", img_path.string(), "--filter", "inner=40,outer=30",
                 "--out", "pd"})
            .code == cli::kExitUsage);
  {
    std::ofstream(root / "garbage.png") << "not an image";
  }
  CHECK(run_cli({"augment-preview", "--image", (root / "garbage.png").string(), "--out", "pe"})
            .code == cli::kExitRuntime);
}

TEST_CASE_FIXTURE(CliFixture, "ablate-lambda sweeps both perceptual methods") {
  CHECK(run_cli({"ablate-lambda", "--manifest", manifest.string(), "--lambdas", "1.5", "--out",
                 "ab0"})
            .code == cli::kExitUsage);
  CHECK(run_cli({"ablate-lambda", "--manifest", manifest.string(), "--method", "rcl", "--out",
                 "ab1"})
            .code == cli::kExitUsage);

  const auto r = run_cli({"ablate-lambda", "--manifest", manifest.string(), "--pretext-epochs",
                          "1", "--finetune-epochs", "2", "--out", "ab"});
  REQUIRE(r.code == cli::kExitOk);
  std::ifstream csv(root / "ab" / "ablation.csv");
  std::string line;
  std::getline(csv, line);
  CHECK(line == "method,lambda,dsc");
  int pirl = 0, rcl = 0;
  while (std::getline(csv, line)) {
    if (line.rfind("pirl_percep,", 0) == 0) ++pirl;
    if (line.rfind("rcl_percep,", 0) == 0) ++rcl;
  }
  CHECK(pirl == 4);
  CHECK(rcl == 4);
}

}  // TEST_SUITE
