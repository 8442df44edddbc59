#include "doctest_torch.hpp"

#include <cmath>
#include <set>

#include "sslus/encoder.hpp"
#include "sslus/errors.hpp"
#include "sslus/losses.hpp"
#include "sslus/memory_bank.hpp"
#include "sslus/rng.hpp"

using namespace sslus;

namespace {

torch::Tensor unit(std::initializer_list<double> v) {
  auto t = torch::tensor(std::vector<double>(v), torch::kDouble);
  return t / t.norm();
}

torch::Tensor basis(int dim, int i) {
  auto t = torch::zeros({dim}, torch::kDouble);
  t[i] = 1.0;
  return t;
}

EncoderConfig tiny() { return EncoderConfig{}; }

}  // namespace

TEST_SUITE("encoder") {

TEST_CASE("tiny encoder shapes and determinism") {
  torch::manual_seed(1);
  auto enc = make_encoder(tiny());
  CHECK(enc->feature_dim() == 128);
  CHECK(enc->stage_channels() == std::vector<std::int64_t>{16, 32, 64, 128});
  CHECK(enc->leaf_layer_count() == 8);
  CHECK(tiny().resolved_tap_layer() == 4);
  CHECK(tiny().image_size() == 96);
  CHECK(tiny().patch_size() == 32);

  Image img(96, 96, 0.3f);
  img.at(0, 10, 10) = 0.9f;
  auto [f1, tap1] = encode_image(*enc, img);
  auto [f2, tap2] = encode_image(*enc, img);
  CHECK(f1.size(0) == 128);
  CHECK(tap1.size(0) == enc->tap_channels());
  CHECK(tap1.size(0) == 64);
  CHECK(torch::equal(f1, f2));
  CHECK(torch::equal(tap1, tap2));
  CHECK(enc->is_training());  // encode_image restores the mode

  auto out = enc->forward(torch::rand({2, 3, 96, 96}));
  REQUIRE(out.stages.size() == 4);
  CHECK(out.stages[0].sizes() == torch::IntArrayRef({2, 16, 48, 48}));
  CHECK(out.stages[3].sizes() == torch::IntArrayRef({2, 128, 6, 6}));
}

TEST_CASE("tiny encoder stays finite on random inputs") {
  torch::manual_seed(2);
  auto enc = make_encoder(tiny());
  torch::NoGradGuard no_grad;
  for (int i = 0; i < 10; ++i) {
    auto out = enc->forward(torch::rand({10, 3, 96, 96}));
    CHECK(torch::isfinite(out.features).all().item<bool>());
    CHECK(torch::isfinite(out.tap).all().item<bool>());
  }
}

TEST_CASE("reference encoder") {
  EncoderConfig cfg;
  cfg.architecture = Architecture::ReferenceResNet50;
  CHECK(cfg.resolved_tap_layer() == 40);
  CHECK(cfg.feature_dim() == 2048);
  CHECK(cfg.image_size() == 224);
  CHECK(cfg.patch_size() == 64);
  torch::manual_seed(3);
  auto enc = make_encoder(cfg);
  CHECK(enc->stage_channels() == std::vector<std::int64_t>{64, 256, 512, 1024, 2048});
  torch::NoGradGuard no_grad;
  enc->eval();
  auto out = enc->forward(torch::rand({1, 3, 64, 64}));
  CHECK(out.features.sizes() == torch::IntArrayRef({1, 2048}));
  CHECK(out.tap.size(1) == enc->tap_channels());
  CHECK(out.stages.size() == 5);
  CHECK(out.stages[0].size(2) == 32);  // stem output before max-pooling
}

TEST_CASE("encoder configuration errors") {
  EncoderConfig bad;
  bad.perceptual_tap_layer = 99;
  CHECK_THROWS_AS(make_encoder(bad), ConfigError);
  EncoderConfig missing;
  missing.pretrained_weights = "/nonexistent/weights.pt";
  CHECK_THROWS_AS(make_encoder(missing), ConfigError);
  CHECK_THROWS_AS(parse_architecture("vgg"), ConfigError);
  CHECK(parse_architecture(to_string(Architecture::ReferenceResNet50)) ==
        Architecture::ReferenceResNet50);
}

TEST_CASE("patch concatenation follows patch order") {
  torch::manual_seed(4);
  auto enc = make_encoder(tiny());
  enc->eval();
  torch::NoGradGuard no_grad;
  auto one = torch::rand({1, 1, 3, 32, 32}).expand({1, 36, 3, 32, 32}).contiguous();
  auto [same, taps] = encode_patches_concat(*enc, one);
  CHECK(same.sizes() == torch::IntArrayRef({1, 36 * 128}));
  CHECK(taps.sizes() == torch::IntArrayRef({1, 36, 64}));
  auto blocks = same.view({36, 128});
  for (int i = 1; i < 36; ++i) CHECK(torch::allclose(blocks[i], blocks[0]));

  auto patches = torch::rand({2, 36, 3, 32, 32});
  auto perm = torch::randperm(36);
  auto [a, ta] = encode_patches_concat(*enc, patches);
  auto [b, tb] = encode_patches_concat(*enc, patches.index_select(1, perm));
  CHECK(torch::allclose(b.view({2, 36, 128}), a.view({2, 36, 128}).index_select(1, perm)));
  CHECK_THROWS_AS(encode_patches_concat(*enc, torch::rand({1, 35, 3, 32, 32})), std::invalid_argument);
}

TEST_CASE("projection heads") {
  torch::manual_seed(5);
  ProjectionHead f(128), g(36 * 128);
  auto x = torch::randn({4, 128});
  auto y = f->forward(x);
  CHECK(y.sizes() == torch::IntArrayRef({4, 128}));
  CHECK(torch::allclose(y.norm(2, 1), torch::ones({4}), 0, 1e-5));
  // The linear map has a bias, so only positive scaling of the pre-norm
  // output is invisible; checked on the normalisation step itself.
  CHECK(torch::allclose(l2_normalize(3.0 * x), l2_normalize(x), 1e-6, 1e-6));
  CHECK(torch::isfinite(l2_normalize(torch::zeros({2, 128}))).all().item<bool>());
  CHECK(g->forward(torch::randn({2, 36 * 128})).size(1) == 128);
  CHECK_THROWS_AS(f->forward(torch::randn({2, 64})), std::invalid_argument);
  // f and g are separate parameter sets.
  CHECK(f->parameters()[0].data_ptr() != g->parameters()[0].data_ptr());
}

}  // TEST_SUITE

TEST_SUITE("losses") {

TEST_CASE("relation network") {
  torch::manual_seed(6);
  RelationNetwork rn;
  auto a = l2_normalize(torch::randn({5, 128}));
  auto b = l2_normalize(torch::randn({5, 128}));
  auto s = rn->forward(a, b);
  CHECK(s.sizes() == torch::IntArrayRef({5}));
  CHECK((s > 0).all().item<bool>());
  CHECK((s < 1).all().item<bool>());
  CHECK(torch::equal(s, rn->forward(b, a)));

  {
    torch::NoGradGuard no_grad;
    for (auto& p : rn->parameters()) p.zero_();
  }
  CHECK(relation_score(*rn, a[0], b[0]) == 0.5);
  CHECK_THROWS_AS(rn->forward(torch::randn({2, 64}), torch::randn({2, 64})), std::invalid_argument);
}

TEST_CASE("relation loss values") {
  CHECK(rcl_loss({1.0}, {{0.0}}) == 0.0);
  CHECK(rcl_loss({0.7}, {{0.2}}) == doctest::Approx(0.13).epsilon(1e-14));
  CHECK(rcl_loss({0.5}, {{0.5}}) == 0.5);
  // Negatives are averaged per anchor, then anchors are averaged.
  CHECK(rcl_loss({1.0, 0.5}, {{0.2, 0.4}, {0.0, 0.0}}) ==
        doctest::Approx(((0.04 + 0.16) / 2 + 0.25) / 2).epsilon(1e-14));
  CHECK_THROWS_AS(rcl_loss(std::vector<double>{}, {}), std::invalid_argument);
  CHECK_THROWS_AS(rcl_loss({0.5}, {{}}), std::invalid_argument);

  auto t = rcl_loss(torch::tensor({0.7}, torch::kDouble), torch::tensor({{0.2}}, torch::kDouble));
  CHECK(t.item<double>() == doctest::Approx(0.13).epsilon(1e-14));

  CHECK(total_rcl(0.13, 0.05, 0.5) == doctest::Approx(0.09).epsilon(1e-14));
  CHECK(total_rcl(0.13, 0.05, 1.0) == 0.13);
  CHECK(total_rcl(0.2, 0.2, 0.5) == 0.2);
  CHECK_THROWS_AS(total_rcl(0.1, 0.1, 1.5), std::invalid_argument);
}

TEST_CASE("relation loss stays in range for random scores") {
  Rng rng(7);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> pos;
    std::vector<std::vector<double>> neg;
    for (int i = 0; i < 4; ++i) {
      pos.push_back(rng.uniform());
      neg.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
    }
    const double l = rcl_loss(pos, neg);
    CHECK(l >= 0.0);
    CHECK(l <= 2.0);
  }
}

TEST_CASE("gradient descent on the relation loss separates the scores") {
  torch::manual_seed(8);
  RelationNetwork rn;
  auto a = l2_normalize(torch::randn({1, 128}));
  auto p = l2_normalize(a + 0.1 * torch::randn({1, 128}));
  auto n = l2_normalize(torch::randn({1, 4, 128}));
  auto loss_of = [&] {
    auto pos = rn->forward(a, p);
    auto neg = rn->forward(a.unsqueeze(1).expand({1, 4, 128}), n);
    return std::tuple{rcl_loss(pos, neg), pos, neg};
  };
  auto step = [&](double lr) {
    auto [loss, pos, neg] = loss_of();
    for (auto& param : rn->parameters()) param.mutable_grad() = torch::Tensor();
    loss.backward();
    torch::NoGradGuard no_grad;
    for (auto& param : rn->parameters()) param -= lr * param.grad();
    return loss.item<double>();
  };
  const double first = step(1e-2);
  CHECK(std::get<0>(loss_of()).item<double>() < first);
  for (int i = 0; i < 300; ++i) step(0.5);
  auto [loss, pos, neg] = loss_of();
  CHECK(pos.item<double>() > neg.max().item<double>());
  CHECK(loss.item<double>() < first);
}

TEST_CASE("contrastive cross-entropy values") {
  const std::vector<double> a{1.0, 0.0};
  CHECK(nce_loss(a, a, {{0.0, 1.0}}, 1.0) ==
        doctest::Approx(-std::log(std::exp(1.0) / (std::exp(1.0) + 1.0))).epsilon(1e-14));
  CHECK(nce_loss(a, a, {{0.0, 1.0}}, 1.0) == doctest::Approx(0.3133).epsilon(1e-4));
  for (int k : {1, 3, 10}) {
    std::vector<std::vector<double>> same(k, a);
    CHECK(nce_loss(a, a, same, 0.07) == doctest::Approx(std::log(k + 1.0)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(nce_loss(a, a, {}, 0.07), std::invalid_argument);
  CHECK_THROWS_AS(nce_loss(a, a, {{0.0, 1.0}}, 0.0), std::invalid_argument);

  auto t = nce_loss(unit({1, 0}).view({1, 2}), unit({1, 0}).view({1, 2}),
                    unit({0, 1}).view({1, 1, 2}), 1.0);
  CHECK(t.item<double>() == doctest::Approx(0.31326168751822286).epsilon(1e-14));
}

TEST_CASE("contrastive loss falls as the positive aligns") {
  const std::vector<double> a{1.0, 0.0};
  const std::vector<std::vector<double>> negs{{0.0, 1.0}, {-0.6, 0.8}};
  double prev = std::numeric_limits<double>::infinity();
  double best_angle = -1, best = prev;
  for (int step = 0; step <= 72; ++step) {
    const double theta = 2 * M_PI * step / 72.0;
    const double l = nce_loss(a, {std::cos(theta), std::sin(theta)}, negs, 0.07);
    if (step <= 36 && step > 0) CHECK(l > prev - 1e-12);  // rotating away from the anchor
    prev = l;
    if (l < best) {
      best = l;
      best_angle = theta;
    }
  }
  CHECK(best_angle == 0.0);
}

TEST_CASE("perceptual loss") {
  const std::vector<double> img{0.1, 0.2, 0.3};
  std::vector<std::vector<double>> same(36, img);
  CHECK(perceptual_loss(img, same) == 0.0);
  auto one_off = same;
  for (auto& v : one_off[7]) v += 0.6;
  CHECK(perceptual_loss(img, one_off) == doctest::Approx(0.01).epsilon(1e-14));
  auto reordered = one_off;
  std::swap(reordered[7], reordered[30]);
  CHECK(perceptual_loss(img, reordered) == perceptual_loss(img, one_off));
  CHECK_THROWS_AS(perceptual_loss(img, {{0.1, 0.2}}), std::invalid_argument);

  auto t = perceptual_loss(torch::zeros({2, 3}, torch::kDouble),
                           torch::full({2, 36, 3}, 0.5, torch::kDouble));
  CHECK(t.item<double>() == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("combined loss and method defaults") {
  CHECK(combined_loss(0.09, 0.2, 0.1) == doctest::Approx(0.189).epsilon(1e-14));
  CHECK(combined_loss(0.09, 0.2, 1.0) == 0.09);
  CHECK_THROWS_AS(combined_loss(0.1, 0.1, -0.1), std::invalid_argument);
  CHECK(default_lambda(Method::RclPercep) == 0.1);
  CHECK(default_lambda(Method::PirlPercep) == 0.75);
  CHECK(default_lambda(Method::Rcl) == 1.0);
  CHECK(uses_rcl(Method::RclPercep));
  CHECK_FALSE(uses_rcl(Method::PirlPercep));
  CHECK(uses_perceptual(Method::PirlPercep));
  CHECK_FALSE(uses_perceptual(Method::Pirl));
  for (auto m : {Method::Pirl, Method::PirlPercep, Method::Rcl, Method::RclPercep}) {
    CHECK(parse_method(to_string(m)) == m);
  }
}

TEST_CASE("loss report rows") {
  LossReport r;
  r.epoch = 3;
  r.step = 2;
  r.nce_total = 0.5;
  r.perceptual = 0.25;
  r.combined = 0.4375;
  std::ostringstream os;
  r.write_csv(os);
  CHECK(os.str() == "3,2,,,,0.25,0.5,0.4375\n");
  CHECK(std::string(LossReport::csv_header()) ==
        "epoch,step,rcl_image,rcl_patch,rcl_total,perceptual,nce_total,combined");
}

}  // TEST_SUITE

TEST_SUITE("memory_bank") {

TEST_CASE("EMA update renormalises") {
  MemoryBank bank({"a", "b"}, torch::stack({basis(4, 0), basis(4, 2)}), 0.5);
  bank.update_ema("a", basis(4, 1));
  auto row = bank.row("a");
  CHECK(row[0].item<double>() == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(row[1].item<double>() == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(torch::allclose(bank.row("b"), basis(4, 2), 0.0, 1e-11));

  auto before = bank.row("b").clone();
  bank.update_ema("b", before);
  CHECK(torch::allclose(bank.row("b"), before));
  CHECK_THROWS_AS(bank.update_ema("zzz", before), LookupError);
  CHECK_THROWS_AS(bank.row("zzz"), LookupError);
}

TEST_CASE("rows stay unit norm through many updates") {
  torch::manual_seed(9);
  std::vector<std::string> ids;
  for (int i = 0; i < 20; ++i) ids.push_back("img" + std::to_string(i));
  MemoryBank bank(ids, torch::randn({20, 128}));
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    const auto& id = ids[rng.integer(0, 19)];
    bank.update_ema(id, l2_normalize(torch::randn({128})));
  }
  auto norms = bank.entries().norm(2, 1);
  CHECK(torch::allclose(norms, torch::ones_like(norms), 0, 1e-5));
}

TEST_CASE("negative sampling") {
  MemoryBank bank({"a", "b", "c"}, torch::eye(3));
  Rng rng(10);
  auto both = bank.sample_negatives("b", 2, rng);
  std::sort(both.begin(), both.end());
  CHECK(both == std::vector<std::int64_t>{0, 2});
  CHECK_THROWS_AS(bank.sample_negatives("b", 3, rng), std::invalid_argument);

  std::vector<std::string> ids;
  for (int i = 0; i < 50; ++i) ids.push_back(std::to_string(i));
  MemoryBank big(ids, torch::randn({50, 8}));
  for (int t = 0; t < 10000; ++t) {
    auto neg = big.sample_negatives("17", 8, rng);
    std::set<std::int64_t> uniq(neg.begin(), neg.end());
    CHECK(uniq.size() == 8);
    CHECK(uniq.count(17) == 0);
  }
  CHECK(big.gather({3, 4}).sizes() == torch::IntArrayRef({2, 8}));
}

TEST_CASE("bank construction and persistence") {
  CHECK_THROWS_AS(MemoryBank({"a", "a"}, torch::eye(2)), std::invalid_argument);
  CHECK_THROWS_AS(init_bank({}, [](std::size_t) { return torch::ones({4}); }), std::invalid_argument);

  auto embed = [](std::size_t i) { return l2_normalize(torch::arange(4, torch::kFloat) + i); };
  auto a = init_bank({"x", "y", "z"}, embed);
  auto b = init_bank({"x", "y", "z"}, embed);
  CHECK(torch::equal(a.entries(), b.entries()));
  CHECK(torch::allclose(a.row("y"), embed(1)));

  torch::serialize::OutputArchive out;
  a.update_ema("z", embed(0));
  a.save(out);
  std::ostringstream buf;
  out.save_to(buf);
  torch::serialize::InputArchive in;
  std::istringstream is(buf.str());
  in.load_from(is);
  auto back = MemoryBank::load(in);
  CHECK(back.ids() == a.ids());
  CHECK(back.momentum() == a.momentum());
  CHECK(torch::equal(back.entries(), a.entries()));
}

}  // TEST_SUITE
