#include "doctest_torch.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "sslus/data.hpp"
#include "sslus/metrics.hpp"
#include "sslus/rng.hpp"

using namespace sslus;

namespace {

Mask from_points(int h, int w, std::initializer_list<std::pair<int, int>> pts) {
  Mask m(h, w);
  for (auto [y, x] : pts) m.at(y, x) = 1;
  return m;
}

Mask random_mask(int h, int w, Rng& rng) {
  Mask m(h, w);
  const double p = rng.uniform(0.02, 0.6);
  for (auto& v : m.pixels) v = rng.bernoulli(p) ? 1 : 0;
  return m;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("overlap metrics by hand") {
  const auto p = from_points(4, 4, {{0, 0}, {0, 1}, {1, 0}, {1, 1}});
  CHECK(overlap_metrics(p, p).dsc == 1.0);
  CHECK(overlap_metrics(p, p).jc == 1.0);

  const auto t = from_points(4, 4, {{1, 0}, {1, 1}, {2, 0}, {2, 1}});
  const auto m = overlap_metrics(p, t);
  CHECK(m.dsc == doctest::Approx(0.5));
  CHECK(m.jc == doctest::Approx(2.0 / 6.0));
  CHECK(m.ppv == doctest::Approx(0.5));
  CHECK(m.rec == doctest::Approx(0.5));

  const auto far = from_points(4, 4, {{3, 3}});
  const auto d = overlap_metrics(p, far);
  CHECK(d.dsc == 0.0);
  CHECK(d.jc == 0.0);
  CHECK(d.ppv == 0.0);
  CHECK(d.rec == 0.0);
  CHECK_THROWS_AS(overlap_metrics(Mask(4, 4), Mask(4, 5)), std::invalid_argument);
}

TEST_CASE("empty mask conventions") {
  const Mask empty(8, 8);
  const auto both = score_image("e", empty, empty);
  CHECK(both.dsc == 1.0);
  CHECK(both.jc == 1.0);
  CHECK(both.ppv == 1.0);
  CHECK(both.rec == 1.0);
  CHECK(both.hd == 0.0);
  CHECK_FALSE(both.hd_sentinel);

  const auto one = score_image("o", from_points(8, 8, {{2, 2}}), empty);
  CHECK(one.dsc == 0.0);
  CHECK(one.rec == 0.0);
  CHECK(one.hd == doctest::Approx(std::hypot(8.0, 8.0)));
  CHECK(one.hd_sentinel);
  CHECK(hausdorff(empty, from_points(8, 8, {{2, 2}})).sentinel);
}

TEST_CASE("Hausdorff by hand") {
  CHECK(hausdorff(from_points(8, 8, {{0, 0}}), from_points(8, 8, {{3, 4}})).distance == 5.0);
  const auto two = from_points(12, 12, {{0, 0}, {10, 0}});
  const auto one = from_points(12, 12, {{0, 0}});
  CHECK(hausdorff(two, one).distance == 10.0);
  CHECK(hausdorff(one, two).distance == 10.0);
  CHECK(hausdorff(two, two).distance == 0.0);
}

TEST_CASE("distance transform matches brute force") {
  Rng rng(41);
  for (int t = 0; t < 50; ++t) {
    const auto m = random_mask(13, 17, rng);
    if (m.foreground() == 0) continue;
    const auto dt = squared_distance_transform(m);
    for (int y = 0; y < 13; ++y) {
      for (int x = 0; x < 17; ++x) {
        double best = std::numeric_limits<double>::infinity();
        for (int yy = 0; yy < 13; ++yy)
          for (int xx = 0; xx < 17; ++xx)
            if (m.at(yy, xx)) best = std::min(best, double((y - yy) * (y - yy) + (x - xx) * (x - xx)));
        CHECK(dt[y * 17 + x] == best);
      }
    }
  }
}

TEST_CASE("random pairs: Hausdorff oracle, symmetry and overlap identities") {
  Rng rng(42);
  for (int t = 0; t < 200; ++t) {
    const auto a = random_mask(16, 16, rng);
    const auto b = random_mask(16, 16, rng);
    if (a.foreground() && b.foreground()) {
      CHECK(hausdorff(a, b).distance == oracle::hausdorff(a, b));
      CHECK(hausdorff(a, b).distance == hausdorff(b, a).distance);
    }
    const auto m = overlap_metrics(a, b);
    CHECK(m.jc <= m.dsc);
    CHECK(m.dsc == doctest::Approx(2 * m.jc / (1 + m.jc)).epsilon(1e-12));
    if (m.ppv + m.rec > 0) {
      CHECK(m.dsc == doctest::Approx(2 * m.ppv * m.rec / (m.ppv + m.rec)).epsilon(1e-12));
    }
  }
}

TEST_CASE("summary uses population standard deviation") {
  const auto s = summarize({0.8, 1.0});
  CHECK(s.mean == doctest::Approx(0.9));
  CHECK(s.sd == doctest::Approx(0.1));
  CHECK(summarize({0.7}).sd == 0.0);
}

TEST_CASE("report rows and csv") {
  MetricsReport r;
  const auto m = from_points(8, 8, {{1, 1}, {1, 2}});
  r.add(score_image("a", m, m));
  r.add(score_image("b", m, from_points(8, 8, {{1, 1}})));
  r.finalize();
  CHECK(r.per_image.size() == 2);
  CHECK(r.dsc.mean == doctest::Approx((1.0 + 2.0 / 3.0) / 2));
  CHECK(r.dsc.sd >= 0.0);

  std::ostringstream os;
  r.write_csv(os);
  std::istringstream is(os.str());
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(is, line)) lines.push_back(line);
  REQUIRE(lines.size() == 5);
  CHECK(lines[0] == "id,dsc,jc,hd,ppv,rec");
  CHECK(lines[1].rfind("a,1,1,0,1,1", 0) == 0);
  CHECK(lines[3].rfind("mean,", 0) == 0);
  CHECK(lines[4].rfind("sd,", 0) == 0);

  MetricsReport single;
  single.add(score_image("x", m, m));
  single.finalize();
  CHECK(single.dsc.mean == 1.0);
  CHECK(single.dsc.sd == 0.0);
}

TEST_CASE("overlay image") {
  const auto path = std::filesystem::temp_directory_path() / "sslus_overlay.png";
  Image img(32, 32, 0.4f);
  Mask truth(32, 32), pred(32, 32);
  for (int y = 8; y < 20; ++y)
    for (int x = 8; x < 20; ++x) truth.at(y, x) = 1;
  for (int y = 12; y < 24; ++y)
    for (int x = 12; x < 24; ++x) pred.at(y, x) = 1;
  write_overlay_png(path, img, pred, truth);
  const auto back = load_image(path);
  CHECK(back.height == 32);
  // Over-segmented pixel is red, under-segmented pixel is green.
  CHECK(back.at(0, 22, 22) > back.at(1, 22, 22));
  CHECK(back.at(1, 10, 10) > back.at(0, 10, 10));
}

}  // TEST_SUITE
