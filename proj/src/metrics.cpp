#include "sslus/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "sslus/errors.hpp"

namespace sslus {

namespace {
void require_same_shape(const Mask& a, const Mask& b) {
  if (a.height != b.height || a.width != b.width) {
    throw std::invalid_argument("mask shapes differ");
  }
}
}  // namespace

OverlapMetrics overlap_metrics(const Mask& pred, const Mask& truth) {
  require_same_shape(pred, truth);
  std::size_t p = 0, t = 0, both = 0;
  for (std::size_t i = 0; i < pred.pixels.size(); ++i) {
    const bool a = pred.pixels[i] != 0, b = truth.pixels[i] != 0;
    p += a;
    t += b;
    both += a && b;
  }
  if (p == 0 && t == 0) return {1.0, 1.0, 1.0, 1.0};
  if (p == 0 || t == 0) return {0.0, 0.0, 0.0, 0.0};
  const double inter = static_cast<double>(both);
  return {2.0 * inter / static_cast<double>(p + t), inter / static_cast<double>(p + t - both),
          inter / static_cast<double>(p), inter / static_cast<double>(t)};
}

namespace {

// Felzenszwalb-Huttenlocher lower envelope of parabolas; exact for integer
// grids because every quantity stays an integer-valued double.
void edt_1d(const double* f, double* d, int n, std::vector<int>& v, std::vector<double>& z) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == inf) continue;
    if (k < 0) {
      v[0] = q;
      z[0] = -inf;
      z[1] = inf;
      k = 0;
      continue;
    }
    double s;
    for (;;) {
      const int p = v[k];
      s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
      if (s > z[k] || k == 0) break;
      --k;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  if (k < 0) {
    std::fill(d, d + n, inf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double diff = q - v[j];
    d[q] = diff * diff + f[v[j]];
  }
}

}  // namespace

std::vector<double> squared_distance_transform(const Mask& mask) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const int h = mask.height, w = mask.width;
  std::vector<double> grid(static_cast<std::size_t>(h) * w);
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = mask.pixels[i] ? 0.0 : inf;

  const int n = std::max(h, w);
  std::vector<double> f(n), d(n), z(n + 1);
  std::vector<int> v(n);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) f[y] = grid[static_cast<std::size_t>(y) * w + x];
    edt_1d(f.data(), d.data(), h, v, z);
    for (int y = 0; y < h; ++y) grid[static_cast<std::size_t>(y) * w + x] = d[y];
  }
  for (int y = 0; y < h; ++y) {
    double* row = &grid[static_cast<std::size_t>(y) * w];
    std::copy(row, row + w, f.begin());
    edt_1d(f.data(), d.data(), w, v, z);
    std::copy(d.begin(), d.begin() + w, row);
  }
  return grid;
}

HausdorffResult hausdorff(const Mask& pred, const Mask& truth) {
  require_same_shape(pred, truth);
  const std::size_t np = pred.foreground(), nt = truth.foreground();
  if (np == 0 && nt == 0) return {0.0, false};
  if (np == 0 || nt == 0) {
    return {std::hypot(static_cast<double>(pred.height), static_cast<double>(pred.width)), true};
  }
  auto directed = [](const Mask& from, const std::vector<double>& dist_to) {
    double worst = 0.0;
    for (std::size_t i = 0; i < from.pixels.size(); ++i) {
      if (from.pixels[i]) worst = std::max(worst, dist_to[i]);
    }
    return worst;
  };
  const double d2 = std::max(directed(pred, squared_distance_transform(truth)),
                             directed(truth, squared_distance_transform(pred)));
  return {std::sqrt(d2), false};
}

ImageMetrics score_image(const std::string& id, const Mask& pred, const Mask& truth) {
  const auto o = overlap_metrics(pred, truth);
  const auto h = hausdorff(pred, truth);
  return {id, o.dsc, o.jc, h.distance, o.ppv, o.rec, h.sentinel};
}

MetricSummary summarize(const std::vector<double>& values) {
  if (values.empty()) return {};
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / n)};
}

void MetricsReport::finalize() {
  auto column = [this](double ImageMetrics::*field) {
    std::vector<double> v;
    v.reserve(per_image.size());
    for (const auto& m : per_image) v.push_back(m.*field);
    return summarize(v);
  };
  dsc = column(&ImageMetrics::dsc);
  jc = column(&ImageMetrics::jc);
  hd = column(&ImageMetrics::hd);
  ppv = column(&ImageMetrics::ppv);
  rec = column(&ImageMetrics::rec);
}

void MetricsReport::write_csv(std::ostream& os) const {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::setprecision(10);
  os << "id,dsc,jc,hd,ppv,rec\n";
  for (const auto& m : per_image) {
    os << m.id << ',' << m.dsc << ',' << m.jc << ',' << m.hd << ','
       << m.ppv << ',' << m.rec << '\n';
  }
  os << "mean," << dsc.mean << ',' << jc.mean << ',' << hd.mean << ',' << ppv.mean << ','
     << rec.mean << '\n';
  os << "sd," << dsc.sd << ',' << jc.sd << ',' << hd.sd << ',' << ppv.sd << ',' << rec.sd << '\n';
  os.flags(flags);
  os.precision(prec);
}

void MetricsReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_csv(out);
}

void write_overlay_png(const std::filesystem::path& path, const Image& image, const Mask& pred,
                       const Mask& truth) {
  require_same_shape(pred, truth);
  if (image.height != pred.height || image.width != pred.width) {
    throw std::invalid_argument("overlay image and mask shapes differ");
  }
  const auto gray = luminance(image);
  cv::Mat canvas(image.height, image.width, CV_8UC3);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const auto g = static_cast<std::uint8_t>(
          std::lround(std::clamp(gray[y * image.width + x], 0.0f, 1.0f) * 255.0f));
      cv::Vec3b px{g, g, g};
      const bool p = pred.at(y, x), t = truth.at(y, x);
      if (p && !t) px = cv::Vec3b{0, 0, 255};  // over-segmentation, BGR red
      if (!p && t) px = cv::Vec3b{0, 255, 0};  // under-segmentation, green
      canvas.at<cv::Vec3b>(y, x) = px;
    }
  }
  cv::Mat t8(truth.height, truth.width, CV_8UC1);
  for (int y = 0; y < truth.height; ++y) {
    for (int x = 0; x < truth.width; ++x) t8.at<std::uint8_t>(y, x) = truth.at(y, x) ? 255 : 0;
  }
  std::vector<std::vector<cv::Point>> contours;
  cv::findContours(t8, contours, cv::RETR_EXTERNAL, cv::CHAIN_APPROX_NONE);
  cv::drawContours(canvas, contours, -1, cv::Scalar(0, 255, 255), 1);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), canvas)) throw IoError("cannot write " + path.string());
}

}  // namespace sslus
