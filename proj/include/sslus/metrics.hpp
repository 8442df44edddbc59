#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "sslus/image.hpp"

namespace sslus {

struct OverlapMetrics {
  double dsc = 0.0;
  double jc = 0.0;
  double ppv = 0.0;
  double rec = 0.0;
};

/// DSC, JC, PPV and recall of `pred` against `truth`. Both empty scores 1 on
/// every metric; exactly one empty scores 0.
OverlapMetrics overlap_metrics(const Mask& pred, const Mask& truth);

struct HausdorffResult {
  double distance = 0.0;
  /// True when exactly one mask was empty and `distance` is the image diagonal.
  bool sentinel = false;
};

/// Symmetric Hausdorff distance between the foreground pixel sets, computed
/// with an exact Euclidean distance transform.
HausdorffResult hausdorff(const Mask& pred, const Mask& truth);

/// Squared Euclidean distance from every pixel to the nearest foreground pixel
/// of `mask` (infinity when the mask is empty).
std::vector<double> squared_distance_transform(const Mask& mask);

struct ImageMetrics {
  std::string id;
  double dsc = 0.0;
  double jc = 0.0;
  double hd = 0.0;
  double ppv = 0.0;
  double rec = 0.0;
  bool hd_sentinel = false;
};

struct MetricSummary {
  double mean = 0.0;
  double sd = 0.0;  // population
};

struct MetricsReport {
  std::vector<ImageMetrics> per_image;
  MetricSummary dsc, jc, hd, ppv, rec;

  void add(const ImageMetrics& m) { per_image.push_back(m); }
  /// Recomputes the aggregate rows from per_image.
  void finalize();
  /// `id,dsc,jc,hd,ppv,rec` rows followed by `mean` and `sd` summary rows.
  void write_csv(std::ostream& os) const;
  void write_csv(const std::filesystem::path& path) const;
};

ImageMetrics score_image(const std::string& id, const Mask& pred, const Mask& truth);
MetricSummary summarize(const std::vector<double>& values);

/// Grayscale image with over-segmentation in red, under-segmentation in green
/// and the ground-truth contour in yellow.
void write_overlay_png(const std::filesystem::path& path, const Image& image, const Mask& pred,
                       const Mask& truth);

}  // namespace sslus
