#pragma once

#include <vector>

#include "sslus/image.hpp"
#include "sslus/rng.hpp"

namespace sslus {

/// Jitter ranges. Brightness/contrast/saturation factors are drawn from
/// [1-x, 1+x]; hue shift from [-hue, +hue] turns of the hue circle.
struct JitterSpec {
  double brightness = 0.4;
  double contrast = 0.4;
  double saturation = 0.4;
  double hue = 0.4;
  double flip_prob = 0.5;

  void validate() const;
  static JitterSpec none() { return {0.0, 0.0, 0.0, 0.0, 0.0}; }
};

/// One concrete draw of jitter factors.
struct JitterParams {
  double brightness = 1.0;
  double contrast = 1.0;
  double saturation = 1.0;
  double hue = 0.0;
};

JitterParams sample_jitter(const JitterSpec& spec, Rng& rng);

/// Applies brightness -> contrast -> saturation -> hue, clipping to [0,1]
/// after each step.
Image apply_jitter(const Image& img, const JitterParams& params);

Image flip_horizontal(const Image& img);
Image flip_vertical(const Image& img);
Image rotate_180(const Image& img);

/// Transform t1: independent H/V flips with `flip_prob`, then colour jitter.
Image apply_t1(const Image& img, const JitterSpec& spec, Rng& rng);

/// Per-patch part of t2: an independent jitter draw for every patch.
std::vector<Image> apply_t2_patch_jitter(const std::vector<Image>& patches,
                                         const JitterSpec& spec, Rng& rng);

}  // namespace sslus
