#include "sslus/photometric.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sslus {

void JitterSpec::validate() const {
  if (brightness < 0 || contrast < 0 || saturation < 0 || hue < 0) {
    throw std::invalid_argument("jitter factors must be non-negative");
  }
  if (hue > 0.5) throw std::invalid_argument("hue jitter must be <= 0.5");
  if (flip_prob < 0 || flip_prob > 1) throw std::invalid_argument("flip_prob must be in [0,1]");
}

JitterParams sample_jitter(const JitterSpec& spec, Rng& rng) {
  // Always draw four numbers so the stream advances the same way for any spec.
  JitterParams p;
  p.brightness = rng.uniform(std::max(0.0, 1.0 - spec.brightness), 1.0 + spec.brightness);
  p.contrast = rng.uniform(std::max(0.0, 1.0 - spec.contrast), 1.0 + spec.contrast);
  p.saturation = rng.uniform(std::max(0.0, 1.0 - spec.saturation), 1.0 + spec.saturation);
  p.hue = rng.uniform(-spec.hue, spec.hue);
  if (spec.brightness == 0) p.brightness = 1.0;
  if (spec.contrast == 0) p.contrast = 1.0;
  if (spec.saturation == 0) p.saturation = 1.0;
  if (spec.hue == 0) p.hue = 0.0;
  return p;
}

namespace {

float clip01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

void blend(Image& img, const std::vector<float>& other_plane, double factor, bool per_pixel) {
  const std::size_t n = img.plane_size();
  for (int c = 0; c < Image::kChannels; ++c) {
    float* ch = img.pixels.data() + c * n;
    for (std::size_t i = 0; i < n; ++i) {
      double ref = per_pixel ? other_plane[i] : other_plane[0];
      ch[i] = clip01(factor * ch[i] + (1.0 - factor) * ref);
    }
  }
}

void shift_hue(Image& img, double shift) {
  const std::size_t n = img.plane_size();
  float* r = img.pixels.data();
  float* g = r + n;
  float* b = g + n;
  for (std::size_t i = 0; i < n; ++i) {
    double rv = r[i], gv = g[i], bv = b[i];
    double mx = std::max({rv, gv, bv});
    double mn = std::min({rv, gv, bv});
    double delta = mx - mn;
    if (delta <= 0.0) continue;  // gray pixel: hue undefined, nothing to rotate
    double h;
    if (mx == rv) {
      h = std::fmod((gv - bv) / delta, 6.0);
    } else if (mx == gv) {
      h = (bv - rv) / delta + 2.0;
    } else {
      h = (rv - gv) / delta + 4.0;
    }
    h /= 6.0;
    h = h + shift;
    h -= std::floor(h);
    const double s = delta / mx;
    const double v = mx;
    const double h6 = h * 6.0;
    const int sector = static_cast<int>(std::floor(h6)) % 6;
    const double f = h6 - std::floor(h6);
    const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
    double nr, ng, nb;
    switch (sector) {
      case 0: nr = v; ng = t; nb = p; break;
      case 1: nr = q; ng = v; nb = p; break;
      case 2: nr = p; ng = v; nb = t; break;
      case 3: nr = p; ng = q; nb = v; break;
      case 4: nr = t; ng = p; nb = v; break;
      default: nr = v; ng = p; nb = q; break;
    }
    r[i] = clip01(nr);
    g[i] = clip01(ng);
    b[i] = clip01(nb);
  }
}

}  // namespace

Image apply_jitter(const Image& img, const JitterParams& params) {
  Image out = img;
  if (params.brightness != 1.0) {
    for (auto& v : out.pixels) v = clip01(params.brightness * v);
  }
  if (params.contrast != 1.0) {
    auto lum = luminance(out);
    double mean = std::accumulate(lum.begin(), lum.end(), 0.0) / static_cast<double>(lum.size());
    blend(out, {static_cast<float>(mean)}, params.contrast, false);
  }
  if (params.saturation != 1.0) {
    blend(out, luminance(out), params.saturation, true);
  }
  if (params.hue != 0.0) shift_hue(out, params.hue);
  return out;
}

Image flip_horizontal(const Image& img) {
  Image out = img;
  for (int c = 0; c < Image::kChannels; ++c) {
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) out.at(c, y, x) = img.at(c, y, img.width - 1 - x);
    }
  }
  return out;
}

Image flip_vertical(const Image& img) {
  Image out = img;
  for (int c = 0; c < Image::kChannels; ++c) {
    for (int y = 0; y < img.height; ++y) {
      std::copy(&img.at(c, img.height - 1 - y, 0), &img.at(c, img.height - 1 - y, 0) + img.width,
                &out.at(c, y, 0));
    }
  }
  return out;
}

Image rotate_180(const Image& img) {
  Image out = img;
  const std::size_t n = img.plane_size();
  for (int c = 0; c < Image::kChannels; ++c) {
    std::reverse(out.pixels.begin() + c * n, out.pixels.begin() + (c + 1) * n);
  }
  return out;
}

Image apply_t1(const Image& img, const JitterSpec& spec, Rng& rng) {
  const bool hflip = rng.bernoulli(spec.flip_prob);
  const bool vflip = rng.bernoulli(spec.flip_prob);
  Image out = img;
  if (hflip) out = flip_horizontal(out);
  if (vflip) out = flip_vertical(out);
  return apply_jitter(out, sample_jitter(spec, rng));
}

std::vector<Image> apply_t2_patch_jitter(const std::vector<Image>& patches,
                                         const JitterSpec& spec, Rng& rng) {
  if (patches.empty()) throw std::invalid_argument("patch list is empty");
  std::vector<Image> out;
  out.reserve(patches.size());
  for (const auto& p : patches) out.push_back(apply_jitter(p, sample_jitter(spec, rng)));
  return out;
}

}  // namespace sslus
