#include "sslus/frequency.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <stdexcept>

#include <fftw3.h>

namespace sslus {

namespace {

// fftw planner calls are not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n)
      : data(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))) {
    if (!data) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  fftw_complex* data;
};

// Unnormalised in-place 2-D transform.
void transform(FftwBuffer& buf, int h, int w, int sign) {
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_2d(h, w, buf.data, buf.data, sign, FFTW_ESTIMATE);
  }
  if (!plan) throw std::runtime_error("fftw planning failed");
  fftw_execute(plan);
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(plan);
}

// Index in natural order of the bin stored at shifted position p.
int unshift(int p, int n) { return (p + (n - n / 2)) % n; }

}  // namespace

ComplexSpectrum forward_dft(const Plane& plane) {
  if (plane.height < 2 || plane.width < 2) {
    throw std::invalid_argument("forward_dft needs at least 2x2 input");
  }
  const int h = plane.height, w = plane.width;
  FftwBuffer buf(plane.values.size());
  for (std::size_t i = 0; i < plane.values.size(); ++i) {
    if (!std::isfinite(plane.values[i])) throw std::invalid_argument("non-finite DFT input");
    buf.data[i][0] = plane.values[i];
    buf.data[i][1] = 0.0;
  }
  transform(buf, h, w, FFTW_FORWARD);

  ComplexSpectrum out(h, w);
  for (int u = 0; u < h; ++u) {
    const int su = unshift(u, h);
    for (int v = 0; v < w; ++v) {
      const std::size_t src = static_cast<std::size_t>(su) * w + unshift(v, w);
      out.real[out.index(u, v)] = buf.data[src][0];
      out.imag[out.index(u, v)] = buf.data[src][1];
    }
  }
  return out;
}

ComplexSpectrum inverse_dft(const ComplexSpectrum& spectrum) {
  const int h = spectrum.height, w = spectrum.width;
  if (h < 2 || w < 2) throw std::invalid_argument("inverse_dft needs at least 2x2 input");
  FftwBuffer buf(static_cast<std::size_t>(h) * w);
  for (int u = 0; u < h; ++u) {
    const int su = unshift(u, h);
    for (int v = 0; v < w; ++v) {
      const std::size_t dst = static_cast<std::size_t>(su) * w + unshift(v, w);
      buf.data[dst][0] = spectrum.real[spectrum.index(u, v)];
      buf.data[dst][1] = spectrum.imag[spectrum.index(u, v)];
    }
  }
  transform(buf, h, w, FFTW_BACKWARD);
  const double scale = 1.0 / (static_cast<double>(h) * w);
  ComplexSpectrum out(h, w);
  for (std::size_t i = 0; i < out.real.size(); ++i) {
    out.real[i] = buf.data[i][0] * scale;
    out.imag[i] = buf.data[i][1] * scale;
  }
  return out;
}

AmplitudePhase amplitude_phase(const ComplexSpectrum& spectrum) {
  AmplitudePhase out{Plane(spectrum.height, spectrum.width), Plane(spectrum.height, spectrum.width)};
  for (std::size_t i = 0; i < spectrum.real.size(); ++i) {
    out.amplitude.values[i] = std::hypot(spectrum.real[i], spectrum.imag[i]);
    out.phase.values[i] = std::atan2(spectrum.imag[i], spectrum.real[i]);
    // atan2 returns -pi for (negative, -0.0); fold onto the half-open range.
    if (out.phase.values[i] <= -M_PI) out.phase.values[i] = M_PI;
  }
  return out;
}

void FrequencyFilterSpec::validate() const {
  if (band_inner_radius < kMinRadius || band_outer_radius > kMaxRadius ||
      band_outer_radius < band_inner_radius) {
    throw std::invalid_argument("band radii must satisfy 10 <= inner <= outer <= 100");
  }
  if (x_thickness < 0 || x_thickness > kMaxThickness) {
    throw std::invalid_argument("x_thickness must lie in [0,10]");
  }
  if (x_enabled && band_outer_radius <= kXThreshold) {
    throw std::invalid_argument("X filter requires an outer radius above 20");
  }
}

std::size_t FilterMask::zeros() const {
  return static_cast<std::size_t>(std::count(values.begin(), values.end(), std::uint8_t{0}));
}

bool FilterMask::point_symmetric() const {
  const int cu = height / 2, cv = width / 2;
  for (int u = 0; u < height; ++u) {
    const int mu = ((2 * cu - u) % height + height) % height;
    for (int v = 0; v < width; ++v) {
      const int mv = ((2 * cv - v) % width + width) % width;
      if (at(u, v) != at(mu, mv)) return false;
    }
  }
  return true;
}

FrequencyFilterSpec sample_filter_spec(Rng& rng) {
  using S = FrequencyFilterSpec;
  double a = rng.uniform(S::kMinRadius, S::kMaxRadius);
  double b = rng.uniform(S::kMinRadius, S::kMaxRadius);
  double thickness = rng.uniform(0.0, S::kMaxThickness);
  FrequencyFilterSpec spec;
  spec.band_inner_radius = std::min(a, b);
  spec.band_outer_radius = std::max(a, b);
  spec.x_enabled = spec.band_outer_radius > S::kXThreshold;
  spec.x_thickness = spec.x_enabled ? thickness : 0.0;
  return spec;
}

FilterMask build_filter_mask(const FrequencyFilterSpec& spec, int height, int width) {
  spec.validate();
  FilterMask mask{height, width, std::vector<std::uint8_t>(static_cast<std::size_t>(height) * width, 1)};
  const int cu = height / 2, cv = width / 2;
  const double half = spec.x_thickness / 2.0;
  for (int u = 0; u < height; ++u) {
    for (int v = 0; v < width; ++v) {
      const double du = u - cu, dv = v - cv;
      const double r = std::sqrt(du * du + dv * dv);
      if (r < FrequencyFilterSpec::kMinRadius) continue;
      bool stop = r >= spec.band_inner_radius && r <= spec.band_outer_radius;
      if (!stop && spec.x_enabled && r > spec.band_outer_radius) {
        const double d1 = std::abs(du - dv) / std::sqrt(2.0);
        const double d2 = std::abs(du + dv) / std::sqrt(2.0);
        stop = d1 < half || d2 < half;
      }
      if (stop) mask.values[static_cast<std::size_t>(u) * width + v] = 0;
    }
  }
  // Even sides: row/column 0 hold the Nyquist bins, whose mirror is themselves
  // modulo the size, so the construction above is already point-symmetric.
  return mask;
}

Rect sample_crop_rect(int height, int width, Rng& rng) {
  const int h = static_cast<int>(std::lround(rng.uniform(0.5, 1.0) * height));
  const int w = static_cast<int>(std::lround(rng.uniform(0.5, 1.0) * width));
  const int ch = std::clamp(h, 2, height);
  const int cw = std::clamp(w, 2, width);
  const int y = static_cast<int>(rng.integer(0, height - ch));
  const int x = static_cast<int>(rng.integer(0, width - cw));
  return {y, x, ch, cw};
}

void apply_mask(ComplexSpectrum& spectrum, const FilterMask& mask) {
  if (spectrum.height != mask.height || spectrum.width != mask.width) {
    throw std::invalid_argument("mask and spectrum shapes differ");
  }
  for (std::size_t i = 0; i < mask.values.size(); ++i) {
    if (!mask.values[i]) {
      spectrum.real[i] = 0.0;
      spectrum.imag[i] = 0.0;
    }
  }
}

double retained_energy(const ComplexSpectrum& spectrum, const FilterMask& mask) {
  if (spectrum.height != mask.height || spectrum.width != mask.width) {
    throw std::invalid_argument("mask and spectrum shapes differ");
  }
  double e = 0.0;
  for (std::size_t i = 0; i < mask.values.size(); ++i) {
    if (mask.values[i]) e += spectrum.real[i] * spectrum.real[i] + spectrum.imag[i] * spectrum.imag[i];
  }
  return e;
}

FilterResult apply_frequency_mask(const Image& img, const FilterMask& mask, const Rect& crop) {
  if (!crop.inside(img.height, img.width)) throw std::invalid_argument("crop out of bounds");
  if (mask.height != crop.height || mask.width != crop.width) {
    throw std::invalid_argument("mask shape does not match crop");
  }
  FilterResult result{img, 0.0};
  for (int c = 0; c < Image::kChannels; ++c) {
    Plane plane(crop.height, crop.width);
    for (int y = 0; y < crop.height; ++y) {
      for (int x = 0; x < crop.width; ++x) plane.at(y, x) = img.at(c, crop.y + y, crop.x + x);
    }
    auto spectrum = forward_dft(plane);
    apply_mask(spectrum, mask);
    auto spatial = inverse_dft(spectrum);
    for (int y = 0; y < crop.height; ++y) {
      for (int x = 0; x < crop.width; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * crop.width + x;
        result.max_imag_residual = std::max(result.max_imag_residual, std::abs(spatial.imag[i]));
        result.image.at(c, crop.y + y, crop.x + x) =
            static_cast<float>(std::clamp(spatial.real[i], 0.0, 1.0));
      }
    }
  }
  if (result.max_imag_residual >= 1e-6) {
    throw std::logic_error("frequency filter produced a complex image; mask is not symmetric");
  }
  return result;
}

FilterResult apply_frequency_filter(const Image& img, const FrequencyFilterSpec& spec,
                                    const Rect& crop) {
  if (!crop.inside(img.height, img.width)) throw std::invalid_argument("crop out of bounds");
  return apply_frequency_mask(img, build_filter_mask(spec, crop.height, crop.width), crop);
}

Plane log_amplitude(const Plane& plane) {
  auto ap = amplitude_phase(forward_dft(plane));
  Plane out(plane.height, plane.width);
  double mx = 0.0;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = std::log1p(ap.amplitude.values[i]);
    mx = std::max(mx, out.values[i]);
  }
  if (mx > 0) {
    for (auto& v : out.values) v /= mx;
  }
  return out;
}

}  // namespace sslus
