#pragma once

#include <vector>

#include "sslus/image.hpp"
#include "sslus/rng.hpp"

namespace sslus {

/// Real-valued H×W plane in row-major order.
struct Plane {
  int height = 0;
  int width = 0;
  std::vector<double> values;

  Plane() = default;
  Plane(int h, int w, double fill = 0.0)
      : height(h), width(w), values(static_cast<std::size_t>(h) * w, fill) {}
  double& at(int y, int x) { return values[static_cast<std::size_t>(y) * width + x]; }
  double at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// Complex H×W array. As a spectrum it is centre-shifted: DC sits at
/// (H/2, W/2) using integer division.
struct ComplexSpectrum {
  int height = 0;
  int width = 0;
  std::vector<double> real;
  std::vector<double> imag;

  ComplexSpectrum() = default;
  ComplexSpectrum(int h, int w)
      : height(h), width(w), real(static_cast<std::size_t>(h) * w, 0.0),
        imag(static_cast<std::size_t>(h) * w, 0.0) {}
  std::size_t index(int u, int v) const { return static_cast<std::size_t>(u) * width + v; }
};

/// Unnormalised 2-D DFT, centre-shifted. Throws on non-finite input or a side < 2.
ComplexSpectrum forward_dft(const Plane& plane);
/// Inverse of forward_dft (includes the 1/(HW) factor and the un-shift).
/// The result is a spatial complex array in natural order.
ComplexSpectrum inverse_dft(const ComplexSpectrum& spectrum);

struct AmplitudePhase {
  Plane amplitude;
  Plane phase;  // atan2(imag, real), in (-pi, pi]
};
AmplitudePhase amplitude_phase(const ComplexSpectrum& spectrum);

/// Circular band-stop plus optional diagonal (X-shaped) stop bands outside it.
/// Radii are pixel distances in the centre-shifted spectrum.
struct FrequencyFilterSpec {
  double band_inner_radius = 10.0;
  double band_outer_radius = 10.0;
  double x_thickness = 0.0;
  bool x_enabled = false;

  static constexpr double kMinRadius = 10.0;
  static constexpr double kMaxRadius = 100.0;
  static constexpr double kMaxThickness = 10.0;
  static constexpr double kXThreshold = 20.0;

  void validate() const;
};

/// Binary mask over a centre-shifted spectrum; 1 = keep.
struct FilterMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> values;

  std::uint8_t at(int u, int v) const { return values[static_cast<std::size_t>(u) * width + v]; }
  std::size_t zeros() const;
  /// mask[u,v] == mask[(2cu-u) mod H, (2cv-v) mod W] for every bin.
  bool point_symmetric() const;
};

FrequencyFilterSpec sample_filter_spec(Rng& rng);
FilterMask build_filter_mask(const FrequencyFilterSpec& spec, int height, int width);

/// Random crop covering 50-100% of each dimension.
Rect sample_crop_rect(int height, int width, Rng& rng);

/// Multiplies a spectrum by the mask in place.
void apply_mask(ComplexSpectrum& spectrum, const FilterMask& mask);
/// Σ (mask·|F|)² over all bins.
double retained_energy(const ComplexSpectrum& spectrum, const FilterMask& mask);

struct FilterResult {
  Image image;
  double max_imag_residual = 0.0;
};

/// Filters each channel of the crop region through the mask and writes the
/// real part back; pixels outside the crop are untouched. Values are clipped
/// to [0,1] on write-back.
FilterResult apply_frequency_filter(const Image& img, const FrequencyFilterSpec& spec,
                                    const Rect& crop);

/// Same as above, with an explicit mask (used by tests and the preview tool).
FilterResult apply_frequency_mask(const Image& img, const FilterMask& mask, const Rect& crop);

/// log(1 + |F|) of the first channel, scaled to [0,1], for visualisation.
Plane log_amplitude(const Plane& plane);

}  // namespace sslus
