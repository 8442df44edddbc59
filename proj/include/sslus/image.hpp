#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <torch/types.h>

namespace sslus {

/// Planar 3-channel float image, values in [0,1]. Layout is channel-major
/// (C, H, W) so that it maps onto a torch tensor without reordering.
struct Image {
  static constexpr int kChannels = 3;

  int height = 0;
  int width = 0;
  std::vector<float> pixels;
  std::string id;

  Image() = default;
  Image(int h, int w, float fill = 0.0f, std::string image_id = {})
      : height(h), width(w),
        pixels(static_cast<std::size_t>(kChannels) * h * w, fill),
        id(std::move(image_id)) {}

  float& at(int c, int y, int x) {
    return pixels[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  const float& at(int c, int y, int x) const {
    return pixels[(static_cast<std::size_t>(c) * height + y) * width + x];
  }

  std::size_t plane_size() const { return static_cast<std::size_t>(height) * width; }
  bool empty() const { return pixels.empty(); }
};

/// Binary segmentation mask with values in {0,1}.
struct Mask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;
  std::string id;

  Mask() = default;
  Mask(int h, int w, std::uint8_t fill = 0, std::string mask_id = {})
      : height(h), width(w), pixels(static_cast<std::size_t>(h) * w, fill),
        id(std::move(mask_id)) {}

  std::uint8_t& at(int y, int x) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  const std::uint8_t& at(int y, int x) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

  std::size_t foreground() const;
};

/// Axis-aligned rectangle in pixel coordinates.
struct Rect {
  int y = 0;
  int x = 0;
  int height = 0;
  int width = 0;

  bool inside(int img_h, int img_w) const {
    return y >= 0 && x >= 0 && height > 0 && width > 0 && y + height <= img_h &&
           x + width <= img_w;
  }
};

/// Throws std::invalid_argument when a value is non-finite or outside [0,1],
/// or when either side is shorter than `min_side`.
void validate_image(const Image& img, int min_side = 32);

Image crop(const Image& img, const Rect& rect);
void paste(Image& dst, const Image& src, int y, int x);

/// Replicates a single H×W plane into all three channels.
Image from_gray(const std::vector<float>& plane, int h, int w, std::string id = {});
std::vector<float> luminance(const Image& img);

/// [3,H,W] float tensor (owning copy).
torch::Tensor to_tensor(const Image& img);
Image from_tensor(const torch::Tensor& chw, std::string id = {});
torch::Tensor to_tensor(const Mask& mask);

}  // namespace sslus
