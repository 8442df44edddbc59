#include "sslus/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <torch/torch.h>

namespace sslus {

std::size_t Mask::foreground() const {
  return static_cast<std::size_t>(std::count(pixels.begin(), pixels.end(), std::uint8_t{1}));
}

void validate_image(const Image& img, int min_side) {
  if (img.height < min_side || img.width < min_side) {
    throw std::invalid_argument("image '" + img.id + "' is smaller than " +
                                std::to_string(min_side) + " pixels on a side");
  }
  if (img.pixels.size() != static_cast<std::size_t>(Image::kChannels) * img.plane_size()) {
    throw std::invalid_argument("image '" + img.id + "' has inconsistent pixel storage");
  }
  for (float v : img.pixels) {
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
      throw std::invalid_argument("image '" + img.id + "' has values outside [0,1]");
    }
  }
}

Image crop(const Image& img, const Rect& rect) {
  if (!rect.inside(img.height, img.width)) {
    throw std::invalid_argument("crop rectangle out of bounds");
  }
  Image out(rect.height, rect.width, 0.0f, img.id);
  for (int c = 0; c < Image::kChannels; ++c) {
    for (int y = 0; y < rect.height; ++y) {
      const float* src = &img.pixels[(static_cast<std::size_t>(c) * img.height + rect.y + y) *
                                         img.width + rect.x];
      std::copy(src, src + rect.width, &out.at(c, y, 0));
    }
  }
  return out;
}

void paste(Image& dst, const Image& src, int y, int x) {
  if (!Rect{y, x, src.height, src.width}.inside(dst.height, dst.width)) {
    throw std::invalid_argument("paste target out of bounds");
  }
  for (int c = 0; c < Image::kChannels; ++c) {
    for (int r = 0; r < src.height; ++r) {
      const float* row = src.pixels.data() + (static_cast<std::size_t>(c) * src.height + r) * src.width;
      std::copy(row, row + src.width, &dst.at(c, y + r, x));
    }
  }
}

Image from_gray(const std::vector<float>& plane, int h, int w, std::string id) {
  if (plane.size() != static_cast<std::size_t>(h) * w) {
    throw std::invalid_argument("gray plane size does not match dimensions");
  }
  Image out(h, w, 0.0f, std::move(id));
  for (int c = 0; c < Image::kChannels; ++c) {
    std::copy(plane.begin(), plane.end(), out.pixels.begin() + c * out.plane_size());
  }
  return out;
}

std::vector<float> luminance(const Image& img) {
  // ITU-R 601 weights, the same ones torchvision's rgb_to_grayscale uses.
  std::vector<float> out(img.plane_size());
  const std::size_t n = img.plane_size();
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = 0.299f * img.pixels[i] + 0.587f * img.pixels[n + i] + 0.114f * img.pixels[2 * n + i];
  }
  return out;
}

torch::Tensor to_tensor(const Image& img) {
  return torch::from_blob(const_cast<float*>(img.pixels.data()),
                          {Image::kChannels, img.height, img.width}, torch::kFloat32)
      .clone();
}

Image from_tensor(const torch::Tensor& chw, std::string id) {
  auto t = chw.detach().to(torch::kCPU, torch::kFloat32).contiguous();
  if (t.dim() != 3 || t.size(0) != Image::kChannels) {
    throw std::invalid_argument("expected a [3,H,W] tensor");
  }
  Image out(static_cast<int>(t.size(1)), static_cast<int>(t.size(2)), 0.0f, std::move(id));
  std::copy(t.data_ptr<float>(), t.data_ptr<float>() + t.numel(), out.pixels.begin());
  return out;
}

torch::Tensor to_tensor(const Mask& mask) {
  auto t = torch::empty({mask.height, mask.width}, torch::kInt64);
  auto* dst = t.data_ptr<std::int64_t>();
  std::transform(mask.pixels.begin(), mask.pixels.end(), dst,
                 [](std::uint8_t v) { return static_cast<std::int64_t>(v); });
  return t;
}

}  // namespace sslus
