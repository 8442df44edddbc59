#pragma once

// Slow, obviously-correct reference implementations used to check the
// optimised library code.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <vector>

#include "sslus/image.hpp"

namespace oracle {

inline constexpr double kPi = 3.14159265358979323846;

/// Direct O(H²W²) DFT sum, centre-shifted so DC lands at (H/2, W/2).
inline std::vector<std::complex<double>> dft_shifted(const std::vector<double>& x, int h, int w) {
  std::vector<std::complex<double>> out(static_cast<std::size_t>(h) * w);
  for (int u = 0; u < h; ++u) {
    for (int v = 0; v < w; ++v) {
      std::complex<double> acc = 0.0;
      for (int y = 0; y < h; ++y) {
        for (int xx = 0; xx < w; ++xx) {
          const double ang = -2.0 * kPi * (static_cast<double>(u) * y / h + static_cast<double>(v) * xx / w);
          acc += x[static_cast<std::size_t>(y) * w + xx] * std::polar(1.0, ang);
        }
      }
      const int su = (u + h / 2) % h;
      const int sv = (v + w / 2) % w;
      out[static_cast<std::size_t>(su) * w + sv] = acc;
    }
  }
  return out;
}

/// All-pairs Hausdorff distance over foreground pixels.
inline double hausdorff(const sslus::Mask& a, const sslus::Mask& b) {
  auto points = [](const sslus::Mask& m) {
    std::vector<std::pair<int, int>> p;
    for (int y = 0; y < m.height; ++y)
      for (int x = 0; x < m.width; ++x)
        if (m.at(y, x)) p.emplace_back(y, x);
    return p;
  };
  auto directed = [](const auto& from, const auto& to) {
    double worst = 0.0;
    for (auto [y1, x1] : from) {
      double best = std::numeric_limits<double>::infinity();
      for (auto [y2, x2] : to) {
        best = std::min(best, std::hypot(double(y1 - y2), double(x1 - x2)));
      }
      worst = std::max(worst, best);
    }
    return worst;
  };
  const auto pa = points(a);
  const auto pb = points(b);
  return std::max(directed(pa, pb), directed(pb, pa));
}

/// Number of 4-connected foreground components, by union-find.
inline int components(const sslus::Mask& m) {
  std::vector<int> parent(m.pixels.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  auto unite = [&](int a, int b) { parent[find(a)] = find(b); };
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      if (!m.at(y, x)) continue;
      const int i = y * m.width + x;
      if (x + 1 < m.width && m.at(y, x + 1)) unite(i, i + 1);
      if (y + 1 < m.height && m.at(y + 1, x)) unite(i, i + m.width);
    }
  }
  int n = 0;
  for (int i = 0; i < static_cast<int>(parent.size()); ++i) {
    if (m.pixels[i] && find(i) == i) ++n;
  }
  return n;
}

/// Position-weighted pixel sum. A patch and its 180° rotation give different
/// values, so rotations are visible in multiset comparisons.
inline double checksum(const sslus::Image& img) {
  double s = 0.0;
  for (std::size_t i = 0; i < img.pixels.size(); ++i) s += img.pixels[i] * (1.0 + (i % 7));
  return s;
}

}  // namespace oracle
