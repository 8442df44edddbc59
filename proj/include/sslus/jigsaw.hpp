#pragma once

#include <array>
#include <optional>
#include <vector>

#include "sslus/image.hpp"
#include "sslus/rng.hpp"

namespace sslus {

inline constexpr int kGridSide = 6;
inline constexpr int kPatchCount = kGridSide * kGridSide;
/// Side the crop is resized to before partitioning (6 × 32-pixel tiles).
inline constexpr int kCropSide = 192;

/// Zero-based grid cell; index = row * 6 + col.
struct GridCell {
  int row = 0;
  int col = 0;
  int index() const { return row * kGridSide + col; }
  static GridCell from_index(int i) { return {i / kGridSide, i % kGridSide}; }
  bool operator==(const GridCell&) const = default;
};

/// Anchor cell plus the focal cross (its row and column, 11 cells) and the
/// 25 remaining non-focal cells, both sorted by cell index.
struct PatchLayout {
  GridCell anchor;
  std::vector<int> focal;
  std::vector<int> nonfocal;

  bool is_focal(int cell) const;
};

struct PatchBundle {
  std::vector<Image> patches;  // by output position, row-major
  /// provenance[p] = grid cell the patch at output position p came from.
  std::array<int, kPatchCount> provenance{};
  std::optional<PatchLayout> layout;

  bool identity_provenance() const;
  bool provenance_is_bijection() const;
};

enum class CrossPatchMode {
  /// Focal row and column positions reversed, then each focal patch rotated 180°.
  Positional,
  /// Per-patch FlipH -> FlipV -> Rot180 on pixels, which composes to the identity.
  Literal,
};

PatchLayout focal_layout(GridCell anchor);
PatchLayout select_focal_sets(Rng& rng);

/// Square tile of side `tile` at `cell`.
Image crop_region(const Image& img, GridCell cell, int tile);

/// Splits a square crop whose side is divisible by 6 into 36 tiles.
PatchBundle partition_grid(const Image& crop);
/// Places every patch at its output position.
Image reassemble(const PatchBundle& bundle);
/// Places every patch back at its source cell (inverse of the shuffle).
Image reassemble_by_provenance(const PatchBundle& bundle);

/// Shuffles the non-focal cells and applies the focal transform for `mode`.
PatchBundle transform_crosspatch(const PatchBundle& bundle, const PatchLayout& layout, Rng& rng,
                                 CrossPatchMode mode = CrossPatchMode::Positional);
/// Uniformly shuffles all 36 positions.
PatchBundle transform_jigsaw_baseline(const PatchBundle& bundle, Rng& rng);

/// Building blocks of the positional cross-patch transform. Each is an
/// involution on its own.
PatchBundle reverse_focal_row(const PatchBundle& bundle, const PatchLayout& layout);
PatchBundle reverse_focal_column(const PatchBundle& bundle, const PatchLayout& layout);
PatchBundle rotate_focal_patches(const PatchBundle& bundle, const PatchLayout& layout);

}  // namespace sslus
