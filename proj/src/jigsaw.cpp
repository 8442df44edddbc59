#include "sslus/jigsaw.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "sslus/photometric.hpp"

namespace sslus {

bool PatchLayout::is_focal(int cell) const {
  return std::binary_search(focal.begin(), focal.end(), cell);
}

bool PatchBundle::identity_provenance() const {
  for (int i = 0; i < kPatchCount; ++i) {
    if (provenance[i] != i) return false;
  }
  return true;
}

bool PatchBundle::provenance_is_bijection() const {
  std::array<bool, kPatchCount> seen{};
  for (int p : provenance) {
    if (p < 0 || p >= kPatchCount || seen[p]) return false;
    seen[p] = true;
  }
  return true;
}

PatchLayout focal_layout(GridCell anchor) {
  if (anchor.row < 0 || anchor.row >= kGridSide || anchor.col < 0 || anchor.col >= kGridSide) {
    throw std::invalid_argument("anchor outside the 6x6 grid");
  }
  PatchLayout layout;
  layout.anchor = anchor;
  for (int i = 0; i < kPatchCount; ++i) {
    auto cell = GridCell::from_index(i);
    if (cell.row == anchor.row || cell.col == anchor.col) {
      layout.focal.push_back(i);
    } else {
      layout.nonfocal.push_back(i);
    }
  }
  return layout;
}

PatchLayout select_focal_sets(Rng& rng) {
  return focal_layout(GridCell::from_index(static_cast<int>(rng.integer(0, kPatchCount - 1))));
}

PatchBundle partition_grid(const Image& crop) {
  if (crop.height != crop.width || crop.height % kGridSide != 0) {
    throw std::logic_error("crop must be square with a side divisible by 6");
  }
  const int tile = crop.height / kGridSide;
  PatchBundle bundle;
  bundle.patches.reserve(kPatchCount);
  for (int i = 0; i < kPatchCount; ++i) {
    auto cell = GridCell::from_index(i);
    bundle.patches.push_back(crop_region(crop, cell, tile));
    bundle.provenance[i] = i;
  }
  return bundle;
}

namespace {

void check_bundle(const PatchBundle& bundle) {
  if (bundle.patches.size() != kPatchCount) {
    throw std::invalid_argument("patch bundle must hold 36 patches");
  }
}

Image assemble(const PatchBundle& bundle, bool by_provenance) {
  check_bundle(bundle);
  const int tile = bundle.patches.front().height;
  Image out(tile * kGridSide, tile * kGridSide, 0.0f, bundle.patches.front().id);
  for (int p = 0; p < kPatchCount; ++p) {
    auto cell = GridCell::from_index(by_provenance ? bundle.provenance[p] : p);
    paste(out, bundle.patches[p], cell.row * tile, cell.col * tile);
  }
  return out;
}

// out[dst] <- in[src] for each pair; other positions untouched.
PatchBundle permute(const PatchBundle& in, const std::vector<std::pair<int, int>>& moves) {
  PatchBundle out = in;
  for (auto [dst, src] : moves) {
    out.patches[dst] = in.patches[src];
    out.provenance[dst] = in.provenance[src];
  }
  return out;
}

}  // namespace

Image crop_region(const Image& img, GridCell cell, int tile) {
  return crop(img, Rect{cell.row * tile, cell.col * tile, tile, tile});
}

Image reassemble(const PatchBundle& bundle) { return assemble(bundle, false); }
Image reassemble_by_provenance(const PatchBundle& bundle) { return assemble(bundle, true); }

PatchBundle reverse_focal_row(const PatchBundle& bundle, const PatchLayout& layout) {
  check_bundle(bundle);
  std::vector<std::pair<int, int>> moves;
  const int r = layout.anchor.row;
  for (int j = 0; j < kGridSide; ++j) {
    moves.emplace_back(GridCell{r, j}.index(), GridCell{r, kGridSide - 1 - j}.index());
  }
  return permute(bundle, moves);
}

PatchBundle reverse_focal_column(const PatchBundle& bundle, const PatchLayout& layout) {
  check_bundle(bundle);
  std::vector<std::pair<int, int>> moves;
  const int c = layout.anchor.col;
  for (int i = 0; i < kGridSide; ++i) {
    moves.emplace_back(GridCell{i, c}.index(), GridCell{kGridSide - 1 - i, c}.index());
  }
  return permute(bundle, moves);
}

PatchBundle rotate_focal_patches(const PatchBundle& bundle, const PatchLayout& layout) {
  check_bundle(bundle);
  PatchBundle out = bundle;
  for (int cell : layout.focal) out.patches[cell] = rotate_180(bundle.patches[cell]);
  return out;
}

PatchBundle transform_crosspatch(const PatchBundle& bundle, const PatchLayout& layout, Rng& rng,
                                 CrossPatchMode mode) {
  check_bundle(bundle);
  if (layout.focal.size() + layout.nonfocal.size() != kPatchCount) {
    throw std::invalid_argument("layout does not cover the 6x6 grid");
  }
  if (!bundle.identity_provenance()) {
    throw std::invalid_argument("cross-patch transform expects an untransformed bundle");
  }

  std::vector<int> shuffled = layout.nonfocal;
  std::shuffle(shuffled.begin(), shuffled.end(), rng.engine());
  std::vector<std::pair<int, int>> moves;
  for (std::size_t i = 0; i < shuffled.size(); ++i) moves.emplace_back(layout.nonfocal[i], shuffled[i]);
  PatchBundle out = permute(bundle, moves);

  if (mode == CrossPatchMode::Positional) {
    out = reverse_focal_row(out, layout);
    out = reverse_focal_column(out, layout);
    out = rotate_focal_patches(out, layout);
  } else {
    for (int cell : layout.focal) {
      out.patches[cell] = rotate_180(flip_vertical(flip_horizontal(out.patches[cell])));
    }
  }
  out.layout = layout;
  return out;
}

PatchBundle transform_jigsaw_baseline(const PatchBundle& bundle, Rng& rng) {
  check_bundle(bundle);
  if (!bundle.identity_provenance()) {
    throw std::invalid_argument("jigsaw shuffle expects an untransformed bundle");
  }
  std::vector<int> order(kPatchCount);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng.engine());
  std::vector<std::pair<int, int>> moves;
  for (int p = 0; p < kPatchCount; ++p) moves.emplace_back(p, order[p]);
  return permute(bundle, moves);
}

}  // namespace sslus
