#include "easz/squeeze.hpp"

#include <algorithm>
#include <string>

#include "easz/error.hpp"

namespace easz {

namespace {

void check_masks(std::span<const EraseMask> masks, std::size_t side, std::size_t patches) {
  if (masks.empty()) throw GeometryError("no erase mask supplied");
  if (masks.size() != 1 && masks.size() != patches) {
    throw GeometryError("expected 1 shared mask or " + std::to_string(patches) + " per-patch masks, got " +
                        std::to_string(masks.size()));
  }
  for (const auto& m : masks) {
    if (m.rows() != side || m.cols() != side) {
      throw GeometryError("mask is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                          ", sub-patch grid is " + std::to_string(side) + "x" + std::to_string(side));
    }
  }
}

std::size_t uniform_kept_per_row(std::span<const EraseMask> masks) {
  const std::size_t kept = masks.front().kept_in_row(0);
  for (const auto& m : masks) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
      if (m.kept_in_row(r) != kept) {
        throw GeometryError("ragged mask: rows keep " + std::to_string(kept) + " and " +
                            std::to_string(m.kept_in_row(r)) + " sub-patches");
      }
    }
  }
  return kept;
}

const EraseMask& mask_for(std::span<const EraseMask> masks, std::size_t patch) {
  return masks.size() == 1 ? masks.front() : masks[patch];
}

// Copies the kept sub-patches of one patch into the squeezed raster.
void squeeze_patch(const PatchGrid& grid, const EraseMask& mask, std::size_t p, SqueezedImage& out) {
  const auto& g = out.geometry;
  const std::size_t n = g.patch_size, b = g.subpatch_size, c = g.channels, side = g.subgrid_side();
  const std::size_t oy = (p / g.patch_cols) * n;
  const std::size_t ox = (p % g.patch_cols) * g.squeezed_patch_width();
  const auto& patch = grid.patches[p];
  for (std::size_t sr = 0; sr < side; ++sr) {
    std::size_t slot = 0;
    for (std::size_t sc = 0; sc < side; ++sc) {
      if (!mask.kept(sr, sc)) continue;
      for (std::size_t y = 0; y < b; ++y) {
        const std::size_t src = ((sr * b + y) * n + sc * b) * c;
        const std::size_t dst = ((oy + sr * b + y) * out.width + ox + slot * b) * c;
        std::copy_n(patch.begin() + static_cast<std::ptrdiff_t>(src), b * c,
                    out.pixels.begin() + static_cast<std::ptrdiff_t>(dst));
      }
      ++slot;
    }
  }
}

void unsqueeze_patch(const SqueezedImage& sq, const EraseMask& mask, std::size_t p, std::uint8_t fill,
                     std::vector<std::uint8_t>& patch) {
  const auto& g = sq.geometry;
  const std::size_t n = g.patch_size, b = g.subpatch_size, c = g.channels, side = g.subgrid_side();
  const std::size_t oy = (p / g.patch_cols) * n;
  const std::size_t ox = (p % g.patch_cols) * g.squeezed_patch_width();
  patch.assign(n * n * c, fill);
  for (std::size_t sr = 0; sr < side; ++sr) {
    std::size_t slot = 0;
    for (std::size_t sc = 0; sc < side; ++sc) {
      if (!mask.kept(sr, sc)) continue;
      for (std::size_t y = 0; y < b; ++y) {
        const std::size_t dst = ((sr * b + y) * n + sc * b) * c;
        const std::size_t src = ((oy + sr * b + y) * sq.width + ox + slot * b) * c;
        std::copy_n(sq.pixels.begin() + static_cast<std::ptrdiff_t>(src), b * c,
                    patch.begin() + static_cast<std::ptrdiff_t>(dst));
      }
      ++slot;
    }
  }
}

SqueezedImage prepare(const PatchGrid& grid, std::span<const EraseMask> masks) {
  SqueezedImage out;
  out.geometry = squeeze_geometry(grid, masks);
  out.height = out.geometry.height();
  out.width = out.geometry.width();
  out.channels = grid.channels;
  out.pixels.assign(out.height * out.width * out.channels, 0);
  return out;
}

PatchGrid prepare_grid(const SqueezedImage& sq, std::span<const EraseMask> masks) {
  const auto& g = sq.geometry;
  if (g.subpatch_size == 0 || g.patch_size % g.subpatch_size != 0) {
    throw GeometryError("squeezed image carries an invalid patch geometry");
  }
  check_masks(masks, g.subgrid_side(), g.patch_rows * g.patch_cols);
  const std::size_t kept = uniform_kept_per_row(masks);
  if (kept + g.erased_per_row != g.subgrid_side()) {
    throw GeometryError("masks keep " + std::to_string(kept) + " sub-patches per row but the squeezed image keeps " +
                        std::to_string(g.subgrid_side() - g.erased_per_row));
  }
  if (sq.height != g.height() || sq.width != g.width() || sq.channels != g.channels ||
      sq.pixels.size() != sq.height * sq.width * sq.channels) {
    throw GeometryError("squeezed raster does not match its geometry");
  }
  PatchGrid grid;
  grid.patch_size = g.patch_size;
  grid.subpatch_size = g.subpatch_size;
  grid.patch_rows = g.patch_rows;
  grid.patch_cols = g.patch_cols;
  grid.channels = g.channels;
  grid.orig_height = g.orig_height;
  grid.orig_width = g.orig_width;
  grid.patches.resize(grid.patch_count());
  return grid;
}

}  // namespace

Image SqueezedImage::raster() const {
  Image img = Image::blank(height, width, channels);
  img.pixels = pixels;
  return img;
}

SqueezeGeometry squeeze_geometry(const PatchGrid& grid, std::span<const EraseMask> masks) {
  if (grid.patches.size() != grid.patch_count()) throw GeometryError("patch grid is inconsistent");
  const std::size_t side = grid.subgrid_side();
  check_masks(masks, side, grid.patch_count());
  const std::size_t kept = uniform_kept_per_row(masks);
  if (kept == 0) throw GeometryError("mask erases every sub-patch of a row");
  SqueezeGeometry g;
  g.patch_size = grid.patch_size;
  g.subpatch_size = grid.subpatch_size;
  g.erased_per_row = side - kept;
  g.patch_rows = grid.patch_rows;
  g.patch_cols = grid.patch_cols;
  g.channels = grid.channels;
  g.orig_height = grid.orig_height;
  g.orig_width = grid.orig_width;
  return g;
}

namespace ref {

SqueezedImage squeeze(const PatchGrid& grid, std::span<const EraseMask> masks) {
  SqueezedImage out = prepare(grid, masks);
  for (std::size_t p = 0; p < grid.patch_count(); ++p) squeeze_patch(grid, mask_for(masks, p), p, out);
  return out;
}

PatchGrid unsqueeze_patches(const SqueezedImage& sq, std::span<const EraseMask> masks, std::uint8_t fill) {
  PatchGrid grid = prepare_grid(sq, masks);
  for (std::size_t p = 0; p < grid.patch_count(); ++p) {
    unsqueeze_patch(sq, mask_for(masks, p), p, fill, grid.patches[p]);
  }
  return grid;
}

}  // namespace ref

SqueezedImage squeeze(const PatchGrid& grid, std::span<const EraseMask> masks) {
  SqueezedImage out = prepare(grid, masks);
  const auto count = static_cast<std::ptrdiff_t>(grid.patch_count());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < count; ++p) {
    const auto i = static_cast<std::size_t>(p);
    squeeze_patch(grid, mask_for(masks, i), i, out);
  }
  return out;
}

PatchGrid unsqueeze_patches(const SqueezedImage& sq, std::span<const EraseMask> masks, std::uint8_t fill) {
  PatchGrid grid = prepare_grid(sq, masks);
  const auto count = static_cast<std::ptrdiff_t>(grid.patch_count());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < count; ++p) {
    const auto i = static_cast<std::size_t>(p);
    unsqueeze_patch(sq, mask_for(masks, i), i, fill, grid.patches[i]);
  }
  return grid;
}

Image unsqueeze(const SqueezedImage& sq, std::span<const EraseMask> masks, std::uint8_t fill) {
  return unpatchify(unsqueeze_patches(sq, masks, fill));
}

}  // namespace easz
