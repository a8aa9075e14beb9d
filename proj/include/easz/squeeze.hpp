#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "easz/image.hpp"
#include "easz/mask.hpp"

namespace easz {

// Everything needed to undo a squeeze.
struct SqueezeGeometry {
  std::size_t patch_size = 0;     // n
  std::size_t subpatch_size = 0;  // b
  std::size_t erased_per_row = 0; // T
  std::size_t patch_rows = 0;
  std::size_t patch_cols = 0;
  std::size_t channels = 1;
  std::size_t orig_height = 0;
  std::size_t orig_width = 0;

  std::size_t subgrid_side() const { return patch_size / subpatch_size; }
  std::size_t squeezed_patch_width() const { return patch_size - erased_per_row * subpatch_size; }
  std::size_t height() const { return patch_rows * patch_size; }
  std::size_t width() const { return patch_cols * squeezed_patch_width(); }

  bool operator==(const SqueezeGeometry&) const = default;
};

struct SqueezedImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;
  std::vector<std::uint8_t> pixels;
  SqueezeGeometry geometry;

  bool operator==(const SqueezedImage&) const = default;

  // The compacted pixels as a plain raster (for payload codecs).
  Image raster() const;
};

// `masks` holds either one mask shared by every patch or one mask per patch.
// Each mask is (n/b) x (n/b) and every row of every mask must keep the same
// number of sub-patches; kept sub-patches move left within their row.
SqueezedImage squeeze(const PatchGrid& grid, std::span<const EraseMask> masks);

// Restores kept sub-patches to their positions and writes `fill` elsewhere.
PatchGrid unsqueeze_patches(const SqueezedImage& sq, std::span<const EraseMask> masks, std::uint8_t fill = 0);
Image unsqueeze(const SqueezedImage& sq, std::span<const EraseMask> masks, std::uint8_t fill = 0);

// Builds the geometry for a grid + masks pair, validating mask dimensions and
// that every row keeps the same number of sub-patches.
SqueezeGeometry squeeze_geometry(const PatchGrid& grid, std::span<const EraseMask> masks);

namespace ref {
// Serial reference versions; the functions above distribute patches over
// OpenMP threads and must produce identical bytes.
SqueezedImage squeeze(const PatchGrid& grid, std::span<const EraseMask> masks);
PatchGrid unsqueeze_patches(const SqueezedImage& sq, std::span<const EraseMask> masks, std::uint8_t fill = 0);
}  // namespace ref

}  // namespace easz
