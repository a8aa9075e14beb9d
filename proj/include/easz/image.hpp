#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace easz {

// 8-bit raster, row-major with interleaved channels. `orig_height` and
// `orig_width` track the region that carries real content when the raster
// has been padded.
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;
  std::vector<std::uint8_t> pixels;
  std::size_t orig_height = 0;
  std::size_t orig_width = 0;

  static Image blank(std::size_t h, std::size_t w, std::size_t c, std::uint8_t value = 0);

  std::size_t index(std::size_t y, std::size_t x, std::size_t c = 0) const {
    return (y * width + x) * channels + c;
  }
  std::uint8_t at(std::size_t y, std::size_t x, std::size_t c = 0) const { return pixels[index(y, x, c)]; }
  std::uint8_t& at(std::size_t y, std::size_t x, std::size_t c = 0) { return pixels[index(y, x, c)]; }

  // Throws GeometryError if the invariants on sizes do not hold.
  void validate() const;

  // Copy of the original (unpadded) region.
  Image cropped() const;

  bool operator==(const Image&) const = default;
};

// Binary PGM (P5) / PPM (P6) with maxval 255.
Image load_raster(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> store_raster(const Image& img);

Image read_raster_file(const std::string& path);
void write_raster_file(const std::string& path, const Image& img);

// Image split into non-overlapping n x n patches, each of which is further
// divided into b x b sub-patches (the unit of erasure and tokenization).
struct PatchGrid {
  std::size_t patch_size = 0;     // n
  std::size_t subpatch_size = 0;  // b
  std::size_t patch_rows = 0;
  std::size_t patch_cols = 0;
  std::size_t channels = 1;
  std::size_t orig_height = 0;
  std::size_t orig_width = 0;
  // Row-major list of n*n*C blocks.
  std::vector<std::vector<std::uint8_t>> patches;

  std::size_t subgrid_side() const { return patch_size / subpatch_size; }
  std::size_t padded_height() const { return patch_rows * patch_size; }
  std::size_t padded_width() const { return patch_cols * patch_size; }
  std::size_t patch_count() const { return patch_rows * patch_cols; }
  std::size_t patch_bytes() const { return patch_size * patch_size * channels; }
};

// Pads by edge replication up to multiples of n.
PatchGrid patchify(const Image& img, std::size_t n, std::size_t b);
Image unpatchify(const PatchGrid& grid);

// A single patch as a standalone n x n image.
Image patch_image(const PatchGrid& grid, std::size_t index);

}  // namespace easz
