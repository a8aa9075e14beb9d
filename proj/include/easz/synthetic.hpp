#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "easz/image.hpp"

namespace easz {

// Planar ramps a + gx*x + gy*y with |gx|, |gy| <= slope per pixel, plus
// Gaussian noise of standard deviation `noise`, clamped to [0, 1].
std::vector<Image> gradient_patches(std::size_t count, std::size_t n, std::size_t channels, std::uint64_t seed,
                                    double noise = 0.05, double slope = 0.04);

// Low-frequency plane waves a + A sin(kx*x + ky*y + phase) plus noise.
std::vector<Image> ripple_patches(std::size_t count, std::size_t n, std::size_t channels, std::uint64_t seed,
                                  double noise = 0.05);

// A w x h test image of smooth shapes and texture; deterministic per seed.
Image synthetic_scene(std::size_t height, std::size_t width, std::size_t channels, std::uint64_t seed);

}  // namespace easz
