#pragma once

#include <random>

#include "easz/image.hpp"

namespace easz::testing {

inline Image random_image(std::size_t h, std::size_t w, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Image img = Image::blank(h, w, c);
  for (auto& v : img.pixels) v = static_cast<std::uint8_t>(rng() & 0xFF);
  return img;
}

}  // namespace easz::testing
