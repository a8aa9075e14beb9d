#include "easz/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "easz/rng.hpp"

namespace easz {

namespace {

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

}  // namespace

std::vector<Image> gradient_patches(std::size_t count, std::size_t n, std::size_t channels, std::uint64_t seed,
                                    double noise, double slope) {
  std::mt19937_64 rng(derive_seed(seed, 0x6EAD));
  std::uniform_real_distribution<double> unit(0.0, 1.0), sym(-1.0, 1.0);
  std::normal_distribution<double> jitter(0.0, noise);
  const double centre = (static_cast<double>(n) - 1.0) / 2.0;
  std::vector<Image> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Image img = Image::blank(n, n, channels);
    for (std::size_t c = 0; c < channels; ++c) {
      const double a = unit(rng), gx = sym(rng) * slope, gy = sym(rng) * slope;
      for (std::size_t y = 0; y < n; ++y) {
        for (std::size_t x = 0; x < n; ++x) {
          const double v = a + gx * (static_cast<double>(x) - centre) + gy * (static_cast<double>(y) - centre);
          img.at(y, x, c) = to_byte(v + jitter(rng));
        }
      }
    }
    out.push_back(std::move(img));
  }
  return out;
}

std::vector<Image> ripple_patches(std::size_t count, std::size_t n, std::size_t channels, std::uint64_t seed,
                                  double noise) {
  std::mt19937_64 rng(derive_seed(seed, 0x4199));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> jitter(0.0, noise);
  std::vector<Image> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Image img = Image::blank(n, n, channels);
    for (std::size_t c = 0; c < channels; ++c) {
      const double base = 0.3 + 0.4 * unit(rng), amp = 0.15 + 0.15 * unit(rng);
      const double angle = 2.0 * std::numbers::pi * unit(rng);
      const double freq = (0.15 + 0.25 * unit(rng)) * 8.0 / static_cast<double>(n);
      const double kx = freq * std::cos(angle), ky = freq * std::sin(angle);
      const double phase = 2.0 * std::numbers::pi * unit(rng);
      for (std::size_t y = 0; y < n; ++y) {
        for (std::size_t x = 0; x < n; ++x) {
          const double v = base + amp * std::sin(kx * static_cast<double>(x) + ky * static_cast<double>(y) + phase);
          img.at(y, x, c) = to_byte(v + jitter(rng));
        }
      }
    }
    out.push_back(std::move(img));
  }
  return out;
}

Image synthetic_scene(std::size_t height, std::size_t width, std::size_t channels, std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, 0x5CE));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  struct Blob {
    double cy, cx, r, level[3];
  };
  std::vector<Blob> blobs(6);
  for (auto& b : blobs) {
    b.cy = unit(rng) * static_cast<double>(height);
    b.cx = unit(rng) * static_cast<double>(width);
    b.r = (0.1 + 0.25 * unit(rng)) * static_cast<double>(std::min(height, width));
    for (double& l : b.level) l = unit(rng);
  }
  std::normal_distribution<double> jitter(0.0, 0.02);
  Image img = Image::blank(height, width, channels);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      for (std::size_t c = 0; c < channels; ++c) {
        double v = 0.2 + 0.5 * static_cast<double>(x + y * (c + 1)) / static_cast<double>(width + height * (c + 1));
        for (const auto& b : blobs) {
          const double dy = static_cast<double>(y) - b.cy, dx = static_cast<double>(x) - b.cx;
          if (dy * dy + dx * dx < b.r * b.r) v = 0.5 * v + 0.5 * b.level[c];
        }
        v += 0.05 * std::sin(static_cast<double>(x) * 0.7) * std::cos(static_cast<double>(y) * 0.5);
        img.at(y, x, c) = to_byte(v + jitter(rng));
      }
    }
  }
  return img;
}

}  // namespace easz
