#include "easz/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <vector>

#include "easz/error.hpp"

namespace easz {

namespace {

void same_dims(const Image& a, const Image& b) {
  if (a.orig_height != b.orig_height || a.orig_width != b.orig_width || a.channels != b.channels) {
    throw DimensionError("image dimensions differ: " + std::to_string(a.orig_height) + "x" +
                         std::to_string(a.orig_width) + "x" + std::to_string(a.channels) + " vs " +
                         std::to_string(b.orig_height) + "x" + std::to_string(b.orig_width) + "x" +
                         std::to_string(b.channels));
  }
}

double row_squared_error(const Image& a, const Image& b, std::size_t y) {
  double s = 0.0;
  const std::size_t len = a.orig_width * a.channels;
  const std::uint8_t* pa = a.pixels.data() + a.index(y, 0);
  const std::uint8_t* pb = b.pixels.data() + b.index(y, 0);
  for (std::size_t i = 0; i < len; ++i) {
    const double d = static_cast<double>(pa[i]) - static_cast<double>(pb[i]);
    s += d * d;
  }
  return s;
}

double window_ssim(const Image& a, const Image& b, std::size_t y0, std::size_t x0, std::size_t ch,
                   const SsimOptions& opt) {
  const double c1 = (opt.k1 * 255.0) * (opt.k1 * 255.0);
  const double c2 = (opt.k2 * 255.0) * (opt.k2 * 255.0);
  const double n = static_cast<double>(opt.window * opt.window);
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (std::size_t y = y0; y < y0 + opt.window; ++y) {
    for (std::size_t x = x0; x < x0 + opt.window; ++x) {
      const double va = a.at(y, x, ch), vb = b.at(y, x, ch);
      sa += va;
      sb += vb;
      saa += va * va;
      sbb += vb * vb;
      sab += va * vb;
    }
  }
  const double ma = sa / n, mb = sb / n;
  const double var_a = saa / n - ma * ma, var_b = sbb / n - mb * mb, cov = sab / n - ma * mb;
  return ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
}

struct WindowGrid {
  std::size_t rows, cols;
};

WindowGrid ssim_windows(const Image& a, const Image& b, const SsimOptions& opt) {
  same_dims(a, b);
  if (opt.window == 0 || a.orig_height < opt.window || a.orig_width < opt.window) {
    throw DimensionError("ssim window " + std::to_string(opt.window) + " larger than image " +
                         std::to_string(a.orig_height) + "x" + std::to_string(a.orig_width));
  }
  return {a.orig_height / opt.window, a.orig_width / opt.window};
}

}  // namespace

namespace ref {

double mse(const Image& a, const Image& b) {
  same_dims(a, b);
  double s = 0.0;
  for (std::size_t y = 0; y < a.orig_height; ++y) s += row_squared_error(a, b, y);
  return s / static_cast<double>(a.orig_height * a.orig_width * a.channels);
}

double ssim(const Image& a, const Image& b, const SsimOptions& opt) {
  const auto grid = ssim_windows(a, b, opt);
  double total = 0.0;
  for (std::size_t wy = 0; wy < grid.rows; ++wy) {
    for (std::size_t wx = 0; wx < grid.cols; ++wx) {
      for (std::size_t ch = 0; ch < a.channels; ++ch) total += window_ssim(a, b, wy * opt.window, wx * opt.window, ch, opt);
    }
  }
  return total / static_cast<double>(grid.rows * grid.cols * a.channels);
}

}  // namespace ref

// The parallel versions compute per-row / per-window terms independently and
// reduce them serially in index order, so results match the reference bit for bit.
double mse(const Image& a, const Image& b) {
  same_dims(a, b);
  std::vector<double> rows(a.orig_height);
  const auto h = static_cast<std::ptrdiff_t>(a.orig_height);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t y = 0; y < h; ++y) rows[static_cast<std::size_t>(y)] = row_squared_error(a, b, static_cast<std::size_t>(y));
  double s = 0.0;
  for (double r : rows) s += r;
  return s / static_cast<double>(a.orig_height * a.orig_width * a.channels);
}

double ssim(const Image& a, const Image& b, const SsimOptions& opt) {
  const auto grid = ssim_windows(a, b, opt);
  const std::size_t per_row = grid.cols * a.channels;
  std::vector<double> values(grid.rows * per_row);
  const auto rows = static_cast<std::ptrdiff_t>(grid.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t wy = 0; wy < rows; ++wy) {
    const auto r = static_cast<std::size_t>(wy);
    for (std::size_t wx = 0; wx < grid.cols; ++wx) {
      for (std::size_t ch = 0; ch < a.channels; ++ch) {
        values[r * per_row + wx * a.channels + ch] = window_ssim(a, b, r * opt.window, wx * opt.window, ch, opt);
      }
    }
  }
  double total = 0.0;
  for (double v : values) total += v;
  return total / static_cast<double>(values.size());
}

double psnr(const Image& a, const Image& b) {
  const double m = mse(a, b);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / m);
}

double saving_ratio(std::uint64_t baseline_bytes, std::uint64_t candidate_bytes) {
  if (baseline_bytes == 0) throw ParameterError("saving ratio needs a non-zero baseline size");
  return (static_cast<double>(baseline_bytes) - static_cast<double>(candidate_bytes)) /
         static_cast<double>(baseline_bytes);
}

AttentionCost attn_cost(std::uint64_t h, std::uint64_t w, std::uint64_t n, std::uint64_t b) {
  if (h == 0 || w == 0 || n == 0 || b == 0) throw ParameterError("attention cost needs positive dimensions");
  if (n % b != 0) throw ParameterError("sub-patch size b must divide patch size n");
  if (h % n != 0 || w % n != 0) throw ParameterError("patch size n must divide the image dimensions");
  const std::uint64_t hw = h * w;
  if (hw > std::numeric_limits<std::uint32_t>::max()) throw ParameterError("image too large for 64-bit cost counts");
  const std::uint64_t patches = hw / (n * n);
  const std::uint64_t tokens = (n / b) * (n / b);
  AttentionCost c;
  c.pixel_token = hw * hw;
  c.two_stage = patches * tokens * tokens;
  c.reduction = static_cast<double>(c.pixel_token) / static_cast<double>(c.two_stage);
  return c;
}

QualityReport compare(const Image& reference, const Image& candidate) {
  QualityReport r;
  r.mse = mse(reference, candidate);
  r.psnr = r.mse == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(255.0 * 255.0 / r.mse);
  r.ssim = ssim(reference, candidate);
  return r;
}

std::string format_report(const QualityReport& r) {
  auto num = [](double v) {
    if (std::isinf(v)) return std::string(v > 0 ? "inf" : "-inf");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::string(buf);
  };
  std::string out = "mse=" + num(r.mse) + "\npsnr=" + num(r.psnr) + "\nssim=" + num(r.ssim) + "\n";
  if (r.has_rate) out += "bpp=" + num(r.bpp) + "\nsaving_ratio=" + num(r.saving_ratio) + "\n";
  return out;
}

}  // namespace easz
