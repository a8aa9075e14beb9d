#pragma once

#include <cstdint>
#include <string>

#include "easz/image.hpp"

namespace easz {

// Mean squared error over 8-bit samples of the original regions.
double mse(const Image& a, const Image& b);
// 10 log10(255^2 / mse); +infinity when the images are identical.
double psnr(const Image& a, const Image& b);

struct SsimOptions {
  std::size_t window = 8;
  double k1 = 0.01;
  double k2 = 0.03;
};
// Mean single-scale SSIM over non-overlapping uniform windows, all channels.
double ssim(const Image& a, const Image& b, const SsimOptions& opt = {});

// (baseline - candidate) / baseline. Negative when the candidate is larger.
double saving_ratio(std::uint64_t baseline_bytes, std::uint64_t candidate_bytes);

// Attention cost in multiply units, excluding the d_model factor.
struct AttentionCost {
  std::uint64_t pixel_token = 0;  // (hw)^2: every pixel a token, global attention
  std::uint64_t two_stage = 0;    // (hw / n^2) patches * ((n/b)^2)^2 per patch = hw n^2 / b^4
  double reduction = 0.0;         // pixel_token / two_stage
};
AttentionCost attn_cost(std::uint64_t h, std::uint64_t w, std::uint64_t n, std::uint64_t b);

struct QualityReport {
  double mse = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
  double bpp = 0.0;
  double saving_ratio = 0.0;
  bool has_rate = false;
};

QualityReport compare(const Image& reference, const Image& candidate);
// key=value lines; psnr prints "inf" for identical inputs.
std::string format_report(const QualityReport& r);

namespace ref {
double mse(const Image& a, const Image& b);
double ssim(const Image& a, const Image& b, const SsimOptions& opt = {});
}  // namespace ref

}  // namespace easz
