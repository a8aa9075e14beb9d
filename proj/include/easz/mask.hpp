#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace easz {

// How far back the distance constraints look.
enum class ConstraintScope : std::uint8_t {
  all_previous,  // every earlier sample of the row / every sample of the previous row
  last_sample,   // only the most recent sample of the row / of the previous row
};

struct SamplerParams {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t samples_per_row = 0;  // T
  std::size_t intra_delta = 1;      // same-row separation must exceed this
  std::size_t inter_delta = 1;      // separation from the previous row must exceed this
  std::uint64_t seed = 0;
  std::size_t max_attempts = 1000;
  ConstraintScope scope = ConstraintScope::all_previous;

  bool operator==(const SamplerParams&) const = default;
};

inline constexpr std::size_t kDefaultMaxAttempts = 1000;

// Binary matrix over the sub-patch grid: 1 = kept, 0 = erased.
class EraseMask {
 public:
  EraseMask() = default;
  EraseMask(std::size_t rows, std::size_t cols, bool value = true);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t cells() const { return rows_ * cols_; }

  bool kept(std::size_t r, std::size_t c) const { return bits_[r * cols_ + c] != 0; }
  void set(std::size_t r, std::size_t c, bool keep) { bits_[r * cols_ + c] = keep ? 1 : 0; }
  bool kept(std::size_t flat) const { return bits_[flat] != 0; }

  std::size_t kept_in_row(std::size_t r) const;
  std::size_t kept_count() const;
  std::size_t erased_count() const { return cells() - kept_count(); }
  std::vector<std::size_t> erased_columns(std::size_t r) const;
  // Flat indices (r * cols + c) in raster order.
  std::vector<std::size_t> kept_positions() const;
  std::vector<std::size_t> erased_positions() const;

  const std::optional<SamplerParams>& params() const { return params_; }
  void set_params(const SamplerParams& p) { params_ = p; }

  // Equality compares geometry and bits only, not provenance.
  bool operator==(const EraseMask& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && bits_ == other.bits_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> bits_;
  std::optional<SamplerParams> params_;
};

// Throws ParameterError when the row sampler cannot be run with `p`:
// T = 0, T > cols, T * (delta + 1) > cols, Delta >= cols, or no pair of rows can
// satisfy the intra- and inter-row constraints against each other.
void validate_params(const SamplerParams& p);
bool params_feasible(const SamplerParams& p);

// Row-based conditional sampler. Each row erases exactly T columns that stay
// more than `intra_delta` apart and more than `inter_delta` away from the
// previous row's erased columns. Deterministic in `p.seed`.
EraseMask generate_row_mask(const SamplerParams& p);

// Unconstrained baseline: exactly `erased` cells chosen uniformly without
// replacement.
EraseMask generate_random_mask(std::size_t rows, std::size_t cols, std::size_t erased, std::uint64_t seed);

// Row-major, most significant bit first, zero padded to a byte boundary.
std::vector<std::uint8_t> pack_mask(const EraseMask& m);
EraseMask unpack_mask(std::span<const std::uint8_t> bytes, std::size_t rows, std::size_t cols);
inline std::size_t packed_mask_bytes(std::size_t rows, std::size_t cols) { return (rows * cols + 7) / 8; }

// True if every row of `m` honours the constraints of `p` (count, intra, inter).
bool satisfies_constraints(const EraseMask& m, const SamplerParams& p);

}  // namespace easz
