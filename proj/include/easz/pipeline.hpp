#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "easz/container.hpp"
#include "easz/image.hpp"
#include "easz/mask.hpp"
#include "easz/model.hpp"
#include "easz/squeeze.hpp"

namespace easz {

enum class Stage : std::uint8_t { load, erase_squeeze, codec_encode, transmit, codec_decode, reconstruct };
inline constexpr std::size_t kStageCount = 6;
std::string_view stage_name(Stage s);

// Wall time per stage in milliseconds; unset stages were not run.
struct StageTimings {
  std::array<std::optional<double>, kStageCount> ms{};

  void set(Stage s, double v) { ms[static_cast<std::size_t>(s)] = v; }
  std::optional<double> get(Stage s) const { return ms[static_cast<std::size_t>(s)]; }
  bool complete() const;
  double total() const;
  // Copies the stages that are set in `other`.
  void merge(const StageTimings& other);
};

struct PipelineConfig {
  std::size_t patch_size = 32;    // n
  std::size_t subpatch_size = 4;  // b
  std::size_t erased_per_row = 2; // T; 0 keeps everything
  std::size_t intra_delta = 1;
  std::size_t inter_delta = 1;
  std::uint64_t seed = 0;
  MaskMode mask_mode = MaskMode::explicit_bits;
  CodecSettings codec;
};

// The shared row-sampler mask for `cfg` (all ones when T = 0).
EraseMask pipeline_mask(const PipelineConfig& cfg);

struct Squeezed {
  SqueezedImage image;
  EraseMask mask;
};
Squeezed erase_and_squeeze(const Image& img, const PipelineConfig& cfg);

// erase_and_squeeze + encode_container. Fills load-independent edge stages.
std::vector<std::uint8_t> compress(const Image& img, const PipelineConfig& cfg, StageTimings* timings = nullptr);

// decode_container -> unsqueeze -> reconstruct -> unpatchify. Without a model
// erased sub-patches keep the zero fill. `codec` supplies external decode
// commands.
Image decompress(std::span<const std::uint8_t> container, const Reconstructor* model, const CodecSettings& codec = {},
                 StageTimings* timings = nullptr);

}  // namespace easz
