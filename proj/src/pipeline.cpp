#include "easz/pipeline.hpp"

#include <chrono>

#include "easz/error.hpp"

namespace easz {

namespace {

class StageClock {
 public:
  explicit StageClock(StageTimings* t) : t_(t), start_(std::chrono::steady_clock::now()) {}
  void lap(Stage s) {
    const auto now = std::chrono::steady_clock::now();
    if (t_) t_->set(s, std::chrono::duration<double, std::milli>(now - start_).count());
    start_ = now;
  }

 private:
  StageTimings* t_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::load: return "load";
    case Stage::erase_squeeze: return "erase_squeeze";
    case Stage::codec_encode: return "codec_encode";
    case Stage::transmit: return "transmit";
    case Stage::codec_decode: return "codec_decode";
    case Stage::reconstruct: return "reconstruct";
  }
  return "unknown";
}

bool StageTimings::complete() const {
  for (const auto& v : ms) {
    if (!v) return false;
  }
  return true;
}

double StageTimings::total() const {
  double s = 0.0;
  for (const auto& v : ms) s += v.value_or(0.0);
  return s;
}

void StageTimings::merge(const StageTimings& other) {
  for (std::size_t i = 0; i < kStageCount; ++i) {
    if (other.ms[i]) ms[i] = other.ms[i];
  }
}

EraseMask pipeline_mask(const PipelineConfig& cfg) {
  if (cfg.subpatch_size == 0 || cfg.patch_size % cfg.subpatch_size != 0) {
    throw ParameterError("sub-patch size b=" + std::to_string(cfg.subpatch_size) + " must divide n=" +
                         std::to_string(cfg.patch_size));
  }
  const std::size_t side = cfg.patch_size / cfg.subpatch_size;
  if (cfg.erased_per_row == 0) return EraseMask(side, side, true);
  return generate_row_mask({side, side, cfg.erased_per_row, cfg.intra_delta, cfg.inter_delta, cfg.seed});
}

Squeezed erase_and_squeeze(const Image& img, const PipelineConfig& cfg) {
  const PatchGrid grid = patchify(img, cfg.patch_size, cfg.subpatch_size);
  EraseMask mask = pipeline_mask(cfg);
  SqueezedImage sq = squeeze(grid, std::span<const EraseMask>(&mask, 1));
  return {std::move(sq), std::move(mask)};
}

std::vector<std::uint8_t> compress(const Image& img, const PipelineConfig& cfg, StageTimings* timings) {
  StageClock clock(timings);
  const Squeezed s = erase_and_squeeze(img, cfg);
  clock.lap(Stage::erase_squeeze);
  auto bytes = encode_container(s.image, s.mask, cfg.mask_mode, cfg.codec);
  clock.lap(Stage::codec_encode);
  return bytes;
}

Image decompress(std::span<const std::uint8_t> container, const Reconstructor* model, const CodecSettings& codec,
                 StageTimings* timings) {
  StageClock clock(timings);
  const DecodedContainer d = decode_container(container, codec);
  clock.lap(Stage::codec_decode);
  const std::span<const EraseMask> masks(&d.mask, 1);
  PatchGrid grid = unsqueeze_patches(d.squeezed, masks);
  if (model && d.mask.erased_count() > 0) {
    const auto& mc = model->config();
    const auto& g = d.squeezed.geometry;
    if (mc.subpatch_size != g.subpatch_size || mc.patch_size() != g.patch_size || mc.channels != g.channels) {
      throw ParameterError("model expects n=" + std::to_string(mc.patch_size()) + " b=" +
                           std::to_string(mc.subpatch_size) + " C=" + std::to_string(mc.channels) +
                           ", container has n=" + std::to_string(g.patch_size) + " b=" +
                           std::to_string(g.subpatch_size) + " C=" + std::to_string(g.channels));
    }
    reconstruct_grid(*model, grid, masks);
  }
  Image out = unpatchify(grid).cropped();
  clock.lap(Stage::reconstruct);
  return out;
}

}  // namespace easz
