#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "easz/mask.hpp"
#include "easz/squeeze.hpp"

namespace easz {

inline constexpr std::uint8_t kContainerVersion = 1;

enum class MaskMode : std::uint8_t { explicit_bits = 0, seed = 1 };
enum class CodecId : std::uint8_t { store = 0, external = 1 };

// External codecs are shell command templates. The encoder reads a PGM/PPM
// raster on stdin and writes its bitstream to stdout; the decoder does the
// reverse. "{quality}" is replaced by `quality`.
struct CodecSettings {
  CodecId id = CodecId::store;
  std::string encode_cmd;
  std::string decode_cmd;
  int quality = 75;
};

// Big-endian on the wire, in this order.
struct WireFrame {
  std::uint8_t version = kContainerVersion;
  std::uint32_t orig_height = 0;
  std::uint32_t orig_width = 0;
  std::uint8_t channels = 1;
  std::uint16_t patch_size = 0;     // n
  std::uint8_t subpatch_size = 0;   // b
  std::uint8_t erased_per_row = 0;  // T
  MaskMode mask_mode = MaskMode::explicit_bits;
  std::uint64_t seed = 0;
  std::uint16_t intra_delta = 0;
  std::uint16_t inter_delta = 0;
  CodecId codec = CodecId::store;
  std::vector<std::uint8_t> mask_bytes;  // only in explicit mode
  std::vector<std::uint8_t> payload;

  bool operator==(const WireFrame&) const = default;
};

std::vector<std::uint8_t> serialize_frame(const WireFrame& f);
// Checks magic, version, field ranges and lengths; throws FormatError.
WireFrame parse_frame(std::span<const std::uint8_t> bytes);

// Encodes a squeezed image whose patches all share `mask`. Seed mode needs
// mask.params() (row sampler, all-previous scope, default attempt cap); T = 0
// masks need none.
std::vector<std::uint8_t> encode_container(const SqueezedImage& sq, const EraseMask& mask, MaskMode mode,
                                           const CodecSettings& codec = {});

struct DecodedContainer {
  SqueezedImage squeezed;
  EraseMask mask;
  WireFrame frame;
};

// `codec` supplies the decode command when the payload is external.
DecodedContainer decode_container(std::span<const std::uint8_t> bytes, const CodecSettings& codec = {});

// The shared mask a frame describes (regenerated in seed mode).
EraseMask frame_mask(const WireFrame& f);
SqueezeGeometry frame_geometry(const WireFrame& f);

double bpp(std::uint64_t bytes, std::uint64_t orig_height, std::uint64_t orig_width);

}  // namespace easz
