#include "easz/container.hpp"

#include <limits>

#include "easz/byte_io.hpp"
#include "easz/error.hpp"
#include "easz/subprocess.hpp"

namespace easz {

namespace {

constexpr char kMagic[4] = {'E', 'A', 'S', 'Z'};

template <typename T>
T narrow(std::size_t v, const char* field) {
  if (v > std::numeric_limits<T>::max()) {
    throw ParameterError(std::string(field) + " = " + std::to_string(v) + " does not fit the container header");
  }
  return static_cast<T>(v);
}

void check_fields(const WireFrame& f) {
  if (f.version != kContainerVersion) {
    throw FormatError("unsupported container version " + std::to_string(f.version));
  }
  if (f.orig_height == 0 || f.orig_width == 0) throw FormatError("zero image dimension in header");
  if (f.channels != 1 && f.channels != 3) throw FormatError("channels must be 1 or 3, got " + std::to_string(f.channels));
  if (f.subpatch_size == 0 || f.patch_size < f.subpatch_size || f.patch_size % f.subpatch_size != 0) {
    throw FormatError("bad patch geometry n=" + std::to_string(f.patch_size) + " b=" + std::to_string(f.subpatch_size));
  }
  const std::size_t side = f.patch_size / f.subpatch_size;
  if (f.erased_per_row >= side) {
    throw FormatError("T=" + std::to_string(f.erased_per_row) + " erases whole rows of a " + std::to_string(side) +
                      "-wide grid");
  }
  if (f.mask_mode != MaskMode::explicit_bits && f.mask_mode != MaskMode::seed) {
    throw FormatError("unknown mask_mode " + std::to_string(static_cast<int>(f.mask_mode)));
  }
  if (f.codec != CodecId::store && f.codec != CodecId::external) {
    throw FormatError("unknown codec_id " + std::to_string(static_cast<int>(f.codec)));
  }
  const std::size_t expect = f.mask_mode == MaskMode::explicit_bits ? packed_mask_bytes(side, side) : 0;
  if (f.mask_bytes.size() != expect) {
    throw FormatError("mask_bytes length " + std::to_string(f.mask_bytes.size()) + ", expected " + std::to_string(expect));
  }
}

std::string quality_cmd(const std::string& tmpl, int quality, const char* which) {
  if (tmpl.empty()) throw CodecError(std::string("external codec needs a ") + which + " command");
  return substitute(tmpl, "quality", std::to_string(quality));
}

std::vector<std::uint8_t> run_codec(const std::string& cmd, std::span<const std::uint8_t> input) {
  auto r = run_process(cmd, input);
  if (r.exit_code != 0) {
    throw CodecError("codec command '" + cmd + "' exited with " + std::to_string(r.exit_code) +
                     (r.err.empty() ? std::string() : ": " + r.err));
  }
  return std::move(r.out);
}

}  // namespace

std::vector<std::uint8_t> serialize_frame(const WireFrame& f) {
  check_fields(f);
  ByteWriter w;
  w.str(std::string_view(kMagic, 4));
  w.u8(f.version);
  w.be32(f.orig_height);
  w.be32(f.orig_width);
  w.u8(f.channels);
  w.be16(f.patch_size);
  w.u8(f.subpatch_size);
  w.u8(f.erased_per_row);
  w.u8(static_cast<std::uint8_t>(f.mask_mode));
  w.be64(f.seed);
  w.be16(f.intra_delta);
  w.be16(f.inter_delta);
  w.u8(static_cast<std::uint8_t>(f.codec));
  w.bytes(f.mask_bytes);
  w.be64(f.payload.size());
  w.bytes(f.payload);
  return std::move(w).take();
}

WireFrame parse_frame(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const auto magic = r.bytes(4, "magic");
  if (!std::equal(magic.begin(), magic.end(), kMagic)) throw FormatError("bad magic: not an EASZ container");
  WireFrame f;
  f.version = r.u8("version");
  if (f.version != kContainerVersion) throw FormatError("unsupported container version " + std::to_string(f.version));
  f.orig_height = r.be32("orig_height");
  f.orig_width = r.be32("orig_width");
  f.channels = r.u8("channels");
  f.patch_size = r.be16("n");
  f.subpatch_size = r.u8("b");
  f.erased_per_row = r.u8("T");
  f.mask_mode = static_cast<MaskMode>(r.u8("mask_mode"));
  f.seed = r.be64("seed");
  f.intra_delta = r.be16("delta");
  f.inter_delta = r.be16("Delta");
  f.codec = static_cast<CodecId>(r.u8("codec_id"));
  if (f.mask_mode == MaskMode::explicit_bits && f.subpatch_size != 0 && f.patch_size % f.subpatch_size == 0) {
    const std::size_t side = f.patch_size / f.subpatch_size;
    const auto m = r.bytes(packed_mask_bytes(side, side), "mask_bytes");
    f.mask_bytes.assign(m.begin(), m.end());
  }
  check_fields(f);
  const std::uint64_t len = r.be64("payload_len");
  if (len != r.remaining()) {
    throw FormatError("payload_len " + std::to_string(len) + " but " + std::to_string(r.remaining()) +
                      " payload bytes follow");
  }
  const auto p = r.bytes(static_cast<std::size_t>(len), "payload");
  f.payload.assign(p.begin(), p.end());
  return f;
}

SqueezeGeometry frame_geometry(const WireFrame& f) {
  check_fields(f);
  SqueezeGeometry g;
  g.patch_size = f.patch_size;
  g.subpatch_size = f.subpatch_size;
  g.erased_per_row = f.erased_per_row;
  g.channels = f.channels;
  g.orig_height = f.orig_height;
  g.orig_width = f.orig_width;
  g.patch_rows = (g.orig_height + g.patch_size - 1) / g.patch_size;
  g.patch_cols = (g.orig_width + g.patch_size - 1) / g.patch_size;
  return g;
}

EraseMask frame_mask(const WireFrame& f) {
  check_fields(f);
  const std::size_t side = f.patch_size / f.subpatch_size;
  if (f.mask_mode == MaskMode::explicit_bits) {
    EraseMask m = unpack_mask(f.mask_bytes, side, side);
    for (std::size_t r = 0; r < side; ++r) {
      if (m.kept_in_row(r) != side - f.erased_per_row) {
        throw FormatError("mask row " + std::to_string(r) + " keeps " + std::to_string(m.kept_in_row(r)) +
                          " sub-patches, header says " + std::to_string(side - f.erased_per_row));
      }
    }
    return m;
  }
  if (f.erased_per_row == 0) return EraseMask(side, side, true);
  const SamplerParams p{side, side, f.erased_per_row, f.intra_delta, f.inter_delta, f.seed};
  if (!params_feasible(p)) throw FormatError("seed-mode sampler parameters are infeasible");
  return generate_row_mask(p);
}

std::vector<std::uint8_t> encode_container(const SqueezedImage& sq, const EraseMask& mask, MaskMode mode,
                                           const CodecSettings& codec) {
  const auto& g = sq.geometry;
  const std::size_t side = g.subgrid_side();
  if (mask.rows() != side || mask.cols() != side) {
    throw GeometryError("mask is " + std::to_string(mask.rows()) + "x" + std::to_string(mask.cols()) +
                        ", sub-patch grid is " + std::to_string(side) + "x" + std::to_string(side));
  }
  for (std::size_t r = 0; r < side; ++r) {
    if (mask.kept_in_row(r) != side - g.erased_per_row) throw GeometryError("mask does not match squeezed geometry");
  }
  WireFrame f;
  f.orig_height = narrow<std::uint32_t>(g.orig_height, "orig_height");
  f.orig_width = narrow<std::uint32_t>(g.orig_width, "orig_width");
  f.channels = narrow<std::uint8_t>(g.channels, "channels");
  f.patch_size = narrow<std::uint16_t>(g.patch_size, "n");
  f.subpatch_size = narrow<std::uint8_t>(g.subpatch_size, "b");
  f.erased_per_row = narrow<std::uint8_t>(g.erased_per_row, "T");
  f.mask_mode = mode;
  f.codec = codec.id;
  if (const auto& p = mask.params()) {
    f.seed = p->seed;
    f.intra_delta = narrow<std::uint16_t>(p->intra_delta, "delta");
    f.inter_delta = narrow<std::uint16_t>(p->inter_delta, "Delta");
  }
  if (mode == MaskMode::explicit_bits) {
    f.mask_bytes = pack_mask(mask);
  } else if (g.erased_per_row > 0) {
    const auto& p = mask.params();
    if (!p || p->scope != ConstraintScope::all_previous || p->max_attempts != kDefaultMaxAttempts) {
      throw ParameterError("seed mode needs a row-sampler mask with default scope and attempt cap");
    }
    if (frame_mask(f) != mask) throw ParameterError("mask cannot be regenerated from its seed");
  }

  const Image raster = sq.raster();
  if (codec.id == CodecId::store) {
    f.payload = raster.pixels;
  } else {
    f.payload = run_codec(quality_cmd(codec.encode_cmd, codec.quality, "encode"), store_raster(raster));
  }
  return serialize_frame(f);
}

DecodedContainer decode_container(std::span<const std::uint8_t> bytes, const CodecSettings& codec) {
  DecodedContainer out;
  out.frame = parse_frame(bytes);
  const auto& f = out.frame;
  out.mask = frame_mask(f);
  auto& sq = out.squeezed;
  sq.geometry = frame_geometry(f);
  sq.height = sq.geometry.height();
  sq.width = sq.geometry.width();
  sq.channels = f.channels;
  const std::size_t expect = sq.height * sq.width * sq.channels;
  if (f.codec == CodecId::store) {
    if (f.payload.size() != expect) {
      throw FormatError("store payload has " + std::to_string(f.payload.size()) + " bytes, geometry needs " +
                        std::to_string(expect));
    }
    sq.pixels = f.payload;
    return out;
  }
  Image img = load_raster(run_codec(quality_cmd(codec.decode_cmd, codec.quality, "decode"), f.payload));
  if (img.height != sq.height || img.width != sq.width || img.channels != sq.channels) {
    throw CodecError("codec returned " + std::to_string(img.height) + "x" + std::to_string(img.width) + "x" +
                     std::to_string(img.channels) + ", expected " + std::to_string(sq.height) + "x" +
                     std::to_string(sq.width) + "x" + std::to_string(sq.channels));
  }
  sq.pixels = std::move(img.pixels);
  return out;
}

double bpp(std::uint64_t bytes, std::uint64_t orig_height, std::uint64_t orig_width) {
  if (orig_height == 0 || orig_width == 0) throw ParameterError("bpp needs non-zero image dimensions");
  return static_cast<double>(bytes) * 8.0 / (static_cast<double>(orig_height) * static_cast<double>(orig_width));
}

}  // namespace easz
