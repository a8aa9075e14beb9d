#include <fstream>
#include <iterator>

#include "easz/byte_io.hpp"
#include "easz/error.hpp"
#include "easz/model.hpp"

namespace easz {

namespace {
constexpr char kMagic[] = "EASZCKPT";
constexpr std::uint32_t kVersion = 1;
}  // namespace

std::vector<std::uint8_t> save_checkpoint(const ModelParams& params) {
  const auto& c = params.config;
  c.validate();
  if (params.count() != param_count(c)) throw FormatError("parameter count does not match config");
  ByteWriter w;
  w.str(std::string_view(kMagic, 8));
  w.le32(kVersion);
  for (std::size_t v : {c.subpatch_size, c.channels, c.d_model, c.heads, c.ffn_multiplier, c.encoder_blocks,
                        c.decoder_blocks, c.grid_side}) {
    w.le32(static_cast<std::uint32_t>(v));
  }
  w.le32(static_cast<std::uint32_t>(c.pos_mode));
  w.le64(params.count());
  for (const auto& t : params.tensors) {
    for (float v : t.values) w.le_f32(v);
  }
  const std::uint64_t digest = fnv1a64(w.data());
  w.le64(digest);
  return std::move(w).take();
}

ModelParams load_checkpoint(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  auto magic = r.bytes(8, "checkpoint magic");
  if (!std::equal(magic.begin(), magic.end(), kMagic)) throw FormatError("checkpoint magic mismatch");
  const auto version = r.le32("checkpoint version");
  if (version != kVersion) {
    throw FormatError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kVersion) + ")");
  }
  ModelConfig c;
  c.subpatch_size = r.le32("config.subpatch_size");
  c.channels = r.le32("config.channels");
  c.d_model = r.le32("config.d_model");
  c.heads = r.le32("config.heads");
  c.ffn_multiplier = r.le32("config.ffn_multiplier");
  c.encoder_blocks = r.le32("config.encoder_blocks");
  c.decoder_blocks = r.le32("config.decoder_blocks");
  c.grid_side = r.le32("config.grid_side");
  const auto mode = r.le32("config.pos_mode");
  if (mode > 1) throw FormatError("checkpoint has unknown positional mode " + std::to_string(mode));
  c.pos_mode = static_cast<PosEmbedMode>(mode);
  try {
    c.validate();
  } catch (const ParameterError& e) {
    throw FormatError(std::string("checkpoint config invalid: ") + e.what());
  }
  const std::uint64_t count = r.le64("parameter count");
  if (count != param_count(c)) {
    throw FormatError("checkpoint declares " + std::to_string(count) + " parameters, config requires " +
                      std::to_string(param_count(c)));
  }
  if (r.remaining() != count * 4 + 8) {
    throw FormatError("checkpoint payload holds " + std::to_string(r.remaining()) + " bytes, header implies " +
                      std::to_string(count * 4 + 8));
  }
  ModelParams p;
  p.config = c;
  for (auto& [name, shape] : param_layout(c)) {
    ParamTensor t{name, shape, std::vector<float>(shape.size())};
    for (auto& v : t.values) v = r.le_f32("parameter payload");
    p.tensors.push_back(std::move(t));
  }
  const std::size_t body = r.position();
  const std::uint64_t stored = r.le64("checksum");
  if (stored != fnv1a64(bytes.first(body))) throw FormatError("checkpoint digest mismatch");
  return p;
}

void save_checkpoint_file(const std::string& path, const ModelParams& params) {
  const auto bytes = save_checkpoint(params);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write checkpoint " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

ModelParams load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return load_checkpoint(bytes);
}

}  // namespace easz
