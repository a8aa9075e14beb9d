#include "easz/model.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>

#include "easz/error.hpp"
#include "easz/rng.hpp"

namespace easz {

using ad::Graph;
using ad::Shape;
using ad::Tensor;
using ad::Var;

void ModelConfig::validate() const {
  if (subpatch_size == 0) throw ParameterError("model: sub-patch size must be positive");
  if (channels != 1 && channels != 3) throw ParameterError("model: channels must be 1 or 3");
  if (d_model == 0 || heads == 0 || d_model % heads != 0) {
    throw ParameterError("model: d_model (" + std::to_string(d_model) + ") must be a positive multiple of heads (" +
                         std::to_string(heads) + ")");
  }
  if (ffn_multiplier == 0) throw ParameterError("model: ffn multiplier must be positive");
  if (encoder_blocks == 0 || decoder_blocks == 0) throw ParameterError("model: need at least one block per stack");
  if (grid_side == 0) throw ParameterError("model: grid side must be positive");
  if (pos_mode != PosEmbedMode::multiplicative && pos_mode != PosEmbedMode::additive) {
    throw ParameterError("model: unknown positional embedding mode");
  }
}

namespace {

constexpr std::size_t kTensorsPerBlock = 14;

void append_block(std::vector<std::pair<std::string, Shape>>& out, const std::string& prefix, const ModelConfig& c) {
  const std::size_t d = c.d_model, f = c.d_model * c.ffn_multiplier;
  out.push_back({prefix + "ln1.g", {1, d}});
  out.push_back({prefix + "ln1.b", {1, d}});
  out.push_back({prefix + "attn.wqkv", {d, 3 * d}});
  out.push_back({prefix + "attn.bqkv", {1, 3 * d}});
  out.push_back({prefix + "attn.wo", {d, d}});
  out.push_back({prefix + "attn.bo", {1, d}});
  out.push_back({prefix + "ln2.g", {1, d}});
  out.push_back({prefix + "ln2.b", {1, d}});
  out.push_back({prefix + "ffn.w1", {d, f}});
  out.push_back({prefix + "ffn.b1", {1, f}});
  out.push_back({prefix + "ffn.w2", {f, d}});
  out.push_back({prefix + "ffn.b2", {1, d}});
  out.push_back({prefix + "ln3.g", {1, d}});
  out.push_back({prefix + "ln3.b", {1, d}});
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Fixed 2-D sine/cosine table: the first half of the channels encodes the row,
// the second half the column.
void fill_sincos_2d(std::vector<float>& table, std::size_t side, std::size_t d) {
  const std::size_t half = d / 2, pairs = half / 2;
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) {
      float* row = table.data() + (r * side + c) * d;
      for (std::size_t axis = 0; axis < 2; ++axis) {
        const double pos = static_cast<double>(axis == 0 ? r : c);
        for (std::size_t k = 0; k < pairs; ++k) {
          const double omega = 1.0 / std::pow(10000.0, static_cast<double>(k) / static_cast<double>(pairs));
          row[axis * half + k] = static_cast<float>(std::sin(pos * omega));
          row[axis * half + pairs + k] = static_cast<float>(std::cos(pos * omega));
        }
      }
    }
  }
}

}  // namespace

std::vector<std::pair<std::string, Shape>> param_layout(const ModelConfig& c) {
  c.validate();
  std::vector<std::pair<std::string, Shape>> out;
  out.push_back({"embed.w", {c.token_dim(), c.d_model}});
  out.push_back({"embed.b", {1, c.d_model}});
  out.push_back({"pos", {c.tokens(), c.d_model}});
  for (std::size_t i = 0; i < c.encoder_blocks; ++i) append_block(out, "enc." + std::to_string(i) + ".", c);
  out.push_back({"dec.pos", {c.tokens(), c.d_model}});
  for (std::size_t i = 0; i < c.decoder_blocks; ++i) append_block(out, "dec." + std::to_string(i) + ".", c);
  out.push_back({"head.w", {c.d_model, c.token_dim()}});
  out.push_back({"head.b", {1, c.token_dim()}});
  return out;
}

std::size_t param_count(const ModelConfig& c) {
  c.validate();
  const std::size_t d = c.d_model, f = c.d_model * c.ffn_multiplier, td = c.token_dim();
  const std::size_t block = 3 * 2 * d             // three layer norms
                            + d * 3 * d + 3 * d   // qkv projection
                            + d * d + d           // output projection
                            + d * f + f + f * d + d;  // feedforward
  return (td * d + d) + 2 * c.tokens() * d + (c.encoder_blocks + c.decoder_blocks) * block + (d * td + td);
}

std::size_t ModelParams::count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.values.size();
  return n;
}

std::vector<std::vector<double>> ModelParams::as_double() const {
  std::vector<std::vector<double>> out;
  out.reserve(tensors.size());
  for (const auto& t : tensors) out.emplace_back(t.values.begin(), t.values.end());
  return out;
}

void ModelParams::assign(std::span<const std::vector<double>> values) {
  if (values.size() != tensors.size()) throw DimensionError("parameter tensor count mismatch");
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    if (values[k].size() != tensors[k].values.size()) throw DimensionError("parameter size mismatch for " + tensors[k].name);
    std::transform(values[k].begin(), values[k].end(), tensors[k].values.begin(),
                   [](double v) { return static_cast<float>(v); });
  }
}

ModelParams ModelParams::initialize(const ModelConfig& config, std::uint64_t seed) {
  ModelParams p;
  p.config = config;
  std::mt19937_64 rng(derive_seed(seed, 0x1417));
  std::normal_distribution<double> normal(0.0, 0.02);
  for (auto& [name, shape] : param_layout(config)) {
    ParamTensor t{name, shape, std::vector<float>(shape.size(), 0.0f)};
    if (ends_with(name, ".g")) {
      std::fill(t.values.begin(), t.values.end(), 1.0f);
    } else if (name == "pos") {
      const double centre = config.pos_mode == PosEmbedMode::multiplicative ? 1.0 : 0.0;
      for (auto& v : t.values) v = static_cast<float>(centre + normal(rng));
    } else if (name == "dec.pos") {
      fill_sincos_2d(t.values, config.grid_side, config.d_model);
    } else if (ends_with(name, ".w") || ends_with(name, "wqkv") || ends_with(name, "wo") ||
               ends_with(name, "w1") || ends_with(name, "w2")) {
      const double limit = std::sqrt(6.0 / static_cast<double>(shape.rows + shape.cols));
      std::uniform_real_distribution<double> uniform(-limit, limit);
      for (auto& v : t.values) v = static_cast<float>(uniform(rng));
    }
    p.tensors.push_back(std::move(t));
  }
  return p;
}

Tensor patch_tokens(std::span<const std::uint8_t> patch, const ModelConfig& config) {
  const std::size_t b = config.subpatch_size, c = config.channels, side = config.grid_side;
  const std::size_t n = config.patch_size(), td = config.token_dim();
  if (patch.size() != n * n * c) {
    throw GeometryError("patch has " + std::to_string(patch.size()) + " samples, model expects " +
                        std::to_string(n * n * c));
  }
  std::vector<double> values(config.tokens() * td);
  for (std::size_t sr = 0; sr < side; ++sr) {
    for (std::size_t sc = 0; sc < side; ++sc) {
      double* tok = values.data() + (sr * side + sc) * td;
      for (std::size_t y = 0; y < b; ++y) {
        for (std::size_t x = 0; x < b * c; ++x) {
          tok[y * b * c + x] = patch[((sr * b + y) * n + sc * b) * c + x] / 255.0;
        }
      }
    }
  }
  return Tensor({config.tokens(), td}, std::move(values));
}

namespace model {

namespace {

BlockVars bind_block(std::span<const Var> v) {
  return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9], v[10], v[11], v[12], v[13]};
}

}  // namespace

ModelVars bind(Graph& g, const ModelConfig& config, std::span<const std::vector<double>> values, bool trainable) {
  const auto layout = param_layout(config);
  if (values.size() != layout.size()) throw DimensionError("parameter tensor count does not match the model layout");
  std::vector<Var> vars;
  vars.reserve(layout.size());
  for (std::size_t k = 0; k < layout.size(); ++k) {
    vars.push_back(trainable ? g.parameter(layout[k].second, values[k]) : g.constant(layout[k].second, values[k]));
  }
  return model::bind(config, std::span<const Var>(vars));
}

ModelVars bind(const ModelConfig& config, std::span<const Var> vars) {
  const auto layout = param_layout(config);
  if (vars.size() != layout.size()) throw DimensionError("parameter tensor count does not match the model layout");
  for (std::size_t k = 0; k < layout.size(); ++k) {
    if (vars[k].shape() != layout[k].second) {
      throw DimensionError(layout[k].first + " is " + vars[k].shape().str() + ", expected " + layout[k].second.str());
    }
  }
  ModelVars out;
  std::size_t k = 0;
  out.embed_w = vars[k++];
  out.embed_b = vars[k++];
  out.pos = vars[k++];
  for (std::size_t i = 0; i < config.encoder_blocks; ++i, k += kTensorsPerBlock) {
    out.encoder.push_back(bind_block(vars.subspan(k, kTensorsPerBlock)));
  }
  out.dec_pos = vars[k++];
  for (std::size_t i = 0; i < config.decoder_blocks; ++i, k += kTensorsPerBlock) {
    out.decoder.push_back(bind_block(vars.subspan(k, kTensorsPerBlock)));
  }
  out.head_w = vars[k++];
  out.head_b = vars[k++];
  return out;
}

Var embed(Var subpatches, std::span<const std::size_t> positions, const ModelVars& vars, const ModelConfig& config) {
  for (auto p : positions) {
    if (p >= config.tokens()) {
      throw ParameterError("position " + std::to_string(p) + " outside the " + std::to_string(config.tokens()) +
                           "-token grid");
    }
  }
  Var projected = ad::linear(subpatches, vars.embed_w, vars.embed_b);
  Var pos = ad::gather_rows(vars.pos, positions);
  return config.pos_mode == PosEmbedMode::multiplicative ? ad::mul(projected, pos) : ad::add(projected, pos);
}

Var transformer_block(Var x, const BlockVars& blk, const ModelConfig& config) {
  const std::size_t d = config.d_model, hd = config.head_dim();
  Var h = ad::layer_norm(x, blk.ln1_g, blk.ln1_b);
  Var qkv = ad::linear(h, blk.wqkv, blk.bqkv);
  std::vector<Var> heads;
  heads.reserve(config.heads);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(hd));
  for (std::size_t i = 0; i < config.heads; ++i) {
    Var q = ad::slice_cols(qkv, i * hd, hd);
    Var k = ad::slice_cols(qkv, d + i * hd, hd);
    Var v = ad::slice_cols(qkv, 2 * d + i * hd, hd);
    Var weights = ad::softmax_lastdim(ad::scale(ad::matmul(q, ad::transpose(k)), inv_sqrt));
    heads.push_back(ad::matmul(weights, v));
  }
  Var attended = heads.size() == 1 ? heads.front() : ad::concat(heads, 1);
  x = ad::add(x, ad::linear(attended, blk.wo, blk.bo));

  Var h2 = ad::layer_norm(x, blk.ln2_g, blk.ln2_b);
  Var ff = ad::linear(ad::gelu(ad::linear(h2, blk.w1, blk.b1)), blk.w2, blk.b2);
  x = ad::add(x, ff);
  return ad::layer_norm(x, blk.ln3_g, blk.ln3_b);
}

Var encode(Var embeddings, const ModelVars& vars, const ModelConfig& config) {
  if (embeddings.shape().rows == 0) throw GeometryError("encoder needs at least one kept token");
  Var x = embeddings;
  for (const auto& blk : vars.encoder) x = transformer_block(x, blk, config);
  return x;
}

Var assemble(Var features, const EraseMask& mask) {
  const auto kept = mask.kept_positions();
  if (kept.size() != features.shape().rows) {
    throw GeometryError("assemble: " + std::to_string(features.shape().rows) + " features for " +
                        std::to_string(kept.size()) + " kept positions");
  }
  return ad::scatter_rows(features, kept, mask.cells());
}

Var decode(Var grid, const ModelVars& vars, const ModelConfig& config) {
  if (grid.shape().rows != config.tokens()) throw GeometryError("decoder expects a complete token grid");
  Var x = ad::add(grid, vars.dec_pos);
  for (const auto& blk : vars.decoder) x = transformer_block(x, blk, config);
  return ad::linear(x, vars.head_w, vars.head_b);
}

Var predict(Graph& g, const Tensor& tokens, const EraseMask& mask, const ModelVars& vars, const ModelConfig& config) {
  if (mask.rows() != config.grid_side || mask.cols() != config.grid_side) {
    throw GeometryError("mask is " + std::to_string(mask.rows()) + "x" + std::to_string(mask.cols()) +
                        ", model grid is " + std::to_string(config.grid_side));
  }
  const auto kept = mask.kept_positions();
  if (kept.empty()) throw GeometryError("mask keeps no sub-patches");
  const std::size_t td = config.token_dim();
  // Only kept rows are copied into the graph; erased content never enters it.
  std::vector<double> kept_values(kept.size() * td);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    std::copy_n(tokens.values.begin() + static_cast<std::ptrdiff_t>(kept[i] * td), td,
                kept_values.begin() + static_cast<std::ptrdiff_t>(i * td));
  }
  Var input = g.constant({kept.size(), td}, std::move(kept_values));
  Var features = encode(embed(input, kept, vars, config), vars, config);
  return decode(assemble(features, mask), vars, config);
}

Var composite(Graph& g, Var prediction, const Tensor& tokens, const EraseMask& mask) {
  if (prediction.shape() != tokens.shape) {
    throw DimensionError("prediction " + prediction.shape().str() + " vs tokens " + tokens.shape.str());
  }
  const auto erased = mask.erased_positions();
  const std::size_t td = tokens.shape.cols;
  Tensor kept = tokens;
  for (auto t : erased) std::fill_n(kept.values.begin() + static_cast<std::ptrdiff_t>(t * td), td, 0.0);
  Var base = g.constant(std::move(kept));
  if (erased.empty()) return base;
  Var filled = ad::scatter_rows(ad::gather_rows(prediction, erased), erased, tokens.shape.rows);
  return ad::add(base, filled);
}

}  // namespace model

Var reconstruction_loss(Var x, Var y, double lambda, const PerceptualLoss& perceptual) {
  Var l1 = ad::mean_abs_error(x, y);
  if (!perceptual || lambda == 0.0) return l1;
  Var p = perceptual(x, y);
  if (p.shape() != Shape{1, 1}) throw DimensionError("perceptual loss must be 1x1, got " + p.shape().str());
  return ad::add(l1, ad::scale(p, lambda));
}

Reconstructor::Reconstructor(ModelParams params) : params_(std::move(params)), values_(params_.as_double()) {
  params_.config.validate();
  if (params_.count() != param_count(params_.config)) throw FormatError("parameter count does not match config");
}

std::vector<double> Reconstructor::predict_tokens(std::span<const std::uint8_t> patch, const EraseMask& mask) const {
  const auto& cfg = params_.config;
  Tensor tokens = patch_tokens(patch, cfg);
  Graph g;
  auto vars = model::bind(g, cfg, values_, false);
  Var pred = model::predict(g, tokens, mask, vars, cfg);
  std::vector<double> out(pred.value().begin(), pred.value().end());
  for (auto& v : out) v = std::clamp(v, 0.0, 1.0);
  return out;
}

std::vector<std::uint8_t> Reconstructor::reconstruct_patch(std::span<const std::uint8_t> patch,
                                                           const EraseMask& mask) const {
  std::vector<std::uint8_t> out(patch.begin(), patch.end());
  const auto erased = mask.erased_positions();
  if (erased.empty()) return out;
  const auto pred = predict_tokens(patch, mask);
  const auto& cfg = params_.config;
  const std::size_t b = cfg.subpatch_size, c = cfg.channels, n = cfg.patch_size(), td = cfg.token_dim();
  for (auto t : erased) {
    const std::size_t sr = t / cfg.grid_side, sc = t % cfg.grid_side;
    for (std::size_t y = 0; y < b; ++y) {
      for (std::size_t x = 0; x < b * c; ++x) {
        const double v = pred[t * td + y * b * c + x];
        out[((sr * b + y) * n + sc * b) * c + x] = static_cast<std::uint8_t>(std::lround(v * 255.0));
      }
    }
  }
  return out;
}

namespace {

void check_grid(const Reconstructor& model, const PatchGrid& grid, std::span<const EraseMask> masks) {
  const auto& cfg = model.config();
  if (grid.patch_size != cfg.patch_size() || grid.subpatch_size != cfg.subpatch_size || grid.channels != cfg.channels) {
    throw GeometryError("model expects n=" + std::to_string(cfg.patch_size()) + ", b=" +
                        std::to_string(cfg.subpatch_size) + ", C=" + std::to_string(cfg.channels) +
                        "; image uses n=" + std::to_string(grid.patch_size) + ", b=" +
                        std::to_string(grid.subpatch_size) + ", C=" + std::to_string(grid.channels));
  }
  if (masks.size() != 1 && masks.size() != grid.patch_count()) throw GeometryError("mask count does not match patches");
}

}  // namespace

namespace ref {
void reconstruct_grid(const Reconstructor& model, PatchGrid& grid, std::span<const EraseMask> masks) {
  check_grid(model, grid, masks);
  for (std::size_t p = 0; p < grid.patch_count(); ++p) {
    const auto& mask = masks.size() == 1 ? masks.front() : masks[p];
    grid.patches[p] = model.reconstruct_patch(grid.patches[p], mask);
  }
}
}  // namespace ref

void reconstruct_grid(const Reconstructor& model, PatchGrid& grid, std::span<const EraseMask> masks) {
  check_grid(model, grid, masks);
  const auto count = static_cast<std::ptrdiff_t>(grid.patch_count());
  std::vector<std::exception_ptr> errors(grid.patch_count());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t p = 0; p < count; ++p) {
    const auto i = static_cast<std::size_t>(p);
    try {
      const auto& mask = masks.size() == 1 ? masks.front() : masks[i];
      grid.patches[i] = model.reconstruct_patch(grid.patches[i], mask);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::size_t erased_per_row(double erase_ratio, std::size_t grid_side) {
  const auto t = static_cast<std::size_t>(std::lround(erase_ratio * static_cast<double>(grid_side)));
  return std::clamp<std::size_t>(t, 1, grid_side > 1 ? grid_side - 1 : 1);
}

namespace {

EraseMask training_mask(const ModelConfig& config, const TrainConfig& cfg, std::size_t T, std::uint64_t seed) {
  const std::size_t side = config.grid_side;
  if (cfg.mask_kind == TrainMaskKind::random) {
    const std::size_t k = std::min(T * side, side * side - 1);
    return generate_random_mask(side, side, k, seed);
  }
  SamplerParams sp;
  sp.rows = sp.cols = side;
  sp.samples_per_row = T;
  sp.intra_delta = cfg.intra_delta;
  sp.inter_delta = cfg.inter_delta;
  sp.seed = seed;
  return generate_row_mask(sp);
}

void check_dataset(std::span<const Image> patches, const ModelConfig& config) {
  const std::size_t n = config.patch_size();
  for (const auto& img : patches) {
    if (img.height != n || img.width != n || img.channels != config.channels) {
      throw GeometryError("training patch is " + std::to_string(img.height) + "x" + std::to_string(img.width) + "x" +
                          std::to_string(img.channels) + ", model expects " + std::to_string(n) + "x" +
                          std::to_string(n) + "x" + std::to_string(config.channels));
    }
  }
}

constexpr std::size_t kGradientChunks = 16;

}  // namespace

TrainResult train(std::span<const Image> patches, const ModelConfig& config, const TrainConfig& cfg,
                  const ModelParams* init) {
  config.validate();
  check_dataset(patches, config);
  TrainResult result{init ? *init : ModelParams::initialize(config, cfg.seed), {}};
  if (result.params.config != config) throw ParameterError("initial parameters were built for another config");
  if (cfg.steps == 0) return result;
  if (patches.empty()) throw TrainingError("training set is empty");
  if (cfg.batch == 0) throw TrainingError("batch size must be positive");

  const std::size_t T = erased_per_row(cfg.erase_ratio, config.grid_side);
  if (cfg.mask_kind == TrainMaskKind::row_sampler) {
    validate_params({config.grid_side, config.grid_side, T, cfg.intra_delta, cfg.inter_delta, 0});
  }

  std::vector<Tensor> tokens;
  tokens.reserve(patches.size());
  for (const auto& img : patches) tokens.push_back(patch_tokens(img.pixels, config));

  auto master = result.params.as_double();
  ad::OptimizerState opt;
  opt.learning_rate = cfg.learning_rate;
  opt.weight_decay = cfg.weight_decay;

  std::mt19937_64 rng(derive_seed(cfg.seed, 0xBA7C));
  std::uniform_int_distribution<std::size_t> pick(0, patches.size() - 1);
  const std::size_t chunks = std::min(cfg.batch, kGradientChunks);

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    std::vector<std::size_t> batch(cfg.batch);
    for (auto& i : batch) i = pick(rng);

    std::vector<std::vector<std::vector<double>>> chunk_grads(chunks);
    std::vector<double> chunk_loss(chunks, 0.0);
    std::vector<std::exception_ptr> errors(chunks);

#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(chunks); ++ci) {
      const auto c = static_cast<std::size_t>(ci);
      try {
        auto& acc = chunk_grads[c];
        for (const auto& m : master) acc.emplace_back(m.size(), 0.0);
        const std::size_t first = c * cfg.batch / chunks, last = (c + 1) * cfg.batch / chunks;
        for (std::size_t j = first; j < last; ++j) {
          const EraseMask mask = training_mask(config, cfg, T, derive_seed(cfg.seed, step + 1, j));
          Graph g;
          auto vars = model::bind(g, config, master, true);
          Var pred = model::predict(g, tokens[batch[j]], mask, vars, config);
          Var target = g.constant(tokens[batch[j]]);
          Var recon = model::composite(g, pred, tokens[batch[j]], mask);
          Var loss = reconstruction_loss(recon, target, cfg.lambda, cfg.perceptual);
          chunk_loss[c] += loss.scalar();
          g.backward(loss);
          // Parameter leaves are the first nodes of the graph, in layout order.
          for (std::size_t k = 0; k < acc.size(); ++k) {
            const auto& grad = g.node(static_cast<std::uint32_t>(k)).grad;
            for (std::size_t i = 0; i < grad.size(); ++i) acc[k][i] += grad[i];
          }
        }
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }

    auto grads = std::move(chunk_grads[0]);
    double loss = chunk_loss[0];
    for (std::size_t c = 1; c < chunks; ++c) {
      loss += chunk_loss[c];
      for (std::size_t k = 0; k < grads.size(); ++k) {
        for (std::size_t i = 0; i < grads[k].size(); ++i) grads[k][i] += chunk_grads[c][k][i];
      }
    }
    const double inv = 1.0 / static_cast<double>(cfg.batch);
    loss *= inv;
    for (auto& gk : grads) {
      for (auto& v : gk) v *= inv;
    }
    if (!std::isfinite(loss)) {
      throw TrainingError("non-finite loss at step " + std::to_string(step) + " (lr=" +
                          std::to_string(cfg.learning_rate) + ", batch=" + std::to_string(cfg.batch) + ")");
    }
    ad::optimizer_step(master, grads, opt);
    result.loss_trace.push_back(loss);
    if (cfg.on_step) cfg.on_step(step, loss);
  }
  result.params.assign(master);
  return result;
}

EvalReport evaluate(const ModelParams& params, std::span<const Image> patches, std::size_t erased_per_row,
                    std::size_t intra_delta, std::size_t inter_delta, std::uint64_t seed) {
  const auto& config = params.config;
  check_dataset(patches, config);
  config.validate();
  const auto values = params.as_double();
  const std::size_t side = config.grid_side, td = config.token_dim();
  EvalReport report;
  double loss = 0.0, model_se = 0.0, fill_se = 0.0;
  std::size_t erased_values = 0;
  for (std::size_t i = 0; i < patches.size(); ++i) {
    EraseMask mask(side, side, true);
    if (erased_per_row > 0) {
      mask = generate_row_mask({side, side, erased_per_row, intra_delta, inter_delta, derive_seed(seed, i)});
    }
    Tensor tokens = patch_tokens(patches[i].pixels, config);
    Graph g;
    auto vars = model::bind(g, config, values, false);
    Var raw = model::predict(g, tokens, mask, vars, config);
    loss += ad::mean_abs_error(model::composite(g, raw, tokens, mask), g.constant(tokens)).scalar();
    std::vector<double> pred(raw.value().begin(), raw.value().end());
    for (auto& v : pred) v = std::clamp(v, 0.0, 1.0);
    double kept_sum = 0.0;
    std::size_t kept_n = 0;
    for (auto t : mask.kept_positions()) {
      for (std::size_t k = 0; k < td; ++k) kept_sum += tokens.values[t * td + k];
      kept_n += td;
    }
    const double fill = kept_sum / static_cast<double>(kept_n);
    for (auto t : mask.erased_positions()) {
      for (std::size_t k = 0; k < td; ++k) {
        const double truth = tokens.values[t * td + k];
        model_se += (pred[t * td + k] - truth) * (pred[t * td + k] - truth);
        fill_se += (fill - truth) * (fill - truth);
        ++erased_values;
      }
    }
  }
  report.loss = patches.empty() ? 0.0 : loss / static_cast<double>(patches.size());
  if (erased_values > 0) {
    report.erased_mse = model_se / static_cast<double>(erased_values);
    report.mean_fill_mse = fill_se / static_cast<double>(erased_values);
  }
  return report;
}

}  // namespace easz
