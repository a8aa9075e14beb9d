#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "easz/autodiff.hpp"
#include "easz/image.hpp"
#include "easz/mask.hpp"

namespace easz {

enum class PosEmbedMode : std::uint8_t { multiplicative = 0, additive = 1 };

struct ModelConfig {
  std::size_t subpatch_size = 4;  // b
  std::size_t channels = 1;
  std::size_t d_model = 128;
  std::size_t heads = 4;
  std::size_t ffn_multiplier = 4;
  std::size_t encoder_blocks = 2;
  std::size_t decoder_blocks = 2;
  std::size_t grid_side = 8;  // n / b
  PosEmbedMode pos_mode = PosEmbedMode::multiplicative;

  std::size_t token_dim() const { return subpatch_size * subpatch_size * channels; }
  std::size_t tokens() const { return grid_side * grid_side; }
  std::size_t patch_size() const { return grid_side * subpatch_size; }
  std::size_t head_dim() const { return d_model / heads; }
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

struct ParamTensor {
  std::string name;
  ad::Shape shape;
  std::vector<float> values;

  bool operator==(const ParamTensor&) const = default;
};

// Named weights in a fixed order:
//   embed.w, embed.b, pos,
//   enc.<i>.{ln1.g, ln1.b, attn.wqkv, attn.bqkv, attn.wo, attn.bo, ln2.g, ln2.b,
//            ffn.w1, ffn.b1, ffn.w2, ffn.b2, ln3.g, ln3.b}   for each encoder block,
//   dec.pos, dec.<i>.{...same 14...} for each decoder block,
//   head.w, head.b
struct ModelParams {
  ModelConfig config;
  std::vector<ParamTensor> tensors;

  std::size_t count() const;
  std::vector<std::vector<double>> as_double() const;
  void assign(std::span<const std::vector<double>> values);

  // Xavier-uniform projections, unit/zero norm affine terms, an encoder
  // positional table N(1, 0.02) (multiplicative) or N(0, 0.02) (additive), and
  // a 2-D sine/cosine decoder positional table.
  static ModelParams initialize(const ModelConfig& config, std::uint64_t seed);

  bool operator==(const ModelParams&) const = default;
};

// Closed-form parameter count for a configuration.
std::size_t param_count(const ModelConfig& config);
std::vector<std::pair<std::string, ad::Shape>> param_layout(const ModelConfig& config);

// Flattened sub-patch tokens of one n x n x C patch, values in [0, 1].
// Token t = row * grid_side + col holds its b x b x C pixels row-major.
ad::Tensor patch_tokens(std::span<const std::uint8_t> patch, const ModelConfig& config);

namespace model {

struct BlockVars {
  ad::Var ln1_g, ln1_b, wqkv, bqkv, wo, bo, ln2_g, ln2_b, w1, b1, w2, b2, ln3_g, ln3_b;
};

struct ModelVars {
  ad::Var embed_w, embed_b, pos;
  std::vector<BlockVars> encoder;
  ad::Var dec_pos;
  std::vector<BlockVars> decoder;
  ad::Var head_w, head_b;
};

// Places parameter values in `g` (trainable leaves or constants).
ModelVars bind(ad::Graph& g, const ModelConfig& config, std::span<const std::vector<double>> values, bool trainable);
// Wraps existing nodes, given in param_layout order.
ModelVars bind(const ModelConfig& config, std::span<const ad::Var> vars);

// Linear projection of each token to d_model, combined with the positional
// embedding of its grid position (product or sum, per config.pos_mode).
ad::Var embed(ad::Var subpatches, std::span<const std::size_t> positions, const ModelVars& vars,
              const ModelConfig& config);

// Pre-norm transformer block: LN -> MHSA -> residual, LN -> FFN -> residual, LN.
ad::Var transformer_block(ad::Var x, const BlockVars& block, const ModelConfig& config);

// Encoder over the kept tokens only.
ad::Var encode(ad::Var embeddings, const ModelVars& vars, const ModelConfig& config);

// Full grid of tokens: encoder features at kept positions (raster order),
// zero vectors at erased positions.
ad::Var assemble(ad::Var features, const EraseMask& mask);

// Decoder over the assembled grid followed by the pixel head. Returns raw
// (unclamped) per-token pixel predictions, tokens x token_dim.
ad::Var decode(ad::Var grid, const ModelVars& vars, const ModelConfig& config);

// embed -> encode -> assemble -> decode for one patch. Only kept tokens of
// `tokens` are read.
ad::Var predict(ad::Graph& g, const ad::Tensor& tokens, const EraseMask& mask, const ModelVars& vars,
                const ModelConfig& config);

// The reconstructed patch: kept rows copied from `tokens`, erased rows taken
// from `prediction`. Gradient reaches erased rows only.
ad::Var composite(ad::Graph& g, ad::Var prediction, const ad::Tensor& tokens, const EraseMask& mask);

}  // namespace model

// Differentiable perceptual term; an empty function means "contributes 0".
using PerceptualLoss = std::function<ad::Var(ad::Var prediction, ad::Var target)>;

// L1(x, y) + lambda * perceptual(x, y).
ad::Var reconstruction_loss(ad::Var x, ad::Var y, double lambda, const PerceptualLoss& perceptual = {});

// Read-only inference wrapper. Safe to share between threads.
class Reconstructor {
 public:
  explicit Reconstructor(ModelParams params);

  const ModelConfig& config() const { return params_.config; }
  const ModelParams& params() const { return params_; }

  // Clamped [0, 1] predictions for every token.
  std::vector<double> predict_tokens(std::span<const std::uint8_t> patch, const EraseMask& mask) const;

  // Kept sub-patches are copied from `patch`; erased ones take the model's
  // prediction, rounded to 8 bits.
  std::vector<std::uint8_t> reconstruct_patch(std::span<const std::uint8_t> patch, const EraseMask& mask) const;

 private:
  ModelParams params_;
  std::vector<std::vector<double>> values_;
};

// Reconstructs every patch of `grid` in place. `masks` holds one shared mask
// or one per patch. Patches are distributed across OpenMP threads.
void reconstruct_grid(const Reconstructor& model, PatchGrid& grid, std::span<const EraseMask> masks);

namespace ref {
void reconstruct_grid(const Reconstructor& model, PatchGrid& grid, std::span<const EraseMask> masks);
}

enum class TrainMaskKind : std::uint8_t { row_sampler, random };

struct TrainConfig {
  double learning_rate = 2.8e-4;
  double erase_ratio = 0.25;
  std::size_t batch = 4096;
  double weight_decay = 0.05;
  std::size_t steps = 0;
  std::uint64_t seed = 0;
  std::size_t intra_delta = 1;
  std::size_t inter_delta = 1;
  TrainMaskKind mask_kind = TrainMaskKind::row_sampler;
  double lambda = 0.3;
  PerceptualLoss perceptual;
  // Called after every step with (step index, batch loss).
  std::function<void(std::size_t, double)> on_step;
};

struct TrainResult {
  ModelParams params;
  std::vector<double> loss_trace;
};

// Erased sub-patches per mask row for a given erase ratio (at least 1).
std::size_t erased_per_row(double erase_ratio, std::size_t grid_side);

// Trains from `init` (or a fresh initialization seeded by cfg.seed). Each
// step draws a batch, fresh masks, and applies one optimizer update.
TrainResult train(std::span<const Image> patches, const ModelConfig& config, const TrainConfig& cfg,
                  const ModelParams* init = nullptr);

struct EvalReport {
  double loss = 0.0;             // mean L1 of the composited reconstruction
  double erased_mse = 0.0;       // model, erased pixels only, [0,1] units
  double mean_fill_mse = 0.0;    // kept-pixel mean as the prediction
};

// Evaluates on `patches` with one row-sampler mask per patch (seeded from `seed`).
EvalReport evaluate(const ModelParams& params, std::span<const Image> patches, std::size_t erased_per_row,
                    std::size_t intra_delta, std::size_t inter_delta, std::uint64_t seed);

// Versioned binary checkpoint: "EASZCKPT", version, config, parameter count,
// little-endian float32 payload, FNV-1a 64 checksum of everything before it.
std::vector<std::uint8_t> save_checkpoint(const ModelParams& params);
ModelParams load_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint_file(const std::string& path, const ModelParams& params);
ModelParams load_checkpoint_file(const std::string& path);

}  // namespace easz
