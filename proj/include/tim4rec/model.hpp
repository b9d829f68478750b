#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tim4rec/autodiff.hpp"
#include "tim4rec/rng.hpp"
#include "tim4rec/ssd.hpp"
#include "tim4rec/temporal.hpp"

// The full sequence model: embedding, a stack of time-aware SSD mixer blocks
// with FFNs, and a tied-embedding prediction head. Everything runs on the
// autodiff tape; evaluation just binds the parameters without gradients.
//
// Sequences are padded on the LEFT to max_len with item id 0 (the frozen
// all-zero embedding row), so the prediction feature is always the last array
// position. Hidden rows in the pad region are re-zeroed after every stage
// that applies a bias, which keeps outputs independent of the pad count.

namespace tim4rec {

struct ModelConfig {
  int64_t vocab = 0;     // item rows incl. the pad row 0, i.e. |V| + 1
  int64_t d_model = 64;  // embedding width
  int64_t expand = 2;    // inner stream = d_model * expand
  int64_t state = 32;    // SSM state size N
  int64_t heads = 4;     // SSD heads
  int64_t conv_k = 4;    // causal conv kernel size (content and delta paths)
  int64_t layers = 2;    // stacked mixer blocks
  int64_t max_len = 50;  // padded sequence length T
  int64_t chunk = 16;    // kernel chunk length
  double dropout = 0.0;
  DecayMode mode = DecayMode::kExactExp;
  bool no_time = false;  // bypass the delta path entirely (plain-SSD build)
  bool no_ffn = false;   // mixer block only, FFN sub-block is identity

  int64_t d_inner() const { return d_model * expand; }
  int64_t head_dim() const { return d_inner() / heads; }
  KernelConfig kernel_config() const;
  void validate() const;  // throws ConfigError
};

// JSON round-trip for configs (checkpoints embed one; the CLI reads one).
std::string config_to_json_text(const ModelConfig& cfg);
ModelConfig config_from_json_text(const std::string& text);

// Item embedding table; row 0 is the pad row and stays exactly zero. The
// same table scores the prediction feature (tied input/output embeddings).
struct EmbeddingTable {
  Tensor table;  // [vocab x d_model]
};

// Per-block parameters.
struct TiSSDLayerParams {
  Tensor expand_w;            // [d_model x d_inner]
  Tensor in_w;                // [d_inner x (d_inner + 2N + 1)] -> X, B, C, delta
  Tensor in_b;                // [d_inner + 2N + 1]
  Tensor conv_x_w, conv_x_b;  // [K x d_inner], [d_inner]
  Tensor conv_b_w, conv_b_b;  // [K x N], [N]
  Tensor conv_c_w, conv_c_b;  // [K x N], [N]
  Tensor a_log;               // [H]; head decay rate A_h = -exp(a_log[h])
  Tensor out_w;               // [d_inner x d_model]
  Tensor ln1_gain, ln1_bias;  // pre-mixer norm [d_model]
  Tensor ln2_gain, ln2_bias;  // pre-FFN norm [d_model]
  Tensor ffn_w1, ffn_b1;      // [d_model x 4*d_model], [4*d_model]
  Tensor ffn_w2, ffn_b2;      // [4*d_model x d_model], [d_model]
  DeltaPathParams delta;      // per-layer temporal path
};

struct Model {
  ModelConfig cfg;
  EmbeddingTable emb;
  Tensor emb_ln_gain, emb_ln_bias;  // post-embedding norm [d_model]
  std::vector<TiSSDLayerParams> layers;
};

// Zero-initialized parameter set with the shapes the config dictates.
Model make_model(const ModelConfig& cfg);

// Random initialization: small normal weights, identity conv taps, unit
// norm gains, per-head a_log = ln U[1, 16), neutral delta path, pad row 0.
Model init_model(const ModelConfig& cfg, Rng& rng);

// Flat named view of every learnable tensor, in a stable order shared by the
// optimizer, the checkpoint format, and bind_model.
std::vector<std::pair<std::string, Tensor*>> named_params(Model& m);
std::vector<std::pair<std::string, const Tensor*>> named_params(const Model& m);

// Re-zeroes the pad embedding row; call after every optimizer step.
void freeze_pad_row(Model& m);

// Checkpoints: versioned text container with the config as JSON and each
// named tensor hex-encoded bit-for-bit (round-trips are exact). Layout:
//   tim4rec-checkpoint-v1
//   <config json, one line>
//   params <count>
//   <name> <rank> <dims...> <16-hex-digit word per value>
//   end
void save_checkpoint(const Model& m, const std::string& path);
Model load_checkpoint(const std::string& path);

// ---- tape-bound forward --------------------------------------------------------

struct LayerVars {
  Var expand_w, in_w, in_b;
  Var conv_x_w, conv_x_b, conv_b_w, conv_b_b, conv_c_w, conv_c_b;
  Var a_log, out_w;
  Var ln1_gain, ln1_bias, ln2_gain, ln2_bias;
  Var ffn_w1, ffn_b1, ffn_w2, ffn_b2;
  Var d_w1, d_b1, d_w2, d_b2, d_conv, d_conv_b, d_gate, d_ln_gain, d_ln_bias;
};

struct ModelVars {
  Var emb, emb_ln_gain, emb_ln_bias;
  std::vector<LayerVars> layers;
  // Same order as named_params; flat[i] is the leaf for named_params(m)[i].
  std::vector<Var> flat;
};

// Leafs every parameter onto the tape (trainable toggles needs_grad). The
// model itself is never mutated; leaves hold copies of the current values.
ModelVars bind_model(Tape& t, const Model& m, bool trainable);

struct LayerCtx {
  const ModelConfig* cfg = nullptr;
  int64_t first_valid = 0;
  bool train = false;
  Rng* rng = nullptr;
};

// One block: pre-norm -> expand -> in-projection split (X, B, C, delta) ->
// causal conv + SiLU on X/B/C -> delta-path norm/gate/enhance -> discretize ->
// chunked SSD -> out-projection -> residual; then pre-norm -> FFN -> residual.
// Returns the block output and the next layer's delta stream (gated residual
// of the enhanced deltas). With cfg->no_time the delta path is skipped and
// `d` is passed through untouched (it may be an invalid Var).
std::pair<Var, Var> tissd_layer(Var x, Var d, const LayerVars& p, const LayerCtx& ctx);

// Hidden state sequence [max_len x d_model] for one left-padded sequence.
// `items` are 1-based ids (never 0), `ts` the matching Unix timestamps.
Var forward_hidden(Tape& t, const ModelVars& mv, const ModelConfig& cfg,
                   const std::vector<int64_t>& items, const std::vector<double>& ts,
                   bool train, Rng& rng);

// Scores every item from the last position: logits = p . E^T with the pad
// column pinned to -inf. Softmax of this is the interaction distribution.
Var forward_logits(Tape& t, const ModelVars& mv, const ModelConfig& cfg,
                   const std::vector<int64_t>& items, const std::vector<double>& ts,
                   bool train, Rng& rng);

// Evaluation convenience: probability over the catalog, no gradients.
Tensor score_sequence(const Model& m, const std::vector<int64_t>& items,
                      const std::vector<double>& ts);

// Mean of -ln(scores[target]) over a batch of score rows. Pad targets (id 0)
// are excluded; throws DataError when every target is excluded.
double sequence_loss(const std::vector<Tensor>& scores, const std::vector<int64_t>& targets);
Var sequence_loss(const std::vector<Var>& scores, const std::vector<int64_t>& targets);

}  // namespace tim4rec
