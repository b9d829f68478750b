#pragma once

#include <cstdint>

#include "tim4rec/autodiff.hpp"
#include "tim4rec/rng.hpp"
#include "tim4rec/tensor.hpp"

// Time-difference pipeline: timestamps -> backward differences -> sequence
// normalization -> per-layer gate / causal-conv enhancement producing the D
// vector the kernel's discretization consumes. Sequences are left-padded;
// positions [0, first_valid) are padding and carry zeros through the plain
// ops. The differentiable per-layer pieces operate on rank-1 [T] vars; the
// model is responsible for re-zeroing pad positions between stages and for
// the sign mapping (softplus) in exact-exp kernel mode.

namespace tim4rec {

struct TimestampSeq {
  Tensor t;                 // [T] unix seconds, non-decreasing on valid positions
  int64_t first_valid = 0;  // positions [first_valid, T) are real events
};

enum class DeltaStage { kRaw, kNormalized, kEnhanced };

struct DeltaSeq {
  Tensor d;  // [T]
  DeltaStage stage = DeltaStage::kRaw;
  int64_t first_valid = 0;
};

// Learnable parameters of one layer's delta path. The T x T gate weights are
// applied through a lower-triangular constraint so a position's gate never
// sees later deltas.
struct DeltaPathParams {
  Tensor w1, w2;            // [T x T]
  Tensor b1, b2;            // [T]
  Tensor conv;              // [K] single-channel causal kernel
  Tensor conv_bias;         // [1]
  Tensor gate;              // [1] transition gate logit, 0 -> even mix
  Tensor ln_gain, ln_bias;  // [T] per-position affine for the entry norm
};

// Neutral-ish initialization: small random gate weights, identity-like conv
// (first tap 1), zero biases, gate logit 0, unit layer-norm affine.
DeltaPathParams init_delta_path(int64_t T, int64_t K, Rng& rng, double weight_scale = 0.02);

// Backward differences with an initial zero: d[first_valid] = 0,
// d[i] = t[i] - t[i-1] beyond it, pads zero. Throws DataError on a negative
// difference (unsorted timestamps).
DeltaSeq time_deltas(const TimestampSeq& ts);

// Layer norm over the valid region (biased variance, no learnable affine),
// then inverted dropout. Pads stay zero; an all-pad sequence comes back as
// zeros. Input must be at the raw stage.
DeltaSeq normalize_deltas(const DeltaSeq& d, double dropout_rate, bool train, Rng& rng);

// ---- differentiable per-layer pieces -------------------------------------------

// Valid-region layer norm of a [T] delta vector with per-position affine;
// positions before first_valid come back as exact zeros.
Var delta_layer_norm(Var d, Var gain, Var bias, int64_t first_valid);

// Two-level time-varying gate: alpha = sigmoid(tril(w2) @ silu(tril(w1) @ d + b1) + b2),
// returns alpha * d elementwise. All shapes tied to T.
Var gate_deltas(Var d, Var w1, Var b1, Var w2, Var b2);

// Single-channel causal conv with index clamping followed by SiLU.
Var enhance_deltas(Var d, Var kernel, Var bias);

// Gated residual handing D to the next layer:
// sigmoid(g) * d_used + (1 - sigmoid(g)) * d_in.
Var layer_transition(Var d_in, Var d_used, Var gate);

}  // namespace tim4rec
