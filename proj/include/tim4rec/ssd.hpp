#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tim4rec/autodiff.hpp"
#include "tim4rec/kernels.hpp"

// State-space-duality kernel surface over Tensor/Var. The scalar-templated
// math lives in kernels.hpp; this layer adds the domain types, validation and
// the differentiable compositions used by the model.

namespace tim4rec {

using kernels::DecayMode;

struct KernelConfig {
  int64_t T = 0;      // sequence length
  int64_t H = 4;      // heads
  int64_t P = 0;      // per-head channel dim (H*P = inner model dim)
  int64_t N = 32;     // state dim
  int64_t chunk = 16; // chunk length for the linear-time scan
  DecayMode mode = DecayMode::kExactExp;

  void validate() const;
};

// Per-step multiplicative decay description for all heads: entry [h][t] is the
// decay applied between positions t-1 and t. In exact-exp mode `values` are
// log-decays (<= 0 for well-posed inputs); in linear-approx mode they are the
// factors themselves. Entry [h][0] is never used by a mask (empty product).
struct DecaySequence {
  Tensor values;  // [H x T]
  DecayMode mode = DecayMode::kExactExp;

  int64_t heads() const { return values.dim(0); }
  int64_t length() const { return values.dim(1); }
};

// One head's dense causal mask: strictly-upper zero, exactly 1 on the
// diagonal, and the 1-semiseparable recurrence down each column.
struct MaskedMatrix {
  Tensor entries;  // [T x T]
};

// Carried inter-chunk state, head-major.
struct ChunkState {
  Tensor state;  // [H x N x P]
};

// ---- plain (non-differentiable) ops -------------------------------------------

// Stacked segment sums: [H x T] -> [H x T x T], -inf strictly above diagonals.
Tensor segsum(const Tensor& log_decay);

MaskedMatrix build_mask(const DecaySequence& decay, int64_t head);
std::vector<MaskedMatrix> build_masks(const DecaySequence& decay);

// Structural validation of a built mask against its decay row: triangularity,
// unit diagonal, the 1-SS recurrence (relative tolerance), and the (0, 1]
// range when the log-decays are non-positive.
struct MaskCheck {
  bool ok = true;
  std::string detail;
};
MaskCheck check_mask_structure(const MaskedMatrix& mask, const DecaySequence& decay,
                               int64_t head, double tol = 1e-12);

// Quadratic reference: Y_i = sum_{j<=i} mask[i][j] (C_i . B_j) X_j per head.
// X: [T x H*P], B, C: [T x N]; one mask per head, or one mask shared by all.
Tensor naive_ssd_forward(const Tensor& X, const Tensor& B, const Tensor& C,
                         const std::vector<MaskedMatrix>& masks);
Tensor naive_ssd_forward(const Tensor& X, const Tensor& B, const Tensor& C,
                         const MaskedMatrix& mask);

struct ChunkedOutput {
  Tensor output;     // [T x H*P]
  ChunkState state;  // final carried state, enables streaming continuation
};
ChunkedOutput chunked_ssd_forward(const Tensor& X, const Tensor& B, const Tensor& C,
                                  const DecaySequence& decay, const KernelConfig& cfg,
                                  const ChunkState* init = nullptr);

// Discretization of the continuous parameters with optional time-delta fusion:
// delta_hat = delta ∘ d (or plain delta when d is empty), per-head decay
// values delta_hat * A_h, and B_bar = delta_hat-scaled B. In exact-exp mode
// the values are the log-decays directly; in linear-approx mode they are used
// as raw factors and `divergence_warning` flags any |factor| >= 1.
struct Discretized {
  DecaySequence decay;
  Tensor b_bar;  // [T x N]
  bool divergence_warning = false;
};
Discretized discretize(const Tensor& delta, const Tensor& A, const Tensor& B,
                       const Tensor& d, DecayMode mode);

// Time-aware forward: discretize + chunked scan. `d` must already be the
// temporal module's output; pass an empty tensor for the plain-SSD path (the
// identical code runs with delta_hat = delta). Multiplying by an all-ones `d`
// is bit-identical to passing none.
Tensor tissd_apply(const Tensor& X, const Tensor& B, const Tensor& C, const Tensor& delta,
                   const Tensor& d, const Tensor& A, const KernelConfig& cfg,
                   bool* divergence_warning = nullptr);

// ---- differentiable variants ---------------------------------------------------

// Inclusive prefix sum / exclusive reverse ("toward the end") sum of a rank-1
// var. These mirror the plain kernel's accumulation order exactly.
Var cumsum(Var a);
Var rcumsum_exclusive(Var a);

// [T] log-decays -> [T x T] segment sums (constant -inf above the diagonal).
Var segsum(Var a);

// [T] decay values -> [T x T] mask for one head, honoring the mode. In
// linear-approx mode gradients are exact wherever no factor is exactly zero.
Var decay_mask(Var values_row, DecayMode mode);

Var naive_ssd_forward(Var X, Var B, Var C, Var decay_values, DecayMode mode);
Var chunked_ssd_forward(Var X, Var B, Var C, Var decay_values, int64_t chunk, DecayMode mode);

// Returns (decay values [H x T], B_bar [T x N]). The value formula is the
// same in both modes (delta_hat * A_h); only the mask construction differs.
// Pass a default-constructed d for the plain path.
std::pair<Var, Var> discretize(Var delta, Var A, Var B, Var d);

Var tissd_apply(Var X, Var B, Var C, Var delta, Var d, Var A, const KernelConfig& cfg);

}  // namespace tim4rec
