#pragma once

#include <vector>

#include "tim4rec/autodiff.hpp"
#include "tim4rec/rng.hpp"

// Differentiable operations over tape variables. All free functions; each
// computes the forward value eagerly and registers the vector-Jacobian rules
// with the tape. Elementwise ops accept any rank; matrix ops require rank 2.

namespace tim4rec {

// ---- arithmetic -------------------------------------------------------------
Var add(Var a, Var b);       // same shape
Var sub(Var a, Var b);       // same shape
Var mul(Var a, Var b);       // elementwise, same shape
Var neg(Var a);
Var scale(Var a, double c);  // a * c
Var add_const(Var a, double c);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator-(Var a) { return neg(a); }

// ---- elementwise maps -------------------------------------------------------
Var exp(Var a);
Var log_abs(Var a);  // ln|x|; gradient 1/x (callers must keep x away from 0)
Var sigmoid(Var a);
Var silu(Var a);
Var gelu(Var a);  // exact (erf) form
Var softplus(Var a);

// ---- reductions ------------------------------------------------------------
Var sum(Var a);   // scalar
Var mean(Var a);  // scalar

// ---- shape plumbing ----------------------------------------------------------
Var reshape(Var a, Tensor::Shape shape);
Var transpose(Var a);                       // rank 2
Var slice_rows(Var a, int64_t r0, int64_t r1);  // rows [r0, r1)
Var slice_cols(Var a, int64_t c0, int64_t c1);  // cols [c0, c1)
Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);
Var pick(Var a, int64_t index);  // scalar a.data()[index]

// ---- linear algebra ----------------------------------------------------------
Var matmul(Var a, Var b);                  // [m x k] * [k x n]
Var add_row_broadcast(Var m, Var row);     // m[i][j] + row[j]
Var scale_rows(Var m, Var v);              // m[i][:] * v[i]
Var scale_by(Var m, Var s);                // m * s, s scalar var
Var tril(Var m);                           // zero strict upper triangle

// ---- neural-net pieces -------------------------------------------------------

// Row-wise layer norm over the last axis with learnable gain/bias (biased
// variance). Rank-1 input is treated as a single row.
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-6);

// Depthwise causal convolution with index clamping: out[t][c] = bias[c] +
// sum_m kernel[m][c] * x[max(t - m, 0)][c]. Position 0 therefore reads x[0]
// K times. x: [T x C], kernel: [K x C], bias: [C].
Var causal_conv1d(Var x, Var kernel, Var bias);

// Row-wise softmax (rank 1: one row). Numerically shifted by the row max.
Var softmax(Var x);

// -log softmax(logits)[target] for a rank-1 logits vector, computed in the
// log domain so extreme logits cannot round the picked probability to zero.
Var nll_from_logits(Var logits, int64_t target);

// Summed cross-entropy over the rows of a [T x V] logit matrix. Row t competes
// over columns [1, V) -- column 0 is the pad item and is excluded from the
// softmax -- and targets[t] == 0 skips the row entirely. Throws if every row
// is skipped. Returns a scalar sum (callers divide by their own target count).
Var nll_rows(Var logits, const std::vector<int64_t>& targets);

// Inverted-dropout: scales kept entries by 1/(1-rate). Identity when train is
// false or rate is 0. Draws one uniform per element from `rng`.
Var dropout(Var x, double rate, bool train, Rng& rng);

// ---- masking helpers ---------------------------------------------------------

// Zeroes rows [0, first_valid) — the left-padding region of a batch row.
Var zero_rows_before(Var x, int64_t first_valid);

// Returns a copy with element `index` forced to `value`; gradient is blocked
// at that element. Used to pin the pad column to -inf before ranking.
Var set_element(Var x, int64_t index, double value);

// Row gather from an embedding matrix; gradient scatter-adds into the table.
Var embedding_lookup(Var table, const std::vector<int64_t>& ids);

}  // namespace tim4rec
