#include "tim4rec/temporal.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "tim4rec/errors.hpp"
#include "tim4rec/ops.hpp"

namespace tim4rec {

namespace {

void check_validity_range(int64_t first_valid, int64_t T, const char* who) {
  if (first_valid < 0 || first_valid > T)
    throw ShapeError(std::string(who) + ": first_valid outside [0, T]");
}

}  // namespace

DeltaPathParams init_delta_path(int64_t T, int64_t K, Rng& rng, double weight_scale) {
  if (T <= 0) throw ConfigError("init_delta_path: T must be positive");
  if (K <= 0) throw ConfigError("init_delta_path: conv kernel size must be positive");
  DeltaPathParams p;
  p.w1 = Tensor({T, T});
  p.w2 = Tensor({T, T});
  for (int64_t i = 0; i < p.w1.size(); ++i) p.w1[i] = rng.normal() * weight_scale;
  for (int64_t i = 0; i < p.w2.size(); ++i) p.w2[i] = rng.normal() * weight_scale;
  p.b1 = Tensor({T});
  p.b2 = Tensor({T});
  p.conv = Tensor({K});
  p.conv[0] = 1.0;
  p.conv_bias = Tensor({1});
  p.gate = Tensor({1});
  p.ln_gain = Tensor::ones({T});
  p.ln_bias = Tensor({T});
  return p;
}

DeltaSeq time_deltas(const TimestampSeq& ts) {
  if (ts.t.rank() != 1) throw ShapeError("time_deltas: timestamps must be rank-1 [T]");
  const int64_t T = ts.t.dim(0);
  check_validity_range(ts.first_valid, T, "time_deltas");
  DeltaSeq out;
  out.d = Tensor({T});
  out.stage = DeltaStage::kRaw;
  out.first_valid = ts.first_valid;
  for (int64_t i = ts.first_valid + 1; i < T; ++i) {
    const double diff = ts.t[i] - ts.t[i - 1];
    if (diff < 0.0)
      throw DataError("time_deltas: timestamps decrease at position " + std::to_string(i));
    out.d[i] = diff;
  }
  return out;
}

DeltaSeq normalize_deltas(const DeltaSeq& d, double dropout_rate, bool train, Rng& rng) {
  if (d.stage != DeltaStage::kRaw)
    throw ContractError("normalize_deltas: input must be at the raw stage");
  if (d.d.rank() != 1) throw ShapeError("normalize_deltas: deltas must be rank-1 [T]");
  const int64_t T = d.d.dim(0);
  check_validity_range(d.first_valid, T, "normalize_deltas");
  const int64_t L = T - d.first_valid;

  DeltaSeq out;
  out.d = Tensor({T});
  out.stage = DeltaStage::kNormalized;
  out.first_valid = d.first_valid;
  if (L == 0) return out;  // all padding: zeros

  Tensor valid({L});
  valid.vec() = d.d.vec().tail(L);
  Tape tape;
  Var x = tape.leaf(std::move(valid), false);
  Var y = layer_norm(x, tape.constant(Tensor::ones({L})), tape.constant(Tensor({L})));
  y = dropout(y, dropout_rate, train, rng);
  out.d.vec().tail(L) = y.val().vec();
  return out;
}

Var delta_layer_norm(Var d, Var gain, Var bias, int64_t first_valid) {
  const int64_t T = d.val().dim(0);
  if (d.val().rank() != 1) throw ShapeError("delta_layer_norm: rank-1 input required");
  if (gain.val().size() != T || bias.val().size() != T)
    throw ShapeError("delta_layer_norm: affine parameters must be length T");
  check_validity_range(first_valid, T, "delta_layer_norm");
  const int64_t L = T - first_valid;
  Tape& tp = *d.tape;
  if (L == 0) return tp.constant(Tensor({T}));

  auto tail = [&](Var v) {
    return reshape(slice_rows(reshape(v, {T, 1}), first_valid, T), {L});
  };
  Var y = layer_norm(tail(d), tail(gain), tail(bias));
  if (first_valid == 0) return y;
  std::vector<Var> parts = {tp.constant(Tensor({first_valid, 1})), reshape(y, {L, 1})};
  return reshape(concat_rows(parts), {T});
}

Var gate_deltas(Var d, Var w1, Var b1, Var w2, Var b2) {
  const int64_t T = d.val().dim(0);
  if (d.val().rank() != 1) throw ShapeError("gate_deltas: rank-1 delta required");
  if (w1.val().rank() != 2 || w1.val().dim(0) != T || w1.val().dim(1) != T ||
      w2.val().rank() != 2 || w2.val().dim(0) != T || w2.val().dim(1) != T)
    throw ShapeError("gate_deltas: weight matrices must be [T x T]");
  if (b1.val().size() != T || b2.val().size() != T)
    throw ShapeError("gate_deltas: biases must be length T");

  Var col = reshape(d, {T, 1});
  Var hidden = silu(add(matmul(tril(w1), col), reshape(b1, {T, 1})));
  Var alpha = sigmoid(add(matmul(tril(w2), hidden), reshape(b2, {T, 1})));
  return mul(reshape(alpha, {T}), d);
}

Var enhance_deltas(Var d, Var kernel, Var bias) {
  const int64_t T = d.val().dim(0);
  if (d.val().rank() != 1) throw ShapeError("enhance_deltas: rank-1 delta required");
  if (kernel.val().rank() != 1) throw ShapeError("enhance_deltas: kernel must be rank-1 [K]");
  if (bias.val().size() != 1) throw ShapeError("enhance_deltas: bias must be a single scalar");
  const int64_t K = kernel.val().dim(0);
  Var conv = causal_conv1d(reshape(d, {T, 1}), reshape(kernel, {K, 1}), bias);
  return reshape(silu(conv), {T});
}

Var layer_transition(Var d_in, Var d_used, Var gate) {
  if (!d_in.val().same_shape(d_used.val()))
    throw ShapeError("layer_transition: delta shapes differ");
  if (gate.val().size() != 1) throw ShapeError("layer_transition: gate must be a scalar");
  Var g = sigmoid(gate);
  // g*d_used + (1-g)*d_in, with the second term written as d_in - g*d_in
  return add(scale_by(d_used, g), sub(d_in, scale_by(d_in, g)));
}

}  // namespace tim4rec
