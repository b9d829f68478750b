#include "tim4rec/ssd.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tim4rec/errors.hpp"
#include "tim4rec/ops.hpp"

namespace tim4rec {

namespace {

double sign_of(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

void check_decay_shape(const DecaySequence& decay, const char* who) {
  if (decay.values.rank() != 2)
    throw ShapeError(std::string(who) + ": decay values must be [H x T]");
}

void check_rank2(const Tensor& t, const char* who, const char* name) {
  if (t.rank() != 2)
    throw ShapeError(std::string(who) + ": " + name + " must be rank-2");
}

}  // namespace

void KernelConfig::validate() const {
  if (T <= 0) throw ConfigError("KernelConfig: T must be positive");
  if (H <= 0) throw ConfigError("KernelConfig: H must be positive");
  if (P <= 0) throw ConfigError("KernelConfig: P must be positive");
  if (N <= 0) throw ConfigError("KernelConfig: N must be positive");
  if (chunk <= 0) throw ConfigError("KernelConfig: chunk size must be positive");
}

// ---- plain ops ---------------------------------------------------------------

Tensor segsum(const Tensor& log_decay) {
  if (log_decay.rank() != 2) throw ShapeError("segsum: [H x T] input required");
  const int64_t H = log_decay.dim(0);
  const int64_t T = log_decay.dim(1);
  Tensor out({H, T, T});
  for (int64_t h = 0; h < H; ++h)
    out.slice(h) = kernels::segsum<double>(log_decay.mat().row(h).transpose());
  return out;
}

MaskedMatrix build_mask(const DecaySequence& decay, int64_t head) {
  check_decay_shape(decay, "build_mask");
  if (head < 0 || head >= decay.heads())
    throw ShapeError("build_mask: head index out of range");
  const int64_t T = decay.length();
  MaskedMatrix mask;
  mask.entries = Tensor({T, T});
  auto em = mask.entries.mat();
  // fill in place: a second [T x T] temporary would double peak memory
  kernels::decay_mask_into<double>(decay.values.mat().row(head).transpose(), decay.mode, em);
  return mask;
}

std::vector<MaskedMatrix> build_masks(const DecaySequence& decay) {
  check_decay_shape(decay, "build_masks");
  std::vector<MaskedMatrix> masks;
  masks.reserve(static_cast<size_t>(decay.heads()));
  for (int64_t h = 0; h < decay.heads(); ++h) masks.push_back(build_mask(decay, h));
  return masks;
}

MaskCheck check_mask_structure(const MaskedMatrix& mask, const DecaySequence& decay,
                               int64_t head, double tol) {
  MaskCheck res;
  auto fail = [&res](const std::string& msg) {
    res.ok = false;
    res.detail = msg;
    return res;
  };

  const Tensor& m = mask.entries;
  if (m.rank() != 2 || m.dim(0) != m.dim(1)) return fail("mask is not square");
  if (decay.values.rank() != 2 || head < 0 || head >= decay.heads())
    return fail("decay/head inconsistent with mask");
  const int64_t T = m.dim(0);
  if (decay.length() != T) return fail("decay length does not match mask size");
  if (!m.all_finite()) return fail("mask has non-finite entries");

  auto mm = m.mat();
  const bool exact = decay.mode == DecayMode::kExactExp;
  auto row = decay.values.mat().row(head);
  bool well_posed = exact;
  for (int64_t t = 0; t < T && well_posed; ++t) well_posed = row[t] <= 0.0;

  for (int64_t i = 0; i < T; ++i) {
    for (int64_t j = i + 1; j < T; ++j)
      if (mm(i, j) != 0.0) {
        std::ostringstream os;
        os << "strict upper entry (" << i << "," << j << ") = " << mm(i, j) << " not exactly 0";
        return fail(os.str());
      }
    if (mm(i, i) != 1.0) {
      std::ostringstream os;
      os << "diagonal entry " << i << " = " << mm(i, i) << " not exactly 1";
      return fail(os.str());
    }
    for (int64_t j = 0; j < i; ++j) {
      const double factor = exact ? std::exp(row[j + 1]) : row[j + 1];
      const double want = mm(i, j + 1) * factor;
      const double scale = std::max({std::abs(mm(i, j)), std::abs(want), 1e-300});
      if (std::abs(mm(i, j) - want) > tol * scale) {
        std::ostringstream os;
        os << "recurrence broken at (" << i << "," << j << "): " << mm(i, j) << " vs "
           << want;
        return fail(os.str());
      }
      if (well_posed && (mm(i, j) < 0.0 || mm(i, j) > 1.0)) {
        std::ostringstream os;
        os << "entry (" << i << "," << j << ") = " << mm(i, j) << " outside [0, 1]";
        return fail(os.str());
      }
    }
  }
  return res;
}

Tensor naive_ssd_forward(const Tensor& X, const Tensor& B, const Tensor& C,
                         const std::vector<MaskedMatrix>& masks) {
  if (masks.empty()) throw ShapeError("naive_ssd_forward: at least one mask required");
  const int64_t H = static_cast<int64_t>(masks.size());
  check_rank2(X, "naive_ssd_forward", "X");
  check_rank2(B, "naive_ssd_forward", "B");
  check_rank2(C, "naive_ssd_forward", "C");
  kernels::detail::check_ssd_shapes<double>(X.mat(), B.mat(), C.mat(), H,
                                            "naive_ssd_forward");
  const int64_t T = X.dim(0);
  const int64_t P = X.dim(1) / H;
  for (const MaskedMatrix& m : masks)
    if (m.entries.rank() != 2 || m.entries.dim(0) != T || m.entries.dim(1) != T)
      throw ShapeError("naive_ssd_forward: mask must be [T x T]");

  MatX scores(T, T);
  scores.noalias() = C.mat() * B.mat().transpose();
  Tensor Y({T, X.dim(1)});
  for (int64_t h = 0; h < H; ++h) {
    MatX masked = masks[static_cast<size_t>(h)].entries.mat().cwiseProduct(scores);
    Y.mat().middleCols(h * P, P).noalias() = masked * X.mat().middleCols(h * P, P);
  }
  return Y;
}

Tensor naive_ssd_forward(const Tensor& X, const Tensor& B, const Tensor& C,
                         const MaskedMatrix& mask) {
  // One mask shared by every head: the per-head products collapse into a
  // single [T x T] x [T x H*P] multiply because column blocks are independent.
  check_rank2(X, "naive_ssd_forward", "X");
  check_rank2(B, "naive_ssd_forward", "B");
  check_rank2(C, "naive_ssd_forward", "C");
  kernels::detail::check_ssd_shapes<double>(X.mat(), B.mat(), C.mat(), 1,
                                            "naive_ssd_forward");
  const int64_t T = X.dim(0);
  if (mask.entries.rank() != 2 || mask.entries.dim(0) != T || mask.entries.dim(1) != T)
    throw ShapeError("naive_ssd_forward: mask must be [T x T]");
  Tensor Y({T, X.dim(1)});
  // row panels keep peak memory at one [blk x T] strip instead of a full
  // second [T x T] product; a single panel covers every unit-test size
  const int64_t blk = 2048;
  MatX panel;
  for (int64_t r0 = 0; r0 < T; r0 += blk) {
    const int64_t rows = std::min(blk, T - r0);
    panel.noalias() = C.mat().middleRows(r0, rows) * B.mat().transpose();
    panel.array() *= mask.entries.mat().middleRows(r0, rows).array();
    Y.mat().middleRows(r0, rows).noalias() = panel * X.mat();
  }
  return Y;
}

ChunkedOutput chunked_ssd_forward(const Tensor& X, const Tensor& B, const Tensor& C,
                                  const DecaySequence& decay, const KernelConfig& cfg,
                                  const ChunkState* init) {
  cfg.validate();
  check_decay_shape(decay, "chunked_ssd_forward");
  check_rank2(X, "chunked_ssd_forward", "X");
  check_rank2(B, "chunked_ssd_forward", "B");
  check_rank2(C, "chunked_ssd_forward", "C");
  if (decay.mode != cfg.mode)
    throw ConfigError("chunked_ssd_forward: decay mode does not match config");
  if (X.dim(0) != cfg.T || X.dim(1) != cfg.H * cfg.P)
    throw ShapeError("chunked_ssd_forward: X does not match config [T x H*P]");
  if (B.dim(0) != cfg.T || B.dim(1) != cfg.N || C.dim(0) != cfg.T || C.dim(1) != cfg.N)
    throw ShapeError("chunked_ssd_forward: B/C do not match config [T x N]");
  if (decay.heads() != cfg.H || decay.length() != cfg.T)
    throw ShapeError("chunked_ssd_forward: decay does not match config [H x T]");

  kernels::Mat<double> init_mat;
  const kernels::Mat<double>* init_ptr = nullptr;
  if (init) {
    const Tensor& s = init->state;
    if (s.rank() != 3 || s.dim(0) != cfg.H || s.dim(1) != cfg.N || s.dim(2) != cfg.P)
      throw ShapeError("chunked_ssd_forward: init state must be [H x N x P]");
    init_mat = s.mat(cfg.H * cfg.N, cfg.P);
    init_ptr = &init_mat;
  }

  kernels::ChunkedResult<double> res = kernels::chunked_forward<double>(
      X.mat(), B.mat(), C.mat(), decay.values.mat(), cfg.chunk, cfg.mode, init_ptr);

  ChunkedOutput out;
  out.output = Tensor({cfg.T, cfg.H * cfg.P});
  out.output.mat() = res.output;
  out.state.state = Tensor({cfg.H, cfg.N, cfg.P});
  out.state.state.mat(cfg.H * cfg.N, cfg.P) = res.state;
  return out;
}

Discretized discretize(const Tensor& delta, const Tensor& A, const Tensor& B,
                       const Tensor& d, DecayMode mode) {
  if (delta.rank() != 1) throw ShapeError("discretize: delta must be rank-1 [T]");
  if (A.rank() != 1) throw ShapeError("discretize: A must be rank-1 [H]");
  check_rank2(B, "discretize", "B");
  const int64_t T = delta.dim(0);
  const int64_t H = A.dim(0);
  if (B.dim(0) != T) throw ShapeError("discretize: B row count must equal delta length");
  const bool fused = !d.empty();
  if (fused && (d.rank() != 1 || d.dim(0) != T))
    throw ShapeError("discretize: d must be rank-1 [T] matching delta");
  for (int64_t t = 0; t < T; ++t)
    if (!(delta[t] >= 0.0)) throw ContractError("discretize: delta must be non-negative");
  for (int64_t h = 0; h < H; ++h)
    if (!(A[h] <= 0.0)) throw ContractError("discretize: A entries must be non-positive");

  VecX dh = fused ? VecX(delta.vec().cwiseProduct(d.vec())) : VecX(delta.vec());

  Discretized out;
  out.decay.mode = mode;
  out.decay.values = Tensor({H, T});
  out.decay.values.mat().noalias() = A.vec() * dh.transpose();
  out.b_bar = Tensor({T, B.dim(1)});
  out.b_bar.mat() = dh.asDiagonal() * B.mat();
  if (mode == DecayMode::kLinearApprox)
    out.divergence_warning = out.decay.values.vec().cwiseAbs().maxCoeff() >= 1.0;
  return out;
}

Tensor tissd_apply(const Tensor& X, const Tensor& B, const Tensor& C, const Tensor& delta,
                   const Tensor& d, const Tensor& A, const KernelConfig& cfg,
                   bool* divergence_warning) {
  cfg.validate();
  Discretized disc = discretize(delta, A, B, d, cfg.mode);
  if (divergence_warning) *divergence_warning = disc.divergence_warning;
  return chunked_ssd_forward(X, disc.b_bar, C, disc.decay, cfg).output;
}

// ---- differentiable variants ---------------------------------------------------

Var cumsum(Var a) {
  Tape& tp = *a.tape;
  const Tensor& A = a.val();
  if (A.rank() != 1) throw ShapeError("cumsum: rank-1 input required");
  const int64_t T = A.dim(0);
  Tensor out({T});
  double acc = 0.0;
  for (int64_t q = 0; q < T; ++q) out[q] = (acc += A[q]);
  Var y = tp.emit(std::move(out), tp.needs(a));
  if (tp.needs(a)) {
    tp.set_pull(y, [a, T](Tape& t, const Tensor& g) {
      Tensor da({T});
      double racc = 0.0;
      for (int64_t k = T - 1; k >= 0; --k) da[k] = (racc += g[k]);
      t.accumulate(a, da);
    });
  }
  return y;
}

Var rcumsum_exclusive(Var a) {
  Tape& tp = *a.tape;
  const Tensor& A = a.val();
  if (A.rank() != 1) throw ShapeError("rcumsum_exclusive: rank-1 input required");
  const int64_t T = A.dim(0);
  Tensor out({T});
  double acc = 0.0;
  for (int64_t q = T - 1; q >= 0; --q) {
    out[q] = acc;
    acc += A[q];
  }
  Var y = tp.emit(std::move(out), tp.needs(a));
  if (tp.needs(a)) {
    tp.set_pull(y, [a, T](Tape& t, const Tensor& g) {
      Tensor da({T});
      double pacc = 0.0;
      for (int64_t k = 0; k < T; ++k) {
        da[k] = pacc;
        pacc += g[k];
      }
      t.accumulate(a, da);
    });
  }
  return y;
}

Var segsum(Var a) {
  Tape& tp = *a.tape;
  const Tensor& A = a.val();
  if (A.rank() != 1) throw ShapeError("segsum: rank-1 input required");
  const int64_t T = A.dim(0);
  Tensor out({T, T});
  out.mat() = kernels::segsum<double>(A.vec());
  Var y = tp.emit(std::move(out), tp.needs(a));
  if (tp.needs(a)) {
    // dS/da[k] is 1 on the block {i >= k, j < k}, so da[k] sums the gradient
    // over that block; entries on/above the diagonal never contribute.
    tp.set_pull(y, [a, T](Tape& t, const Tensor& g) {
      auto gm = g.mat(T, T);
      Tensor da({T});
      for (int64_t i = 1; i < T; ++i) {
        double acc = 0.0;
        for (int64_t k = 1; k <= i; ++k) {
          acc += gm(i, k - 1);  // acc = sum_{j < k} g[i][j]
          da[k] += acc;
        }
      }
      t.accumulate(a, da);
    });
  }
  return y;
}

namespace {

// Sign pattern of the 1-SS products for linear-approx factors; the magnitudes
// travel through exp(segsum(log|a|)), keeping gradients exact wherever no
// factor is exactly zero.
Tensor sign_mask_of(const Tensor& a) {
  const int64_t T = a.dim(0);
  Tensor sgn({T, T});
  auto m = sgn.mat();
  for (int64_t i = 0; i < T; ++i) {
    m(i, i) = 1.0;
    double sp = 1.0;
    for (int64_t j = i - 1; j >= 0; --j) {
      sp *= sign_of(a[j + 1]);
      m(i, j) = sp;
    }
  }
  return sgn;
}

}  // namespace

Var decay_mask(Var values_row, DecayMode mode) {
  if (values_row.val().rank() != 1)
    throw ShapeError("decay_mask: rank-1 decay values required");
  if (mode == DecayMode::kExactExp) return exp(segsum(values_row));
  Var mag = exp(segsum(log_abs(values_row)));
  return mul(mag, values_row.tape->constant(sign_mask_of(values_row.val())));
}

namespace {

struct SsdDims {
  int64_t T = 0, N = 0, H = 0, P = 0;
};

SsdDims check_ssd_vars(Var X, Var B, Var C, Var decay_values, const char* who) {
  const Tensor& Xv = X.val();
  const Tensor& Bv = B.val();
  const Tensor& Cv = C.val();
  const Tensor& Dv = decay_values.val();
  if (Xv.rank() != 2 || Bv.rank() != 2 || Cv.rank() != 2 || Dv.rank() != 2)
    throw ShapeError(std::string(who) + ": rank-2 inputs required");
  SsdDims d;
  d.H = Dv.dim(0);
  kernels::detail::check_ssd_shapes<double>(Xv.mat(), Bv.mat(), Cv.mat(), d.H, who);
  if (Dv.dim(1) != Xv.dim(0)) throw ShapeError(std::string(who) + ": decay length mismatch");
  d.T = Xv.dim(0);
  d.N = Bv.dim(1);
  d.P = Xv.dim(1) / d.H;
  return d;
}

Var decay_row(Var decay_values, int64_t h, int64_t c0, int64_t c1) {
  Var row = slice_rows(decay_values, h, h + 1);
  const int64_t T = decay_values.val().dim(1);
  if (c0 != 0 || c1 != T) row = slice_cols(row, c0, c1);
  return reshape(row, {c1 - c0});
}

}  // namespace

Var naive_ssd_forward(Var X, Var B, Var C, Var decay_values, DecayMode mode) {
  const SsdDims dims = check_ssd_vars(X, B, C, decay_values, "naive_ssd_forward");
  Var scores = matmul(C, transpose(B));
  std::vector<Var> heads;
  heads.reserve(static_cast<size_t>(dims.H));
  for (int64_t h = 0; h < dims.H; ++h) {
    Var mask = decay_mask(decay_row(decay_values, h, 0, dims.T), mode);
    heads.push_back(matmul(mul(mask, scores), slice_cols(X, h * dims.P, (h + 1) * dims.P)));
  }
  return dims.H == 1 ? heads[0] : concat_cols(heads);
}

Var chunked_ssd_forward(Var X, Var B, Var C, Var decay_values, int64_t chunk,
                        DecayMode mode) {
  const SsdDims dims = check_ssd_vars(X, B, C, decay_values, "chunked_ssd_forward");
  if (chunk <= 0) throw ConfigError("chunked_ssd_forward: chunk size must be positive");
  Tape& tp = *X.tape;
  const bool exact = mode == DecayMode::kExactExp;
  const int64_t Q = std::min(chunk, dims.T);
  const int64_t n_chunks = (dims.T + Q - 1) / Q;

  std::vector<Var> state(static_cast<size_t>(dims.H));
  for (auto& s : state) s = tp.constant(Tensor({dims.N, dims.P}));

  std::vector<Var> y_chunks;
  y_chunks.reserve(static_cast<size_t>(n_chunks));
  for (int64_t c = 0; c < n_chunks; ++c) {
    const int64_t r0 = c * Q;
    const int64_t rows = std::min(Q, dims.T - r0);
    Var Xc = slice_rows(X, r0, r0 + rows);
    Var Bc = slice_rows(B, r0, r0 + rows);
    Var Cc = slice_rows(C, r0, r0 + rows);
    Var BcT = transpose(Bc);
    Var scores = matmul(Cc, BcT);

    std::vector<Var> head_out;
    head_out.reserve(static_cast<size_t>(dims.H));
    for (int64_t h = 0; h < dims.H; ++h) {
      Var a = decay_row(decay_values, h, r0, r0 + rows);
      Var din, dout, lm;
      if (exact) {
        din = exp(cumsum(a));
        dout = exp(rcumsum_exclusive(a));
        lm = exp(segsum(a));
      } else {
        Var la = log_abs(a);
        // Copy: appending nodes below may reallocate the tape's storage.
        const Tensor av = a.val();
        Tensor s_in({rows}), s_out({rows});
        double sp = 1.0;
        for (int64_t q = 0; q < rows; ++q) s_in[q] = (sp *= sign_of(av[q]));
        sp = 1.0;
        for (int64_t q = rows - 1; q >= 0; --q) {
          s_out[q] = sp;
          sp *= sign_of(av[q]);
        }
        din = mul(exp(cumsum(la)), tp.constant(std::move(s_in)));
        dout = mul(exp(rcumsum_exclusive(la)), tp.constant(std::move(s_out)));
        lm = mul(exp(segsum(la)), tp.constant(sign_mask_of(av)));
      }
      Var total = pick(din, rows - 1);

      Var Xh = slice_cols(Xc, h * dims.P, (h + 1) * dims.P);
      Var intra = matmul(mul(lm, scores), Xh);
      Var inter = scale_rows(matmul(Cc, state[static_cast<size_t>(h)]), din);
      head_out.push_back(add(intra, inter));

      Var upd = matmul(BcT, scale_rows(Xh, dout));
      state[static_cast<size_t>(h)] = add(scale_by(state[static_cast<size_t>(h)], total), upd);
    }
    y_chunks.push_back(dims.H == 1 ? head_out[0] : concat_cols(head_out));
  }
  return n_chunks == 1 ? y_chunks[0] : concat_rows(y_chunks);
}

std::pair<Var, Var> discretize(Var delta, Var A, Var B, Var d) {
  const Tensor& dv = delta.val();
  const Tensor& Av = A.val();
  const Tensor& Bv = B.val();
  if (dv.rank() != 1) throw ShapeError("discretize: delta must be rank-1 [T]");
  if (Av.rank() != 1) throw ShapeError("discretize: A must be rank-1 [H]");
  if (Bv.rank() != 2 || Bv.dim(0) != dv.dim(0))
    throw ShapeError("discretize: B must be [T x N] matching delta");
  const int64_t T = dv.dim(0);
  const int64_t H = Av.dim(0);
  Var dh = delta;
  if (d.valid()) {
    if (d.val().rank() != 1 || d.val().dim(0) != T)
      throw ShapeError("discretize: d must be rank-1 [T] matching delta");
    dh = mul(delta, d);
  }
  Var values = matmul(reshape(A, {H, 1}), reshape(dh, {1, T}));
  Var b_bar = scale_rows(B, dh);
  return {values, b_bar};
}

Var tissd_apply(Var X, Var B, Var C, Var delta, Var d, Var A, const KernelConfig& cfg) {
  cfg.validate();
  const Tensor& Xv = X.val();
  if (Xv.rank() != 2 || Xv.dim(0) != cfg.T || Xv.dim(1) != cfg.H * cfg.P)
    throw ShapeError("tissd_apply: X does not match config [T x H*P]");
  if (A.val().rank() != 1 || A.val().dim(0) != cfg.H)
    throw ShapeError("tissd_apply: A must be rank-1 [H]");
  if (B.val().rank() != 2 || B.val().dim(1) != cfg.N)
    throw ShapeError("tissd_apply: B must be [T x N]");
  auto [values, b_bar] = discretize(delta, A, B, d);
  return chunked_ssd_forward(X, b_bar, C, values, cfg.chunk, cfg.mode);
}

}  // namespace tim4rec
