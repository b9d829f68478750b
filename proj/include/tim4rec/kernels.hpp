#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>

#include "tim4rec/errors.hpp"
#include "tim4rec/tensor.hpp"

// Plain (non-autodiff) structured state-space kernels, templated on scalar.
// Shared conventions:
//   * Sequences are rows: X is [T x H*P] with head h owning columns
//     [h*P, (h+1)*P); B and C are [T x N] and shared across heads.
//   * Per-step decay enters as one value per (head, position). Entry 0 is the
//     decay "into" position 0 and is never used by a mask (empty product);
//     chunked scans still fold it into the carried state so that streaming
//     continuation across segment boundaries works.
//   * mask[i][j] = prod_{k=j+1..i} factor[k] for i >= j, 0 above the diagonal,
//     exactly 1 on it.

namespace tim4rec::kernels {

enum class DecayMode {
  kExactExp,      // values are log-decays; factors exp(value) in (0, 1] for value <= 0
  kLinearApprox,  // values are the factors themselves (first-order 1 + dA form)
};

template <class S>
using Mat = MatrixRM<S>;
template <class S>
using Vec = Vector<S>;
template <class S>
using MatRef = Eigen::Ref<const Mat<S>>;
template <class S>
using VecRef = Eigen::Ref<const Vec<S>>;

// Segment-sum of log decays: out[i][j] = sum_{k=j+1..i} v[k] for i >= j and
// -inf above the diagonal (so exp() of it is the mask). Built by the row
// recurrence S[i][j] = S[i][j+1] + v[j+1], which never subtracts and keeps the
// 1-semiseparable identity exact at the floating-point level.
template <class S>
Mat<S> segsum(const VecRef<S>& v) {
  const int64_t T = v.size();
  Mat<S> out = Mat<S>::Constant(T, T, -std::numeric_limits<S>::infinity());
  for (int64_t i = 0; i < T; ++i) {
    out(i, i) = S(0);
    for (int64_t j = i - 1; j >= 0; --j) out(i, j) = out(i, j + 1) + v[j + 1];
  }
  return out;
}

// In-place variants fill a preallocated [T x T] block (matrix or map) so a
// mask can be built without a second sequence-squared temporary.
template <class S, class Out>
void decay_mask_from_log_into(const VecRef<S>& v, Out&& m) {
  const int64_t T = v.size();
  for (int64_t i = 0; i < T; ++i) {
    m(i, i) = S(0);
    for (int64_t j = i - 1; j >= 0; --j) m(i, j) = m(i, j + 1) + v[j + 1];
  }
  for (int64_t i = 0; i < T; ++i)
    for (int64_t j = 0; j <= i; ++j) m(i, j) = std::exp(m(i, j));
  for (int64_t i = 0; i < T; ++i)
    for (int64_t j = i + 1; j < T; ++j) m(i, j) = S(0);
}

template <class S, class Out>
void decay_mask_from_factors_into(const VecRef<S>& v, Out&& out) {
  const int64_t T = v.size();
  for (int64_t i = 0; i < T; ++i) {
    out(i, i) = S(1);
    for (int64_t j = i - 1; j >= 0; --j) out(i, j) = out(i, j + 1) * v[j + 1];
    for (int64_t j = i + 1; j < T; ++j) out(i, j) = S(0);
  }
}

template <class S, class Out>
void decay_mask_into(const VecRef<S>& v, DecayMode mode, Out&& out) {
  if (mode == DecayMode::kExactExp)
    decay_mask_from_log_into<S>(v, out);
  else
    decay_mask_from_factors_into<S>(v, out);
}

template <class S>
Mat<S> decay_mask_from_log(const VecRef<S>& v) {
  Mat<S> m(v.size(), v.size());
  decay_mask_from_log_into<S>(v, m);
  return m;
}

// Same mask built from raw multiplicative factors (linear-approx mode).
template <class S>
Mat<S> decay_mask_from_factors(const VecRef<S>& v) {
  Mat<S> out(v.size(), v.size());
  decay_mask_from_factors_into<S>(v, out);
  return out;
}

template <class S>
Mat<S> decay_mask(const VecRef<S>& v, DecayMode mode) {
  return mode == DecayMode::kExactExp ? decay_mask_from_log<S>(v)
                                      : decay_mask_from_factors<S>(v);
}

namespace detail {
template <class S>
void check_ssd_shapes(const MatRef<S>& X, const MatRef<S>& B, const MatRef<S>& C,
                      int64_t heads, const char* who) {
  if (X.rows() == 0) throw ShapeError(std::string(who) + ": empty sequence");
  if (B.rows() != X.rows() || C.rows() != X.rows())
    throw ShapeError(std::string(who) + ": sequence length mismatch");
  if (B.cols() != C.cols()) throw ShapeError(std::string(who) + ": B/C state dim mismatch");
  if (heads <= 0 || X.cols() % heads != 0)
    throw ShapeError(std::string(who) + ": X columns not divisible by head count");
}
}  // namespace detail

// Quadratic-time reference: materializes each head's mask and applies
// Y_h = (mask ∘ C B^T) X_h. decay_values is [H x T].
template <class S>
Mat<S> naive_forward(const MatRef<S>& X, const MatRef<S>& B, const MatRef<S>& C,
                     const MatRef<S>& decay_values, DecayMode mode) {
  const int64_t H = decay_values.rows();
  detail::check_ssd_shapes<S>(X, B, C, H, "naive_forward");
  if (decay_values.cols() != X.rows())
    throw ShapeError("naive_forward: decay length mismatch");
  const int64_t T = X.rows();
  const int64_t P = X.cols() / H;

  Mat<S> scores(T, T);
  scores.noalias() = C * B.transpose();
  Mat<S> Y(T, X.cols());
  for (int64_t h = 0; h < H; ++h) {
    Mat<S> masked = decay_mask<S>(decay_values.row(h).transpose(), mode).cwiseProduct(scores);
    Y.middleCols(h * P, P).noalias() = masked * X.middleCols(h * P, P);
  }
  return Y;
}

// Same arithmetic as naive_forward but materializes the mask in row blocks, so
// long benchmark sequences never hold a full T x T buffer per head. Row i of
// the mask is rebuilt with the identical backward recurrence; only the score
// GEMM's panel blocking can reassociate, so results agree to roundoff.
template <class S>
Mat<S> naive_forward_blocked(const MatRef<S>& X, const MatRef<S>& B, const MatRef<S>& C,
                             const MatRef<S>& decay_values, DecayMode mode,
                             int64_t block_rows = 1024) {
  const int64_t H = decay_values.rows();
  detail::check_ssd_shapes<S>(X, B, C, H, "naive_forward_blocked");
  if (block_rows <= 0) throw ConfigError("naive_forward_blocked: block_rows must be positive");
  const int64_t T = X.rows();
  const int64_t P = X.cols() / H;
  const bool exact = mode == DecayMode::kExactExp;

  Mat<S> Y(T, X.cols());
  Mat<S> masked(std::min(block_rows, T), T);
  for (int64_t h = 0; h < H; ++h) {
    const auto v = decay_values.row(h);
    for (int64_t r0 = 0; r0 < T; r0 += block_rows) {
      const int64_t rows = std::min(block_rows, T - r0);
      masked.topRows(rows).noalias() = C.middleRows(r0, rows) * B.transpose();
      for (int64_t r = 0; r < rows; ++r) {
        const int64_t i = r0 + r;
        // Walk the row exactly as segsum does, then fold in exp and the score;
        // the diagonal keeps its raw score (empty product).
        S acc = exact ? S(0) : S(1);
        for (int64_t j = i - 1; j >= 0; --j) {
          acc = exact ? acc + v[j + 1] : acc * v[j + 1];
          masked(r, j) *= exact ? std::exp(acc) : acc;
        }
        masked.row(r).tail(T - i - 1).setZero();
      }
      Y.block(r0, h * P, rows, P).noalias() =
          masked.topRows(rows) * X.middleCols(h * P, P);
    }
  }
  return Y;
}

template <class S>
struct ChunkedResult {
  Mat<S> output;  // T x H*P
  Mat<S> state;   // H*N x P, head h owns rows [h*N, (h+1)*N)
};

// Linear-time chunked scan. Within a chunk the quadratic form is applied
// directly; across chunks an H x N x P state carries the recurrence
// state <- (chunk decay product) * state + sum_j (decay j..chunk end) B_j X_j^T.
// Cost O(T*chunk*(N+P) + T*N*P), memory O(chunk^2 + H*N*P).
template <class S>
ChunkedResult<S> chunked_forward(const MatRef<S>& X, const MatRef<S>& B, const MatRef<S>& C,
                                 const MatRef<S>& decay_values, int64_t chunk, DecayMode mode,
                                 const Mat<S>* init_state = nullptr) {
  const int64_t H = decay_values.rows();
  detail::check_ssd_shapes<S>(X, B, C, H, "chunked_forward");
  if (decay_values.cols() != X.rows())
    throw ShapeError("chunked_forward: decay length mismatch");
  if (chunk <= 0) throw ConfigError("chunked_forward: chunk size must be positive");
  const int64_t T = X.rows();
  const int64_t N = B.cols();
  const int64_t P = X.cols() / H;
  const bool exact = mode == DecayMode::kExactExp;
  const int64_t Q = std::min(chunk, T);
  const int64_t n_chunks = (T + Q - 1) / Q;

  ChunkedResult<S> res;
  res.output.resize(T, X.cols());
  if (init_state) {
    if (init_state->rows() != H * N || init_state->cols() != P)
      throw ShapeError("chunked_forward: init state shape mismatch");
    res.state = *init_state;
  } else {
    res.state = Mat<S>::Zero(H * N, P);
  }

  Mat<S> scores(Q, Q), local_mask(Q, Q), masked(Q, Q);
  Vec<S> din(Q), dout(Q), a(Q);
  for (int64_t c = 0; c < n_chunks; ++c) {
    const int64_t r0 = c * Q;
    const int64_t rows = std::min(Q, T - r0);
    const auto Bc = B.middleRows(r0, rows);
    const auto Cc = C.middleRows(r0, rows);
    scores.topLeftCorner(rows, rows).noalias() = Cc * Bc.transpose();

    for (int64_t h = 0; h < H; ++h) {
      a.head(rows) = decay_values.row(h).segment(r0, rows).transpose();
      // Inclusive prefix over the chunk (entry 0 included: it links the carried
      // state across the chunk boundary) and exclusive suffix toward the end.
      if (exact) {
        S acc = S(0);
        for (int64_t q = 0; q < rows; ++q) din[q] = std::exp(acc += a[q]);
        acc = S(0);
        for (int64_t q = rows - 1; q >= 0; --q) {
          dout[q] = std::exp(acc);
          acc += a[q];
        }
      } else {
        S acc = S(1);
        for (int64_t q = 0; q < rows; ++q) din[q] = acc *= a[q];
        acc = S(1);
        for (int64_t q = rows - 1; q >= 0; --q) {
          dout[q] = acc;
          acc *= a[q];
        }
      }
      const S total = din[rows - 1];

      // Intra-chunk quadratic piece.
      local_mask.topLeftCorner(rows, rows) = decay_mask<S>(a.head(rows), mode);
      masked.topLeftCorner(rows, rows) =
          scores.topLeftCorner(rows, rows).cwiseProduct(local_mask.topLeftCorner(rows, rows));
      auto Xh = X.block(r0, h * P, rows, P);
      auto Yh = res.output.block(r0, h * P, rows, P);
      Yh.noalias() = masked.topLeftCorner(rows, rows) * Xh;

      // Inter-chunk contribution from the carried state, then the state update.
      auto Sh = res.state.middleRows(h * N, N);
      Yh.noalias() += din.head(rows).asDiagonal() * (Cc * Sh);
      Mat<S> new_state(N, P);
      new_state.noalias() = Bc.transpose() * (dout.head(rows).asDiagonal() * Xh);
      Sh = total * Sh + new_state;
    }
  }
  return res;
}

}  // namespace tim4rec::kernels
