#include "tim4rec/ops.hpp"

#include <algorithm>
#include <cmath>

namespace tim4rec {

namespace {

Tape& tape_of(Var a) {
  if (!a.valid()) throw ContractError("ops: invalid var");
  return *a.tape;
}

void check_same_tape(Var a, Var b) {
  if (a.tape != b.tape) throw ContractError("ops: vars on different tapes");
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) throw ShapeError(std::string(op) + ": shape mismatch");
}

// Shared skeleton for f(x) applied elementwise where f' depends only on x.
template <class F, class DF>
Var unary_from_input(Var a, F f, DF df) {
  Tape& t = tape_of(a);
  const Tensor& x = a.val();
  Tensor out(x.shape());
  for (int64_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  Var o = t.emit(std::move(out), t.needs(a));
  if (t.needs(a)) {
    t.set_pull(o, [a, df](Tape& tp, const Tensor& g) {
      const Tensor& x = tp.value(a);
      Tensor d(x.shape());
      for (int64_t i = 0; i < x.size(); ++i) d[i] = g[i] * df(x[i]);
      tp.accumulate(a, d);
    });
  }
  return o;
}

double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus_scalar(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

}  // namespace

// ---- arithmetic -------------------------------------------------------------

Var add(Var a, Var b) {
  Tape& t = tape_of(a);
  check_same_tape(a, b);
  check_same_shape(a.val(), b.val(), "add");
  Tensor out(a.val().shape());
  out.vec() = a.val().vec() + b.val().vec();
  Var o = t.emit(std::move(out), t.needs(a) || t.needs(b));
  if (t.needs(a) || t.needs(b)) {
    t.set_pull(o, [a, b](Tape& tp, const Tensor& g) {
      tp.accumulate(a, g);
      tp.accumulate(b, g);
    });
  }
  return o;
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a);
  check_same_tape(a, b);
  check_same_shape(a.val(), b.val(), "sub");
  Tensor out(a.val().shape());
  out.vec() = a.val().vec() - b.val().vec();
  Var o = t.emit(std::move(out), t.needs(a) || t.needs(b));
  if (t.needs(a) || t.needs(b)) {
    t.set_pull(o, [a, b](Tape& tp, const Tensor& g) {
      tp.accumulate(a, g);
      if (Tensor* gb = tp.grad_target(b)) gb->vec() -= g.vec();
    });
  }
  return o;
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a);
  check_same_tape(a, b);
  check_same_shape(a.val(), b.val(), "mul");
  Tensor out(a.val().shape());
  out.vec() = a.val().vec().cwiseProduct(b.val().vec());
  Var o = t.emit(std::move(out), t.needs(a) || t.needs(b));
  if (t.needs(a) || t.needs(b)) {
    t.set_pull(o, [a, b](Tape& tp, const Tensor& g) {
      if (Tensor* ga = tp.grad_target(a))
        ga->vec() += g.vec().cwiseProduct(tp.value(b).vec());
      if (Tensor* gb = tp.grad_target(b))
        gb->vec() += g.vec().cwiseProduct(tp.value(a).vec());
    });
  }
  return o;
}

Var neg(Var a) { return scale(a, -1.0); }

Var scale(Var a, double c) {
  Tape& t = tape_of(a);
  Tensor out(a.val().shape());
  out.vec() = a.val().vec() * c;
  Var o = t.emit(std::move(out), t.needs(a));
  if (t.needs(a)) {
    t.set_pull(o, [a, c](Tape& tp, const Tensor& g) {
      if (Tensor* ga = tp.grad_target(a)) ga->vec() += g.vec() * c;
    });
  }
  return o;
}

Var add_const(Var a, double c) {
  Tape& t = tape_of(a);
  Tensor out(a.val().shape());
  out.vec() = a.val().vec().array() + c;
  Var o = t.emit(std::move(out), t.needs(a));
  if (t.needs(a)) {
    t.set_pull(o, [a](Tape& tp, const Tensor& g) { tp.accumulate(a, g); });
  }
  return o;
}

// ---- elementwise maps -------------------------------------------------------

Var exp(Var a) {
  Tape& t = tape_of(a);
  const Tensor& x = a.val();
  Tensor out(x.shape());
  for (int64_t i = 0; i < x.size(); ++i) out[i] = std::exp(x[i]);
  Var o = t.emit(std::move(out), t.needs(a));
  if (t.needs(a)) {
    t.set_pull(o, [a, o](Tape& tp, const Tensor& g) {
      const Tensor& y = tp.value(o);  // d/dx exp = exp, reuse the output
      Tensor d(y.shape());
      d.vec() = g.vec().cwiseProduct(y.vec());
      tp.accumulate(a, d);
    });
  }
  return o;
}

Var log_abs(Var a) {
  Tape& t = tape_of(a);
  const Tensor& x = a.val();
  Tensor out(x.shape());
  for (int64_t i = 0; i < x.size(); ++i) out[i] = std::log(std::abs(x[i]));
  Var o = t.emit(std::move(out), t.needs(a));
  if (t.needs(a)) {
    t.set_pull(o, [a](Tape& tp, const Tensor& g) {
      const Tensor& x = tp.value(a);
      Tensor d(x.shape());
      // A zero upstream gradient stays zero even where x == 0 (the -inf
      // forward value is masked out downstream in those compositions).
      for (int64_t i = 0; i < x.size(); ++i) d[i] = g[i] == 0.0 ? 0.0 : g[i] / x[i];
      tp.accumulate(a, d);
    });
  }
  return o;
}

Var sigmoid(Var a) {
  Tape& t = tape_of(a);
  const Tensor& x = a.val();
  Tensor out(x.shape());
  for (int64_t i = 0; i < x.size(); ++i) out[i] = sigmoid_scalar(x[i]);
  Var o = t.emit(std::move(out), t.needs(a));
  if (t.needs(a)) {
    t.set_pull(o, [a, o](Tape& tp, const Tensor& g) {
      const Tensor& s = tp.value(o);
      Tensor d(s.shape());
      for (int64_t i = 0; i < s.size(); ++i) d[i] = g[i] * s[i] * (1.0 - s[i]);
      tp.accumulate(a, d);
    });
  }
  return o;
}

Var silu(Var a) {
  return unary_from_input(
      a, [](double x) { return x * sigmoid_scalar(x); },
      [](double x) {
        double s = sigmoid_scalar(x);
        return s * (1.0 + x * (1.0 - s));
      });
}

Var gelu(Var a) {
  constexpr double kInvSqrt2 = 0.7071067811865475244;
  constexpr double kInvSqrt2Pi = 0.3989422804014326779;
  return unary_from_input(
      a, [](double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); },
      [](double x) {
        double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
        double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
        return cdf + x * pdf;
      });
}

Var softplus(Var a) {
  return unary_from_input(a, softplus_scalar, sigmoid_scalar);
}

// ---- reductions ------------------------------------------------------------

Var sum(Var a) {
  Tape& t = tape_of(a);
  Tensor out = Tensor::scalar(a.val().vec().sum());
  Var o = t.emit(std::move(out), t.needs(a));
  if (t.needs(a)) {
    t.set_pull(o, [a](Tape& tp, const Tensor& g) {
      if (Tensor* ga = tp.grad_target(a)) ga->vec().array() += g[0];
    });
  }
  return o;
}

Var mean(Var a) {
  Tape& t = tape_of(a);
  int64_t n = a.val().size();
  if (n == 0) throw ShapeError("mean: empty tensor");
  Tensor out = Tensor::scalar(a.val().vec().sum() / static_cast<double>(n));
  Var o = t.emit(std::move(out), t.needs(a));
  if (t.needs(a)) {
    t.set_pull(o, [a, n](Tape& tp, const Tensor& g) {
      if (Tensor* ga = tp.grad_target(a)) ga->vec().array() += g[0] / static_cast<double>(n);
    });
  }
  return o;
}

// ---- shape plumbing ----------------------------------------------------------

Var reshape(Var a, Tensor::Shape shape) {
  Tape& t = tape_of(a);
  Tensor out(std::move(shape), a.val().storage());
  Var o = t.emit(std::move(out), t.needs(a));
  if (t.needs(a)) {
    t.set_pull(o, [a](Tape& tp, const Tensor& g) {
      if (Tensor* ga = tp.grad_target(a)) ga->vec() += g.vec();
    });
  }
  return o;
}

Var transpose(Var a) {
  Tape& t = tape_of(a);
  const Tensor& x = a.val();
  if (x.rank() != 2) throw ShapeError("transpose: rank-2 only");
  Tensor out({x.dim(1), x.dim(0)});
  out.mat() = x.mat().transpose();
  Var o = t.emit(std::move(out), t.needs(a));
  if (t.needs(a)) {
    t.set_pull(o, [a](Tape& tp, const Tensor& g) {
      if (Tensor* ga = tp.grad_target(a))
        ga->mat() += g.mat(g.shape()[0], g.shape()[1]).transpose();
    });
  }
  return o;
}

Var slice_rows(Var a, int64_t r0, int64_t r1) {
  Tape& t = tape_of(a);
  const Tensor& x = a.val();
  if (x.rank() != 2) throw ShapeError("slice_rows: rank-2 only");
  if (r0 < 0 || r1 < r0 || r1 > x.dim(0)) throw ShapeError("slice_rows: range out of bounds");
  Tensor out({r1 - r0, x.dim(1)});
  out.mat() = x.mat().middleRows(r0, r1 - r0);
  Var o = t.emit(std::move(out), t.needs(a));
  if (t.needs(a)) {
    t.set_pull(o, [a, r0, r1](Tape& tp, const Tensor& g) {
      if (Tensor* ga = tp.grad_target(a))
        ga->mat().middleRows(r0, r1 - r0) += g.mat(r1 - r0, ga->dim(1));
    });
  }
  return o;
}

Var slice_cols(Var a, int64_t c0, int64_t c1) {
  Tape& t = tape_of(a);
  const Tensor& x = a.val();
  if (x.rank() != 2) throw ShapeError("slice_cols: rank-2 only");
  if (c0 < 0 || c1 < c0 || c1 > x.dim(1)) throw ShapeError("slice_cols: range out of bounds");
  Tensor out({x.dim(0), c1 - c0});
  out.mat() = x.mat().middleCols(c0, c1 - c0);
  Var o = t.emit(std::move(out), t.needs(a));
  if (t.needs(a)) {
    t.set_pull(o, [a, c0, c1](Tape& tp, const Tensor& g) {
      if (Tensor* ga = tp.grad_target(a))
        ga->mat().middleCols(c0, c1 - c0) += g.mat(ga->dim(0), c1 - c0);
    });
  }
  return o;
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no parts");
  Tape& t = tape_of(parts[0]);
  int64_t rows = 0, cols = parts[0].val().dim(1);
  bool ng = false;
  for (Var p : parts) {
    check_same_tape(parts[0], p);
    const Tensor& x = p.val();
    if (x.rank() != 2 || x.dim(1) != cols) throw ShapeError("concat_rows: column mismatch");
    rows += x.dim(0);
    ng = ng || t.needs(p);
  }
  Tensor out({rows, cols});
  int64_t r = 0;
  for (Var p : parts) {
    out.mat().middleRows(r, p.val().dim(0)) = p.val().mat();
    r += p.val().dim(0);
  }
  Var o = t.emit(std::move(out), ng);
  if (ng) {
    std::vector<Var> ps = parts;
    t.set_pull(o, [ps, rows, cols](Tape& tp, const Tensor& g) {
      auto gm = g.mat(rows, cols);
      int64_t r = 0;
      for (Var p : ps) {
        int64_t n = tp.value(p).dim(0);
        if (Tensor* gp = tp.grad_target(p)) gp->mat() += gm.middleRows(r, n);
        r += n;
      }
    });
  }
  return o;
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no parts");
  Tape& t = tape_of(parts[0]);
  int64_t cols = 0, rows = parts[0].val().dim(0);
  bool ng = false;
  for (Var p : parts) {
    check_same_tape(parts[0], p);
    const Tensor& x = p.val();
    if (x.rank() != 2 || x.dim(0) != rows) throw ShapeError("concat_cols: row mismatch");
    cols += x.dim(1);
    ng = ng || t.needs(p);
  }
  Tensor out({rows, cols});
  int64_t c = 0;
  for (Var p : parts) {
    out.mat().middleCols(c, p.val().dim(1)) = p.val().mat();
    c += p.val().dim(1);
  }
  Var o = t.emit(std::move(out), ng);
  if (ng) {
    std::vector<Var> ps = parts;
    t.set_pull(o, [ps, rows, cols](Tape& tp, const Tensor& g) {
      auto gm = g.mat(rows, cols);
      int64_t c = 0;
      for (Var p : ps) {
        int64_t n = tp.value(p).dim(1);
        if (Tensor* gp = tp.grad_target(p)) gp->mat() += gm.middleCols(c, n);
        c += n;
      }
    });
  }
  return o;
}

Var pick(Var a, int64_t index) {
  Tape& t = tape_of(a);
  if (index < 0 || index >= a.val().size()) throw ShapeError("pick: index out of range");
  Tensor out = Tensor::scalar(a.val()[index]);
  Var o = t.emit(std::move(out), t.needs(a));
  if (t.needs(a)) {
    t.set_pull(o, [a, index](Tape& tp, const Tensor& g) {
      if (Tensor* ga = tp.grad_target(a)) (*ga)[index] += g[0];
    });
  }
  return o;
}

// ---- linear algebra ----------------------------------------------------------

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a);
  check_same_tape(a, b);
  const Tensor& A = a.val();
  const Tensor& B = b.val();
  if (A.rank() != 2 || B.rank() != 2) throw ShapeError("matmul: rank-2 only");
  if (A.dim(1) != B.dim(0))
    throw ShapeError("matmul: inner dims " + std::to_string(A.dim(1)) + " vs " +
                     std::to_string(B.dim(0)));
  Tensor out({A.dim(0), B.dim(1)});
  out.mat().noalias() = A.mat() * B.mat();
  Var o = t.emit(std::move(out), t.needs(a) || t.needs(b));
  if (t.needs(a) || t.needs(b)) {
    t.set_pull(o, [a, b](Tape& tp, const Tensor& g) {
      const Tensor& A = tp.value(a);
      const Tensor& B = tp.value(b);
      auto gm = g.mat(A.dim(0), B.dim(1));
      if (Tensor* ga = tp.grad_target(a)) ga->mat().noalias() += gm * B.mat().transpose();
      if (Tensor* gb = tp.grad_target(b)) gb->mat().noalias() += A.mat().transpose() * gm;
    });
  }
  return o;
}

Var add_row_broadcast(Var m, Var row) {
  Tape& t = tape_of(m);
  check_same_tape(m, row);
  const Tensor& M = m.val();
  const Tensor& r = row.val();
  if (M.rank() != 2 || r.rank() != 1 || r.dim(0) != M.dim(1))
    throw ShapeError("add_row_broadcast: need [R x C] + [C]");
  Tensor out(M.shape());
  out.mat() = M.mat().rowwise() + r.vec().transpose();
  Var o = t.emit(std::move(out), t.needs(m) || t.needs(row));
  if (t.needs(m) || t.needs(row)) {
    t.set_pull(o, [m, row](Tape& tp, const Tensor& g) {
      const Tensor& M = tp.value(m);
      auto gm = g.mat(M.dim(0), M.dim(1));
      tp.accumulate(m, g);
      if (Tensor* gr = tp.grad_target(row)) gr->vec() += gm.colwise().sum().transpose();
    });
  }
  return o;
}

Var scale_rows(Var m, Var v) {
  Tape& t = tape_of(m);
  check_same_tape(m, v);
  const Tensor& M = m.val();
  const Tensor& V = v.val();
  if (M.rank() != 2 || V.rank() != 1 || V.dim(0) != M.dim(0))
    throw ShapeError("scale_rows: need [R x C] * [R]");
  Tensor out(M.shape());
  out.mat() = V.vec().asDiagonal() * M.mat();
  Var o = t.emit(std::move(out), t.needs(m) || t.needs(v));
  if (t.needs(m) || t.needs(v)) {
    t.set_pull(o, [m, v](Tape& tp, const Tensor& g) {
      const Tensor& M = tp.value(m);
      const Tensor& V = tp.value(v);
      auto gm = g.mat(M.dim(0), M.dim(1));
      if (Tensor* gM = tp.grad_target(m)) gM->mat() += V.vec().asDiagonal() * gm;
      if (Tensor* gV = tp.grad_target(v))
        gV->vec() += gm.cwiseProduct(M.mat()).rowwise().sum();
    });
  }
  return o;
}

Var scale_by(Var m, Var s) {
  Tape& t = tape_of(m);
  check_same_tape(m, s);
  if (s.val().size() != 1) throw ShapeError("scale_by: scalar var required");
  double sv = s.val()[0];
  Tensor out(m.val().shape());
  out.vec() = m.val().vec() * sv;
  Var o = t.emit(std::move(out), t.needs(m) || t.needs(s));
  if (t.needs(m) || t.needs(s)) {
    t.set_pull(o, [m, s](Tape& tp, const Tensor& g) {
      if (Tensor* gM = tp.grad_target(m)) gM->vec() += g.vec() * tp.value(s)[0];
      if (Tensor* gs = tp.grad_target(s)) (*gs)[0] += g.vec().dot(tp.value(m).vec());
    });
  }
  return o;
}

Var tril(Var m) {
  Tape& t = tape_of(m);
  const Tensor& M = m.val();
  if (M.rank() != 2) throw ShapeError("tril: rank-2 only");
  Tensor out = M;
  out.mat().triangularView<Eigen::StrictlyUpper>().setZero();
  Var o = t.emit(std::move(out), t.needs(m));
  if (t.needs(m)) {
    t.set_pull(o, [m](Tape& tp, const Tensor& g) {
      if (Tensor* gM = tp.grad_target(m)) {
        const int64_t R = gM->dim(0), C = gM->dim(1);
        auto gm = g.mat(R, C);
        auto dst = gM->mat();
        for (int64_t i = 0; i < R; ++i)
          dst.row(i).head(std::min(i + 1, C)) += gm.row(i).head(std::min(i + 1, C));
      }
    });
  }
  return o;
}

// ---- neural-net pieces -------------------------------------------------------

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  Tape& t = tape_of(x);
  check_same_tape(x, gain);
  check_same_tape(x, bias);
  const Tensor& X = x.val();
  const bool one_row = X.rank() == 1;
  const int64_t R = one_row ? 1 : X.dim(0);
  const int64_t F = one_row ? X.dim(0) : X.dim(1);
  const Tensor& G = gain.val();
  const Tensor& B = bias.val();
  if (G.size() != F || B.size() != F) throw ShapeError("layer_norm: gain/bias length mismatch");

  Tensor out(X.shape());
  Tensor xhat({R, F});
  Tensor inv_sigma({R});
  auto xm = X.mat(R, F);
  auto om = out.mat(R, F);
  for (int64_t r = 0; r < R; ++r) {
    double mu = xm.row(r).mean();
    double var = (xm.row(r).array() - mu).square().mean();  // biased
    double is = 1.0 / std::sqrt(var + eps);
    inv_sigma[r] = is;
    xhat.mat().row(r) = (xm.row(r).array() - mu) * is;
    om.row(r) = xhat.mat().row(r).cwiseProduct(G.vec().transpose()) + B.vec().transpose();
  }
  Var o = t.emit(std::move(out), t.needs(x) || t.needs(gain) || t.needs(bias));
  if (t.needs(x) || t.needs(gain) || t.needs(bias)) {
    t.set_pull(o, [x, gain, bias, xhat, inv_sigma, R, F](Tape& tp, const Tensor& g) {
      auto gm = g.mat(R, F);
      const Tensor& G = tp.value(gain);
      if (Tensor* gb = tp.grad_target(bias)) gb->vec() += gm.colwise().sum().transpose();
      if (Tensor* gg = tp.grad_target(gain))
        gg->vec() += gm.cwiseProduct(xhat.mat()).colwise().sum().transpose();
      if (Tensor* gx = tp.grad_target(x)) {
        auto gxm = gx->mat(R, F);
        for (int64_t r = 0; r < R; ++r) {
          VecX h = gm.row(r).cwiseProduct(G.vec().transpose()).transpose();
          double mh = h.mean();
          double mhx = h.cwiseProduct(xhat.mat().row(r).transpose()).mean();
          VecX dx = ((h.array() - mh - xhat.mat().row(r).transpose().array() * mhx) *
                     inv_sigma[r])
                        .matrix();
          gxm.row(r) += dx.transpose();
        }
      }
    });
  }
  return o;
}

Var causal_conv1d(Var x, Var kernel, Var bias) {
  Tape& t = tape_of(x);
  check_same_tape(x, kernel);
  check_same_tape(x, bias);
  const Tensor& X = x.val();
  const Tensor& K = kernel.val();
  const Tensor& B = bias.val();
  const int64_t T = X.dim(0);
  const int64_t C = X.rank() == 1 ? 1 : X.dim(1);
  const int64_t KK = K.dim(0);
  const int64_t KC = K.rank() == 1 ? 1 : K.dim(1);
  if (KC != C) throw ShapeError("causal_conv1d: kernel channels mismatch");
  if (B.size() != C) throw ShapeError("causal_conv1d: bias length mismatch");
  if (T == 0) throw ShapeError("causal_conv1d: empty input");

  Tensor out(X.shape());
  auto xm = X.mat(T, C);
  auto km = K.mat(KK, C);
  auto om = out.mat(T, C);
  for (int64_t tt = 0; tt < T; ++tt) {
    om.row(tt) = B.vec().transpose();
    for (int64_t m = 0; m < KK; ++m) {
      int64_t s = std::max<int64_t>(tt - m, 0);
      om.row(tt) += km.row(m).cwiseProduct(xm.row(s));
    }
  }
  bool ng = t.needs(x) || t.needs(kernel) || t.needs(bias);
  Var o = t.emit(std::move(out), ng);
  if (ng) {
    t.set_pull(o, [x, kernel, bias, T, C, KK](Tape& tp, const Tensor& g) {
      auto gm = g.mat(T, C);
      const Tensor& X = tp.value(x);
      const Tensor& K = tp.value(kernel);
      auto xm = X.mat(T, C);
      auto km = K.mat(KK, C);
      if (Tensor* gb = tp.grad_target(bias)) gb->vec() += gm.colwise().sum().transpose();
      if (Tensor* gx = tp.grad_target(x)) {
        auto gxm = gx->mat(T, C);
        for (int64_t tt = 0; tt < T; ++tt)
          for (int64_t m = 0; m < KK; ++m)
            gxm.row(std::max<int64_t>(tt - m, 0)) += gm.row(tt).cwiseProduct(km.row(m));
      }
      if (Tensor* gk = tp.grad_target(kernel)) {
        auto gkm = gk->mat(KK, C);
        for (int64_t tt = 0; tt < T; ++tt)
          for (int64_t m = 0; m < KK; ++m)
            gkm.row(m) += gm.row(tt).cwiseProduct(xm.row(std::max<int64_t>(tt - m, 0)));
      }
    });
  }
  return o;
}

Var softmax(Var x) {
  Tape& t = tape_of(x);
  const Tensor& X = x.val();
  const int64_t R = X.rank() == 1 ? 1 : X.dim(0);
  const int64_t C = X.rank() == 1 ? X.dim(0) : X.dim(1);
  Tensor out(X.shape());
  auto xm = X.mat(R, C);
  auto om = out.mat(R, C);
  for (int64_t r = 0; r < R; ++r) {
    double mx = xm.row(r).maxCoeff();
    // scalar std::exp so a -inf logit maps to exactly zero probability
    // (Eigen's vectorized exp clamps the argument and returns a denormal)
    double s = 0.0;
    for (int64_t c = 0; c < C; ++c) {
      om(r, c) = std::exp(xm(r, c) - mx);
      s += om(r, c);
    }
    om.row(r) /= s;
  }
  Var o = t.emit(std::move(out), t.needs(x));
  if (t.needs(x)) {
    t.set_pull(o, [x, o, R, C](Tape& tp, const Tensor& g) {
      const Tensor& P = tp.value(o);
      auto pm = P.mat(R, C);
      auto gm = g.mat(R, C);
      if (Tensor* gx = tp.grad_target(x)) {
        auto gxm = gx->mat(R, C);
        for (int64_t r = 0; r < R; ++r) {
          double dot = gm.row(r).dot(pm.row(r));
          gxm.row(r) += pm.row(r).cwiseProduct((gm.row(r).array() - dot).matrix());
        }
      }
    });
  }
  return o;
}

Var nll_from_logits(Var logits, int64_t target) {
  Tape& t = tape_of(logits);
  const Tensor& X = logits.val();
  if (X.rank() != 1) throw ShapeError("nll_from_logits: rank-1 logits required");
  if (target < 0 || target >= X.size()) throw DataError("nll_from_logits: target out of range");
  double mx = X.vec().maxCoeff();
  double lse = mx + std::log((X.vec().array() - mx).exp().sum());
  Tensor out = Tensor::scalar(lse - X[target]);
  Var o = t.emit(std::move(out), t.needs(logits));
  if (t.needs(logits)) {
    t.set_pull(o, [logits, target, lse](Tape& tp, const Tensor& g) {
      if (Tensor* gx = tp.grad_target(logits)) {
        const Tensor& X = tp.value(logits);
        // d loss / d logits = softmax(logits) - onehot(target)
        gx->vec().array() += g[0] * (X.vec().array() - lse).exp();
        (*gx)[target] -= g[0];
      }
    });
  }
  return o;
}

Var nll_rows(Var logits, const std::vector<int64_t>& targets) {
  Tape& t = tape_of(logits);
  const Tensor& X = logits.val();
  if (X.rank() != 2) throw ShapeError("nll_rows: rank-2 logits required");
  const int64_t T = X.dim(0);
  const int64_t V = X.dim(1);
  if (V < 2) throw ShapeError("nll_rows: at least two columns required");
  if (static_cast<int64_t>(targets.size()) != T)
    throw ShapeError("nll_rows: one target per row required");
  for (int64_t tgt : targets)
    if (tgt < 0 || tgt >= V) throw DataError("nll_rows: target out of range");

  // column 0 is the pad item: it never competes and never carries a loss
  auto xm = X.mat();
  std::vector<double> lse(static_cast<size_t>(T), 0.0);
  double acc = 0.0;
  int64_t hit = 0;
  for (int64_t r = 0; r < T; ++r) {
    if (targets[static_cast<size_t>(r)] == 0) continue;
    double mx = xm.row(r).tail(V - 1).maxCoeff();
    double s = 0.0;
    for (int64_t c = 1; c < V; ++c) s += std::exp(xm(r, c) - mx);
    lse[static_cast<size_t>(r)] = mx + std::log(s);
    acc += lse[static_cast<size_t>(r)] - xm(r, targets[static_cast<size_t>(r)]);
    ++hit;
  }
  if (hit == 0) throw DataError("nll_rows: every target is the pad id");

  Var o = t.emit(Tensor::scalar(acc), t.needs(logits));
  if (t.needs(logits)) {
    std::vector<int64_t> tg = targets;
    t.set_pull(o, [logits, tg, lse, T, V](Tape& tp, const Tensor& g) {
      if (Tensor* gx = tp.grad_target(logits)) {
        const Tensor& X = tp.value(logits);
        auto xm = X.mat();
        auto gm = gx->mat();
        for (int64_t r = 0; r < T; ++r) {
          const int64_t tgt = tg[static_cast<size_t>(r)];
          if (tgt == 0) continue;
          const double l = lse[static_cast<size_t>(r)];
          for (int64_t c = 1; c < V; ++c) gm(r, c) += g[0] * std::exp(xm(r, c) - l);
          gm(r, tgt) -= g[0];
        }
      }
    });
  }
  return o;
}

Var dropout(Var x, double rate, bool train, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout: rate must be in [0, 1)");
  if (!train || rate == 0.0) return x;
  Tape& t = tape_of(x);
  const Tensor& X = x.val();
  Tensor mask(X.shape());
  double keep = 1.0 - rate;
  for (int64_t i = 0; i < X.size(); ++i) mask[i] = rng.uniform() < rate ? 0.0 : 1.0 / keep;
  Tensor out(X.shape());
  out.vec() = X.vec().cwiseProduct(mask.vec());
  Var o = t.emit(std::move(out), t.needs(x));
  if (t.needs(x)) {
    t.set_pull(o, [x, mask](Tape& tp, const Tensor& g) {
      if (Tensor* gx = tp.grad_target(x)) gx->vec() += g.vec().cwiseProduct(mask.vec());
    });
  }
  return o;
}

// ---- masking helpers ---------------------------------------------------------

Var zero_rows_before(Var x, int64_t first_valid) {
  Tape& t = tape_of(x);
  const Tensor& X = x.val();
  if (X.rank() != 2 && X.rank() != 1) throw ShapeError("zero_rows_before: rank 1 or 2");
  const int64_t R = X.dim(0);
  const int64_t C = X.rank() == 2 ? X.dim(1) : 1;
  if (first_valid < 0 || first_valid > R) throw ShapeError("zero_rows_before: bad row index");
  Tensor out = X;
  out.mat(R, C).topRows(first_valid).setZero();
  Var o = t.emit(std::move(out), t.needs(x));
  if (t.needs(x)) {
    t.set_pull(o, [x, first_valid, R, C](Tape& tp, const Tensor& g) {
      if (Tensor* gx = tp.grad_target(x))
        gx->mat(R, C).bottomRows(R - first_valid) +=
            g.mat(R, C).bottomRows(R - first_valid);
    });
  }
  return o;
}

Var set_element(Var x, int64_t index, double value) {
  Tape& t = tape_of(x);
  if (index < 0 || index >= x.val().size()) throw ShapeError("set_element: index out of range");
  Tensor out = x.val();
  out[index] = value;
  Var o = t.emit(std::move(out), t.needs(x));
  if (t.needs(x)) {
    t.set_pull(o, [x, index](Tape& tp, const Tensor& g) {
      Tensor d = g;
      d[index] = 0.0;
      tp.accumulate(x, d);
    });
  }
  return o;
}

Var embedding_lookup(Var table, const std::vector<int64_t>& ids) {
  Tape& t = tape_of(table);
  const Tensor& E = table.val();
  if (E.rank() != 2) throw ShapeError("embedding_lookup: table must be rank 2");
  const int64_t V = E.dim(0);
  const int64_t D = E.dim(1);
  for (int64_t id : ids)
    if (id < 0 || id >= V)
      throw DataError("embedding_lookup: id " + std::to_string(id) + " out of range [0, " +
                      std::to_string(V) + ")");
  Tensor out({static_cast<int64_t>(ids.size()), D});
  for (size_t i = 0; i < ids.size(); ++i) out.mat().row(i) = E.mat().row(ids[i]);
  Var o = t.emit(std::move(out), t.needs(table));
  if (t.needs(table)) {
    std::vector<int64_t> ids_copy = ids;
    t.set_pull(o, [table, ids_copy, D](Tape& tp, const Tensor& g) {
      if (Tensor* gt = tp.grad_target(table)) {
        auto gm = g.mat(static_cast<int64_t>(ids_copy.size()), D);
        for (size_t i = 0; i < ids_copy.size(); ++i)
          gt->mat().row(ids_copy[i]) += gm.row(i);
      }
    });
  }
  return o;
}

}  // namespace tim4rec
