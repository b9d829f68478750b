#include "tim4rec/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>

#include "tim4rec/errors.hpp"
#include "tim4rec/rng.hpp"
#include "tim4rec/ssd.hpp"

namespace tim4rec {

void BenchConfig::validate() const {
  if (t_list.empty()) throw ConfigError("bench: t_list must not be empty");
  for (int64_t t : t_list)
    if (t <= 0) throw ConfigError("bench: every T must be > 0");
  if (heads <= 0 || head_dim <= 0 || state <= 0 || chunk <= 0)
    throw ConfigError("bench: dims must be > 0");
  if (repeats <= 0) throw ConfigError("bench: repeats must be > 0");
  if (warmup < 0) throw ConfigError("bench: warmup must be >= 0");
  if (kernels.empty()) throw ConfigError("bench: kernel set must not be empty");
  for (const std::string& k : kernels)
    if (k != "naive" && k != "chunked" && k != "tissd")
      throw ConfigError("bench: unknown kernel: " + k);
}

namespace {

struct Inputs {
  Tensor X, B, C, delta, d, A;
};

Inputs make_inputs(int64_t T, const BenchConfig& cfg, Rng& rng) {
  const int64_t N = cfg.state;
  const int64_t width = cfg.heads * cfg.head_dim;
  Inputs in;
  in.X = Tensor({T, width});
  in.B = Tensor({T, N});
  in.C = Tensor({T, N});
  in.delta = Tensor({T});
  in.d = Tensor({T});
  in.A = Tensor({cfg.heads});
  const double bs = 1.0 / std::sqrt(static_cast<double>(N));
  for (int64_t i = 0; i < in.X.size(); ++i) in.X[i] = rng.normal();
  for (int64_t i = 0; i < in.B.size(); ++i) in.B[i] = rng.normal() * bs;
  for (int64_t i = 0; i < in.C.size(); ++i) in.C[i] = rng.normal() * bs;
  // step sizes and fused deltas in the ranges the model produces, decays ~0.9
  for (int64_t t = 0; t < T; ++t) in.delta[t] = 0.05 + 0.1 * rng.uniform();
  for (int64_t t = 0; t < T; ++t) in.d[t] = 0.5 + rng.uniform();
  for (int64_t h = 0; h < cfg.heads; ++h) in.A[h] = -(1.0 + 0.1 * static_cast<double>(h));
  return in;
}

// Wall time of one call; calls too fast for the clock are stretched over a
// calibrated inner loop and averaged.
double timed_seconds(const std::function<void()>& fn) {
  using clock = std::chrono::steady_clock;
  auto t0 = clock::now();
  fn();
  const double first = std::chrono::duration<double>(clock::now() - t0).count();
  if (first >= 1e-3) return first;
  const int64_t n =
      static_cast<int64_t>(std::ceil(1e-3 / std::max(first, 1e-9)));
  t0 = clock::now();
  for (int64_t i = 0; i < n; ++i) fn();
  return std::chrono::duration<double>(clock::now() - t0).count() /
         static_cast<double>(n);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

BenchReport run_bench(const BenchConfig& cfg) {
  cfg.validate();
  BenchReport rep;
  Rng root(cfg.seed);
  const Tensor none;

  for (const std::string& kernel : cfg.kernels) {
    for (size_t ti = 0; ti < cfg.t_list.size(); ++ti) {
      const int64_t T = cfg.t_list[ti];
      Rng rng = root.fork(ti + 1);  // same inputs for every kernel at this T
      Inputs in = make_inputs(T, cfg, rng);
      KernelConfig kc;
      kc.T = T;
      kc.H = cfg.heads;
      kc.P = cfg.head_dim;
      kc.N = cfg.state;
      kc.chunk = cfg.chunk;

      std::function<void()> fn;
      if (kernel == "naive") {
        fn = [&] {
          Discretized disc = discretize(in.delta, in.A, in.B, none, kc.mode);
          if (kc.H == 1) {
            // shared-mask path stays row-blocked; the per-head variant would
            // hold three [T x T] buffers at once, too much at the largest T
            MaskedMatrix m = build_mask(disc.decay, 0);
            naive_ssd_forward(in.X, disc.b_bar, in.C, m);
          } else {
            naive_ssd_forward(in.X, disc.b_bar, in.C, build_masks(disc.decay));
          }
        };
      } else if (kernel == "chunked") {
        fn = [&] { tissd_apply(in.X, in.B, in.C, in.delta, none, in.A, kc); };
      } else {
        fn = [&] { tissd_apply(in.X, in.B, in.C, in.delta, in.d, in.A, kc); };
      }

      for (int64_t w = 0; w < cfg.warmup; ++w) fn();
      std::vector<double> times;
      times.reserve(static_cast<size_t>(cfg.repeats));
      for (int64_t r = 0; r < cfg.repeats; ++r) times.push_back(timed_seconds(fn));

      BenchRow row;
      row.kernel = kernel;
      row.t = T;
      row.dim = cfg.heads * cfg.head_dim;
      row.median_seconds = median(times);
      rep.rows.push_back(std::move(row));
    }
  }
  return rep;
}

double loglog_slope(const BenchReport& rep, const std::string& kernel) {
  std::vector<double> xs, ys;
  for (const BenchRow& r : rep.rows) {
    if (r.kernel != kernel) continue;
    if (r.median_seconds <= 0.0)
      throw DataError("bench: non-positive timing for " + kernel);
    xs.push_back(std::log(static_cast<double>(r.t)));
    ys.push_back(std::log(r.median_seconds));
  }
  if (xs.size() < 2)
    throw DataError("bench: need at least two points to fit a slope for " + kernel);
  const double n = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw DataError("bench: degenerate T list for slope fit");
  return (n * sxy - sx * sy) / denom;
}

double overhead_ratio(const BenchReport& rep, int64_t t) {
  double tissd = -1.0, chunked = -1.0;
  for (const BenchRow& r : rep.rows) {
    if (r.t != t) continue;
    if (r.kernel == "tissd") tissd = r.median_seconds;
    if (r.kernel == "chunked") chunked = r.median_seconds;
  }
  if (tissd < 0.0 || chunked < 0.0)
    throw DataError("bench: overhead needs both tissd and chunked rows at T=" +
                    std::to_string(t));
  if (chunked <= 0.0) throw DataError("bench: non-positive chunked timing");
  return (tissd - chunked) / chunked;
}

std::string bench_csv(const BenchReport& rep) {
  std::string out = "kernel,T,dim,median_seconds\n";
  char buf[128];
  for (const BenchRow& r : rep.rows) {
    std::snprintf(buf, sizeof(buf), "%s,%lld,%lld,%.6e\n", r.kernel.c_str(),
                  static_cast<long long>(r.t), static_cast<long long>(r.dim),
                  r.median_seconds);
    out += buf;
  }
  return out;
}

std::string slopes_csv(const BenchReport& rep) {
  std::vector<std::string> order;
  for (const BenchRow& r : rep.rows)
    if (std::find(order.begin(), order.end(), r.kernel) == order.end())
      order.push_back(r.kernel);
  std::string out = "kernel,slope\n";
  char buf[96];
  for (const std::string& k : order) {
    std::snprintf(buf, sizeof(buf), "%s,%.4f\n", k.c_str(), loglog_slope(rep, k));
    out += buf;
  }
  return out;
}

}  // namespace tim4rec
