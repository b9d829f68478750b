#pragma once

#include <cstdint>
#include <string>
#include <vector>

// Forward-only wall-clock benchmark of the kernel implementations, used to
// check the advertised scaling: the chunked scan should grow near-linearly in
// T, the quadratic reference near-quadratically, and the time-aware path
// should cost only a small constant factor over the plain scan.

namespace tim4rec {

struct BenchConfig {
  std::vector<int64_t> t_list = {256, 512, 1024, 2048, 4096, 8192, 16384};
  int64_t heads = 1;
  int64_t head_dim = 64;  // per-head channels P
  int64_t state = 32;     // state dim N
  int64_t chunk = 64;
  int64_t repeats = 5;    // timed repetitions per point (median reported)
  int64_t warmup = 1;     // untimed calls before measuring
  std::vector<std::string> kernels = {"naive", "chunked", "tissd"};
  uint64_t seed = 99;
  void validate() const;  // throws ConfigError, including on unknown kernels
};

struct BenchRow {
  std::string kernel;
  int64_t t = 0;
  int64_t dim = 0;  // inner width heads * head_dim
  double median_seconds = 0.0;
};

// Rows come out kernel-major in config order, T ascending within a kernel,
// so the table layout is deterministic even though the timings are not.
struct BenchReport {
  std::vector<BenchRow> rows;
};

// Times each configured kernel at every T on shared random inputs. The
// "naive" entry builds the dense mask and runs the quadratic reference;
// "chunked" runs discretization plus the linear-time scan; "tissd" is the
// same scan with the time-delta stream fused in.
BenchReport run_bench(const BenchConfig& cfg);

// Least-squares slope of ln(median_seconds) against ln(T) for one kernel.
// Needs at least two points; throws DataError otherwise.
double loglog_slope(const BenchReport& rep, const std::string& kernel);

// Relative extra cost of the time-aware path at one T:
// (tissd - chunked) / chunked. Both rows must exist.
double overhead_ratio(const BenchReport& rep, int64_t t);

// `kernel,T,dim,median_seconds` rows under a header.
std::string bench_csv(const BenchReport& rep);

// `kernel,slope` rows under a header, kernels in first-appearance order.
std::string slopes_csv(const BenchReport& rep);

}  // namespace tim4rec
