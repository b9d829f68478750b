// Release acceptance suite. One self-contained check per ship criterion,
// each printing a single PASS/FAIL/SKIP line with its key numbers; wall-time
// budgets are part of the pass condition where the criterion has one. Exits
// nonzero if any gating criterion fails. Run directly or via ctest.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tim4rec/bench.hpp"
#include "tim4rec/data.hpp"
#include "tim4rec/eval.hpp"
#include "tim4rec/gradcheck.hpp"
#include "tim4rec/model.hpp"
#include "tim4rec/ops.hpp"
#include "tim4rec/rng.hpp"
#include "tim4rec/ssd.hpp"
#include "tim4rec/trainer.hpp"

#ifndef TIM4REC_SOURCE_DIR
#define TIM4REC_SOURCE_DIR "."
#endif

using namespace tim4rec;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string strf(const char* fmt, ...) {
  char buf[768];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, ap);
  va_end(ap);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "";
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool file_exists(const std::string& path) { return std::ifstream(path).good(); }

// max |got - want| over max |want|, the convention the unit suites use
double rel_diff(const Tensor& got, const Tensor& want) {
  double scale = 0.0, diff = 0.0;
  for (int64_t i = 0; i < want.size(); ++i) {
    scale = std::max(scale, std::abs(want[i]));
    diff = std::max(diff, std::abs(got[i] - want[i]));
  }
  return diff / std::max(scale, 1e-300);
}

bool bits_equal(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

bool tensor_bits_equal(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) return false;
  for (int64_t i = 0; i < a.size(); ++i)
    if (!bits_equal(a[i], b[i])) return false;
  return true;
}

// ---- 1. chunked scan vs quadratic-mask reference --------------------------------

bool crit_kernel_parity(std::string& detail) {
  Clock::time_point t0 = Clock::now();
  const int64_t cases = 200;
  double worst = 0.0;
  Rng root(2024);
  for (int64_t c = 0; c < cases; ++c) {
    Rng rng = root.fork(static_cast<uint64_t>(c) + 1);
    const int64_t T = 1 + static_cast<int64_t>(rng.uniform_int(512));
    const int64_t N = (c % 2 == 0) ? 4 : 32;
    const int64_t H = (c % 4 < 2) ? 1 : 4;
    const int64_t P = 1 + static_cast<int64_t>(rng.uniform_int(4));
    const int64_t chunk = 1 + static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(T)));

    Tensor X({T, H * P}), B({T, N}), C({T, N});
    for (int64_t i = 0; i < X.size(); ++i) X[i] = rng.normal();
    for (int64_t i = 0; i < B.size(); ++i) B[i] = rng.normal() / std::sqrt(static_cast<double>(N));
    for (int64_t i = 0; i < C.size(); ++i) C[i] = rng.normal() / std::sqrt(static_cast<double>(N));
    DecaySequence decay{Tensor({H, T}), DecayMode::kExactExp};
    for (int64_t i = 0; i < decay.values.size(); ++i) decay.values[i] = -3.0 * rng.uniform();

    Tensor ref = naive_ssd_forward(X, B, C, build_masks(decay));
    KernelConfig cfg;
    cfg.T = T;
    cfg.H = H;
    cfg.P = P;
    cfg.N = N;
    cfg.chunk = chunk;
    ChunkedOutput out = chunked_ssd_forward(X, B, C, decay, cfg);
    worst = std::max(worst, rel_diff(out.output, ref));
  }
  const double sec = seconds_since(t0);
  detail = strf("%lld cases T<=512 N{4,32} H{1,4} chunk{1..T}, max rel err %.2e, %.1f s / 120 s",
                static_cast<long long>(cases), worst, sec);
  return worst <= 1e-10 && sec < 120.0;
}

// ---- 2. all-ones time stream == plain path; mask entries == explicit products ---

bool crit_time_identity(std::string& detail) {
  const int64_t cases = 100;
  int64_t mismatches = 0;
  double worst = 0.0;
  Rng root(777);
  for (int64_t c = 0; c < cases; ++c) {
    Rng rng = root.fork(static_cast<uint64_t>(c) + 1);
    const int64_t T = 1 + static_cast<int64_t>(rng.uniform_int(64));
    const int64_t H = (c % 3 == 0) ? 1 : ((c % 3 == 1) ? 2 : 4);
    const int64_t P = 1 + static_cast<int64_t>(rng.uniform_int(4));
    const int64_t N = (c % 2 == 0) ? 4 : 32;
    const int64_t chunk = 1 + static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(T)));

    Tensor X({T, H * P}), B({T, N}), C({T, N}), delta({T}), A({H});
    for (int64_t i = 0; i < X.size(); ++i) X[i] = rng.normal();
    for (int64_t i = 0; i < B.size(); ++i) B[i] = rng.normal();
    for (int64_t i = 0; i < C.size(); ++i) C[i] = rng.normal();
    for (int64_t i = 0; i < T; ++i) delta[i] = 0.05 + 0.1 * rng.uniform();
    for (int64_t h = 0; h < H; ++h) A[h] = -(0.5 + rng.uniform());

    KernelConfig cfg;
    cfg.T = T;
    cfg.H = H;
    cfg.P = P;
    cfg.N = N;
    cfg.chunk = chunk;
    Tensor with_ones = tissd_apply(X, B, C, delta, Tensor::ones({T}), A, cfg);
    Tensor plain = tissd_apply(X, B, C, delta, Tensor(), A, cfg);
    for (int64_t i = 0; i < plain.size(); ++i)
      if (with_ones[i] != plain[i]) ++mismatches;

    // every mask entry against the explicit decay product for its run
    Discretized disc = discretize(delta, A, B, Tensor(), DecayMode::kExactExp);
    for (int64_t h = 0; h < H; ++h) {
      MaskedMatrix mask = build_mask(disc.decay, h);
      for (int64_t i = 0; i < T; ++i) {
        double prod = 1.0;
        worst = std::max(worst, std::abs(mask.entries.at(i, i) - 1.0));
        for (int64_t j = i - 1; j >= 0; --j) {
          prod *= std::exp(disc.decay.values.at(h, j + 1));
          worst = std::max(worst,
                           std::abs(mask.entries.at(i, j) - prod) / std::max(prod, 1e-300));
        }
      }
    }
  }
  detail = strf("%lld cases: all-ones stream exact-equal (%lld mismatches), "
                "mask vs explicit product max rel err %.2e",
                static_cast<long long>(cases), static_cast<long long>(mismatches), worst);
  return mismatches == 0 && worst <= 1e-12;
}

// ---- 3. structural invariants over random decay sequences -----------------------

bool crit_mask_structure(std::string& detail) {
  const int64_t sequences = 1000;
  int64_t bad = 0;
  std::string first_bad;
  Rng root(31337);
  for (int64_t c = 0; c < sequences; ++c) {
    Rng rng = root.fork(static_cast<uint64_t>(c) + 1);
    const int64_t T = 1 + static_cast<int64_t>(rng.uniform_int(64));
    const int64_t H = 1 + static_cast<int64_t>(rng.uniform_int(4));
    DecaySequence decay{Tensor({H, T}), DecayMode::kExactExp};
    for (int64_t i = 0; i < decay.values.size(); ++i) decay.values[i] = -4.0 * rng.uniform();
    for (int64_t h = 0; h < H; ++h) {
      MaskCheck mc = check_mask_structure(build_mask(decay, h), decay, h, 1e-12);
      if (!mc.ok) {
        ++bad;
        if (first_bad.empty()) first_bad = mc.detail;
      }
    }
  }
  detail = strf("%lld random decay sequences, %lld violations%s%s",
                static_cast<long long>(sequences), static_cast<long long>(bad),
                bad ? "; first: " : "", first_bad.c_str());
  return bad == 0;
}

// ---- 4. finite-difference audit: kernel composite, loss op, full tiny model -----

bool crit_gradients(std::string& detail) {
  Clock::time_point t0 = Clock::now();

  // kernel composite: every input of the fused time-aware scan takes a gradient
  KernelConfig kc;
  kc.T = 6;
  kc.H = 2;
  kc.P = 2;
  kc.N = 3;
  kc.chunk = 2;
  Rng rng(12);
  Tensor X({6, 4}), B({6, 3}), C({6, 3}), delta({6}), d({6}), A({2});
  for (int64_t i = 0; i < X.size(); ++i) X[i] = rng.normal();
  for (int64_t i = 0; i < B.size(); ++i) B[i] = rng.normal();
  for (int64_t i = 0; i < C.size(); ++i) C[i] = rng.normal();
  for (int64_t i = 0; i < 6; ++i) delta[i] = 0.05 + 0.1 * rng.uniform();
  for (int64_t i = 0; i < 6; ++i) d[i] = 0.5 + rng.uniform();
  for (int64_t i = 0; i < 2; ++i) A[i] = -(0.5 + rng.uniform());

  auto kernel_loss = [&kc](const std::vector<Tensor>& p) {
    Tape t;
    Var y = tissd_apply(t.leaf(p[0], true), t.leaf(p[1], true), t.leaf(p[2], true),
                        t.leaf(p[3], true), t.leaf(p[4], true), t.leaf(p[5], true), kc);
    return sum(y).val()[0];
  };
  std::vector<Tensor> kparams = {X, B, C, delta, d, A};
  std::vector<Tensor> kanalytic;
  {
    Tape t;
    Var vx = t.leaf(X, true), vb = t.leaf(B, true), vc = t.leaf(C, true);
    Var vdelta = t.leaf(delta, true), vd = t.leaf(d, true), va = t.leaf(A, true);
    Var loss = sum(tissd_apply(vx, vb, vc, vdelta, vd, va, kc));
    t.backward(loss);
    for (Var v : {vx, vb, vc, vdelta, vd, va}) kanalytic.push_back(t.grad(v));
  }
  GradCheckReport kernel_rep = finite_diff_check(kernel_loss, kparams, kanalytic, 1e-5);

  // training loss op, pad target excluded
  Tensor logits({4, 7});
  for (int64_t i = 0; i < logits.size(); ++i) logits[i] = rng.normal();
  const std::vector<int64_t> targets = {3, 0, 6, 1};
  auto nll_loss = [&targets](const std::vector<Tensor>& p) {
    Tape t;
    return nll_rows(t.leaf(p[0], true), targets).val()[0];
  };
  std::vector<Tensor> nanalytic;
  {
    Tape t;
    Var vl = t.leaf(logits, true);
    t.backward(nll_rows(vl, targets));
    nanalytic.push_back(t.grad(vl));
  }
  GradCheckReport nll_rep = finite_diff_check(nll_loss, {logits}, nanalytic, 1e-5);

  // full tiny model: every named parameter group (per-op checks also run in
  // the unit suites; this is the end-to-end pass over the composed graph)
  ModelConfig mc;
  mc.vocab = 21;  // 20 items + pad
  mc.d_model = 8;
  mc.expand = 2;
  mc.state = 4;
  mc.heads = 2;
  mc.conv_k = 2;
  mc.layers = 2;
  mc.max_len = 8;
  mc.chunk = 4;
  mc.dropout = 0.0;
  GradVerifyReport model_rep = verify_gradients(mc, 5);

  const double sec = seconds_since(t0);
  detail = strf("kernel composite %.1e, loss op %.1e, full tiny model %zu groups worst %.1e; "
                "%.1f s / 300 s",
                kernel_rep.max_rel_err, nll_rep.max_rel_err, model_rep.groups.size(),
                model_rep.worst, sec);
  return kernel_rep.max_rel_err <= 1e-4 && nll_rep.max_rel_err <= 1e-4 && model_rep.pass &&
         sec < 300.0;
}

// ---- 5. wall-clock scaling and time-path overhead --------------------------------

bool crit_scaling(std::string& detail) {
  Clock::time_point t0 = Clock::now();
  BenchConfig bc;
  bc.repeats = 3;
  BenchReport rep = run_bench(bc);
  const double naive = loglog_slope(rep, "naive");
  const double chunked = loglog_slope(rep, "chunked");
  const double overhead = overhead_ratio(rep, 2048);
  const double sec = seconds_since(t0);
  detail = strf("slopes: chunked %.2f <= 1.3, naive %.2f >= 1.7; time-path overhead at T=2048 "
                "%.1f%% <= 15%%; %.0f s / 600 s",
                chunked, naive, 100.0 * overhead, sec);
  return chunked <= 1.3 && naive >= 1.7 && overhead <= 0.15 && sec < 600.0;
}

// ---- 6. data pipeline: committed fixture golden + MovieLens-1M counts -----------

bool crit_data_pipeline(std::string& detail) {
  const std::string fixtures = std::string(TIM4REC_SOURCE_DIR) + "/tests/fixtures";
  EventLog toy_log = ingest(fixtures + "/toy_events.tsv", FormatSpec::tsv());
  SequenceDataset toy = build_sequences(k_core_filter(toy_log, 5));
  const std::string golden = read_file(fixtures + "/toy_manifest.txt");
  const bool toy_ok = !golden.empty() && manifest_text(toy) == golden;

  std::string ml_path;
  if (const char* env = std::getenv("TIM4REC_ML1M")) ml_path = env;
  if (ml_path.empty()) ml_path = std::string(TIM4REC_SOURCE_DIR) + "/data/ml-1m/ratings.dat";

  if (!file_exists(ml_path)) {
    detail = strf("toy fixture manifest %s; ml-1m leg skipped: raw file not found at %s "
                  "(set TIM4REC_ML1M to run it)",
                  toy_ok ? "matches golden" : "MISMATCH", ml_path.c_str());
    return toy_ok;
  }

  Clock::time_point t0 = Clock::now();
  EventLog log = ingest(ml_path, FormatSpec::movielens());
  SequenceDataset ds = build_sequences(k_core_filter(log, 5));
  const double sec = seconds_since(t0);
  const bool counts_ok =
      ds.user_count() == 6040 && ds.item_count() == 3416 && ds.interactions() == 999611;
  detail = strf("toy fixture manifest %s; ml-1m: %lld users / %lld items / %lld interactions "
                "(want 6040/3416/999611), %.1f s / 60 s",
                toy_ok ? "matches golden" : "MISMATCH", static_cast<long long>(ds.user_count()),
                static_cast<long long>(ds.item_count()),
                static_cast<long long>(ds.interactions()), sec);
  return toy_ok && counts_ok && sec < 60.0;
}

// ---- 7. ranking metrics vs a sort-and-scan oracle + closed forms ------------------

bool crit_metric_oracles(std::string& detail) {
  const int64_t cases = 1000;
  int64_t rank_bad = 0, value_bad = 0;
  Rng root(4242);
  const std::vector<int64_t> ks = {1, 5, 10};
  for (int64_t c = 0; c < cases; ++c) {
    Rng rng = root.fork(static_cast<uint64_t>(c) + 1);
    const int64_t V = 2 + static_cast<int64_t>(rng.uniform_int(60));  // pad + 1..61 items
    Tensor s({V});
    // coarse grid forces plenty of exact ties
    for (int64_t j = 1; j < V; ++j)
      s[j] = std::floor(rng.uniform() * 8.0) / 8.0;
    const int64_t target = 1 + static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(V - 1)));

    // oracle: sort descending, pessimistic rank = position after every tied score
    std::vector<double> sorted;
    for (int64_t j = 1; j < V; ++j) sorted.push_back(s[j]);
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    int64_t oracle = 0;
    for (size_t j = 0; j < sorted.size(); ++j)
      if (sorted[j] >= s[target]) oracle = static_cast<int64_t>(j) + 1;

    const int64_t got = rank_of_target(s, target);
    if (got != oracle) ++rank_bad;

    RankingReport rep = metrics({got}, ks);
    for (size_t i = 0; i < ks.size(); ++i) {
      const int64_t k = ks[i];
      const double hr = got <= k ? 1.0 : 0.0;
      const double ndcg = got <= k ? 1.0 / std::log2(static_cast<double>(got) + 1.0) : 0.0;
      const double mrr = got <= k ? 1.0 / static_cast<double>(got) : 0.0;
      if (!bits_equal(rep.hr[i], hr) || !bits_equal(rep.ndcg[i], ndcg) ||
          !bits_equal(rep.mrr[i], mrr))
        ++value_bad;
    }
  }

  RankingReport closed = metrics({3}, {10});
  const bool closed_ok =
      closed.hr[0] == 1.0 && closed.ndcg[0] == 0.5 && closed.mrr[0] == 1.0 / 3.0;

  detail = strf("%lld tied score vectors: %lld rank mismatches, %lld metric mismatches; "
                "rank-3 closed forms ndcg@10 %.4f (want 0.5000) mrr %.4f (want 0.3333)",
                static_cast<long long>(cases), static_cast<long long>(rank_bad),
                static_cast<long long>(value_bad), closed.ndcg[0], closed.mrr[0]);
  return rank_bad == 0 && value_bad == 0 && closed_ok;
}

// ---- 8. synthetic learning + time-ablation gap ------------------------------------

bool crit_learning_ablation(std::string& detail) {
  Clock::time_point t0 = Clock::now();
  SynthConfig sc;  // committed defaults: 500 users, 200 items, len 30, two gap regimes
  SequenceDataset ds = synthetic_dataset(sc);

  ModelConfig mc;
  mc.vocab = ds.vocab();
  mc.d_model = 32;
  mc.expand = 2;
  mc.state = 16;
  mc.heads = 2;
  mc.conv_k = 4;
  mc.layers = 1;
  mc.max_len = 30;
  mc.chunk = 15;
  mc.dropout = 0.0;

  TrainConfig tc;
  tc.lr = 0.01;
  tc.batch = 128;
  tc.max_epochs = 30;
  tc.patience = 30;
  tc.seed = 42;

  const std::vector<uint64_t> init_seeds = {1, 2, 3};
  double full_hr = 0.0, blind_hr = 0.0;
  double worst_ratio = 0.0;
  int64_t latest_half_epoch = -1;
  bool all_halved = true;

  for (uint64_t seed : init_seeds) {
    for (int variant = 0; variant < 2; ++variant) {
      mc.no_time = (variant == 1);
      Rng init(seed);
      Model m = init_model(mc, init);
      TrainHistory h = train(m, ds, tc);
      if (h.diverged || h.rows.empty()) {
        detail = strf("run diverged (seed %llu, %s)", static_cast<unsigned long long>(seed),
                      mc.no_time ? "no_time" : "full");
        return false;
      }
      RankingReport rep = evaluate_model(m, ds, Split::kTest, {10});
      if (mc.no_time) {
        blind_hr += rep.hr[0];
      } else {
        full_hr += rep.hr[0];
        const double init_loss = h.rows[0].loss;
        double best = init_loss;
        int64_t half_at = -1;
        for (const EpochRow& r : h.rows) {
          best = std::min(best, r.loss);
          if (half_at < 0 && r.loss < 0.5 * init_loss) half_at = r.epoch;
        }
        worst_ratio = std::max(worst_ratio, best / init_loss);
        if (half_at < 0) all_halved = false;
        latest_half_epoch = std::max(latest_half_epoch, half_at);
      }
    }
  }
  full_hr /= static_cast<double>(init_seeds.size());
  blind_hr /= static_cast<double>(init_seeds.size());
  const double gain = blind_hr > 0.0 ? full_hr / blind_hr - 1.0 : 0.0;
  const double sec = seconds_since(t0);

  detail = strf("loss ratio (worst over 3 seeds) %.3f < 0.5, halved by epoch %lld / 30; "
                "test hr@10 full %.4f vs no_time %.4f (+%.1f%% rel >= 5%%); %.0f s / 900 s",
                worst_ratio, static_cast<long long>(latest_half_epoch), full_hr, blind_hr,
                100.0 * gain, sec);
  return all_halved && worst_ratio < 0.5 && gain >= 0.05 && sec < 900.0;
}

// ---- 9. fixed-seed retrain + checkpoint round-trip --------------------------------

bool crit_determinism(std::string& detail) {
  SynthConfig sc;
  sc.users = 24;
  sc.items = 20;
  sc.categories = 4;
  sc.len = 10;
  sc.seed = 11;
  SequenceDataset ds = synthetic_dataset(sc);

  ModelConfig mc;
  mc.vocab = ds.vocab();
  mc.d_model = 16;
  mc.expand = 2;
  mc.state = 8;
  mc.heads = 2;
  mc.conv_k = 2;
  mc.layers = 1;
  mc.max_len = 10;
  mc.chunk = 5;
  mc.dropout = 0.0;

  TrainConfig tc;
  tc.lr = 0.01;
  tc.batch = 8;
  tc.max_epochs = 4;
  tc.patience = 4;
  tc.seed = 3;

  Rng ra(1);
  Model ma = init_model(mc, ra);
  TrainHistory ha = train(ma, ds, tc);
  Rng rb(1);
  Model mb = init_model(mc, rb);
  TrainHistory hb = train(mb, ds, tc);

  bool history_ok = ha.rows.size() == hb.rows.size() && !ha.rows.empty();
  if (history_ok)
    for (size_t i = 0; i < ha.rows.size(); ++i)
      history_ok = history_ok && bits_equal(ha.rows[i].loss, hb.rows[i].loss) &&
                   bits_equal(ha.rows[i].hr10, hb.rows[i].hr10) &&
                   bits_equal(ha.rows[i].ndcg10, hb.rows[i].ndcg10) &&
                   bits_equal(ha.rows[i].mrr10, hb.rows[i].mrr10);

  bool params_ok = true;
  auto pa = named_params(ma);
  auto pb = named_params(mb);
  for (size_t i = 0; i < pa.size(); ++i)
    params_ok = params_ok && tensor_bits_equal(*pa[i].second, *pb[i].second);

  const std::string ck = "acceptance_ckpt.tmp";
  save_checkpoint(ma, ck);
  Model loaded = load_checkpoint(ck);
  std::remove(ck.c_str());

  bool eval_ok = true;
  const std::vector<int64_t> ks = {1, 5, 10};
  for (Split split : {Split::kValid, Split::kTest}) {
    RankingReport want = evaluate_model(ma, ds, split, ks);
    RankingReport got = evaluate_model(loaded, ds, split, ks);
    for (size_t i = 0; i < ks.size(); ++i)
      eval_ok = eval_ok && bits_equal(want.hr[i], got.hr[i]) &&
                bits_equal(want.ndcg[i], got.ndcg[i]) && bits_equal(want.mrr[i], got.mrr[i]);
  }

  detail = strf("retrain: %zu history rows %s, final params %s; checkpoint round-trip eval "
                "(valid+test, K 1/5/10) %s",
                ha.rows.size(), history_ok ? "bit-exact" : "DIFFER",
                params_ok ? "bit-exact" : "DIFFER", eval_ok ? "bit-exact" : "DIFFER");
  return history_ok && params_ok && eval_ok;
}

struct Criterion {
  int id;
  const char* name;
  bool (*fn)(std::string&);
};

}  // namespace

int main() {
  std::printf("tim4rec acceptance suite\n");
  std::fflush(stdout);

  const Criterion gating[] = {
      {1, "kernel-parity", crit_kernel_parity},
      {2, "time-identity", crit_time_identity},
      {3, "mask-structure", crit_mask_structure},
      {4, "gradients", crit_gradients},
      {5, "scaling", crit_scaling},
      {6, "data-pipeline", crit_data_pipeline},
      {7, "metric-oracles", crit_metric_oracles},
      {8, "learning-ablation", crit_learning_ablation},
      {9, "determinism", crit_determinism},
  };

  bool all = true;
  for (const Criterion& c : gating) {
    std::string detail;
    bool ok = false;
    try {
      ok = c.fn(detail);
    } catch (const std::exception& e) {
      ok = false;
      detail = strf("exception: %s", e.what());
    }
    all = all && ok;
    std::printf("criterion %02d %-17s %s  (%s)\n", c.id, c.name, ok ? "PASS" : "FAIL",
                detail.c_str());
    std::fflush(stdout);
  }

  std::printf("criterion 10 %-17s SKIP  (optional full-dataset run, not gating; recipe and "
              "expected ranges in the README)\n",
              "full-ml1m");
  std::printf("acceptance: %s\n", all ? "PASS" : "FAIL");
  return all ? 0 : 1;
}
