#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "tim4rec/bench.hpp"
#include "tim4rec/data.hpp"
#include "tim4rec/errors.hpp"
#include "tim4rec/eval.hpp"
#include "tim4rec/model.hpp"
#include "tim4rec/rng.hpp"
#include "tim4rec/ssd.hpp"
#include "tim4rec/trainer.hpp"

// Command-line surface. Machine-readable output (manifests, metric and bench
// tables) goes to stdout; progress and diagnostics go to stderr, so stdout can
// be piped or captured as-is. Exit code 0 iff no errors.

namespace {

using namespace tim4rec;
namespace fs = std::filesystem;

// ---- shared dataset source flags ----------------------------------------------

struct DataArgs {
  std::string dir;
  bool synth = false;
  SynthConfig synth_cfg;
};

void add_data_options(CLI::App* cmd, DataArgs& a) {
  auto* dir = cmd->add_option("--data", a.dir, "processed dataset directory");
  auto* synth =
      cmd->add_flag("--synth", a.synth, "use the built-in synthetic generator instead");
  dir->excludes(synth);
  cmd->add_option("--synth-users", a.synth_cfg.users, "synthetic: user count")
      ->capture_default_str();
  cmd->add_option("--synth-items", a.synth_cfg.items, "synthetic: catalog size")
      ->capture_default_str();
  cmd->add_option("--synth-categories", a.synth_cfg.categories, "synthetic: category count")
      ->capture_default_str();
  cmd->add_option("--synth-len", a.synth_cfg.len, "synthetic: events per user")
      ->capture_default_str();
  cmd->add_option("--synth-p-short", a.synth_cfg.p_short, "synthetic: short-gap probability")
      ->capture_default_str();
  cmd->add_option("--synth-noise", a.synth_cfg.noise, "synthetic: rule-breaking probability")
      ->capture_default_str();
  cmd->add_option("--synth-seed", a.synth_cfg.seed, "synthetic: generator seed")
      ->capture_default_str();
}

SequenceDataset resolve_dataset(const DataArgs& a) {
  if (a.synth) {
    SequenceDataset ds = synthetic_dataset(a.synth_cfg);
    std::fprintf(stderr, "synthetic dataset: %lld users, %lld items, %lld events\n",
                 static_cast<long long>(ds.user_count()),
                 static_cast<long long>(ds.item_count()),
                 static_cast<long long>(ds.interactions()));
    return ds;
  }
  if (a.dir.empty()) throw ConfigError("pass --data DIR or --synth");
  SequenceDataset ds = load_dataset(a.dir);
  std::fprintf(stderr, "loaded %s: %lld users, %lld items, %lld events\n", a.dir.c_str(),
               static_cast<long long>(ds.user_count()),
               static_cast<long long>(ds.item_count()),
               static_cast<long long>(ds.interactions()));
  return ds;
}

// ---- model / train flag groups -------------------------------------------------

struct ModelArgs {
  ModelConfig cfg;
  std::string mode = "exact";
};

void add_model_options(CLI::App* cmd, ModelArgs& a) {
  cmd->add_option("--d-model", a.cfg.d_model, "embedding width")->capture_default_str();
  cmd->add_option("--expand", a.cfg.expand, "inner expansion factor")->capture_default_str();
  cmd->add_option("--state", a.cfg.state, "SSM state size")->capture_default_str();
  cmd->add_option("--heads", a.cfg.heads, "SSD heads")->capture_default_str();
  cmd->add_option("--conv-k", a.cfg.conv_k, "causal conv kernel size")->capture_default_str();
  cmd->add_option("--layers", a.cfg.layers, "stacked mixer blocks")->capture_default_str();
  cmd->add_option("--max-len", a.cfg.max_len, "padded sequence length")->capture_default_str();
  cmd->add_option("--chunk", a.cfg.chunk, "kernel chunk length")->capture_default_str();
  cmd->add_option("--dropout", a.cfg.dropout, "dropout rate")->capture_default_str();
  cmd->add_option("--mode", a.mode, "decay mode")
      ->check(CLI::IsMember({"exact", "linear"}))
      ->capture_default_str();
  cmd->add_flag("--no-time", a.cfg.no_time, "ablation: ignore timestamps (plain SSD)");
  cmd->add_flag("--no-ffn", a.cfg.no_ffn, "ablation: drop the FFN sub-block");
}

ModelConfig finish_model(const ModelArgs& a, int64_t vocab) {
  ModelConfig cfg = a.cfg;
  cfg.vocab = vocab;
  cfg.mode = a.mode == "linear" ? DecayMode::kLinearApprox : DecayMode::kExactExp;
  cfg.validate();
  return cfg;
}

std::string prefixed_kv(const std::string& split, const RankingReport& rep) {
  std::string out;
  std::string kv = report_kv(rep);
  size_t at = 0;
  while (at < kv.size()) {
    size_t nl = kv.find('\n', at);
    if (nl == std::string::npos) nl = kv.size();
    out += split + "," + kv.substr(at, nl - at) + "\n";
    at = nl + 1;
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path);
  f << text;
  if (!f.good()) throw DataError("short write to " + path);
}

std::string trimmed(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// `key = value` lines, '#' comments, keys named after the long flags. Values
// apply only to options the command line left untouched (flags win); unknown
// keys are an error.
void apply_config_file(CLI::App* cmd, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot read config file " + path);
  std::string line;
  int64_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trimmed(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trimmed(line.substr(0, eq));
    std::string value = trimmed(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (opt == nullptr)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": unknown key: " + key);
    if (opt->count() > 0) continue;  // set earlier (command line or a prior line)
    opt->add_result(value);
    opt->run_callback();
  }
}

// ---- verify checks --------------------------------------------------------------

double max_rel_to(const Tensor& got, const Tensor& want) {
  double scale = 0.0, diff = 0.0;
  for (int64_t i = 0; i < want.size(); ++i) scale = std::max(scale, std::abs(want[i]));
  for (int64_t i = 0; i < want.size(); ++i) diff = std::max(diff, std::abs(got[i] - want[i]));
  return scale == 0.0 ? diff : diff / scale;
}

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

CheckResult verify_kernel_parity(bool quick) {
  Rng rng(101);
  const int cases = quick ? 40 : 200;
  const int64_t t_cap = quick ? 64 : 512;
  double worst = 0.0;
  for (int c = 0; c < cases; ++c) {
    const int64_t T = 1 + static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(t_cap)));
    const int64_t N = rng.uniform_int(2) == 0 ? 4 : 32;
    const int64_t H = rng.uniform_int(2) == 0 ? 1 : 4;
    const int64_t P = 1 + static_cast<int64_t>(rng.uniform_int(4));
    KernelConfig kc;
    kc.T = T;
    kc.H = H;
    kc.P = P;
    kc.N = N;
    kc.chunk = 1 + static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(T)));

    Tensor X({T, H * P}), B({T, N}), C({T, N});
    for (int64_t i = 0; i < X.size(); ++i) X[i] = rng.normal();
    for (int64_t i = 0; i < B.size(); ++i) B[i] = rng.normal();
    for (int64_t i = 0; i < C.size(); ++i) C[i] = rng.normal();
    DecaySequence decay;
    decay.mode = DecayMode::kExactExp;
    decay.values = Tensor({H, T});
    for (int64_t i = 0; i < decay.values.size(); ++i)
      decay.values[i] = -0.2 * rng.uniform();

    Tensor naive = naive_ssd_forward(X, B, C, build_masks(decay));
    Tensor chunked = chunked_ssd_forward(X, B, C, decay, kc).output;
    worst = std::max(worst, max_rel_to(chunked, naive));
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%d cases, max rel err %.3e", cases, worst);
  return {"kernel_parity", worst <= 1e-10, buf};
}

CheckResult verify_time_aware_identity(bool quick) {
  Rng rng(102);
  const int cases = quick ? 20 : 100;
  const int64_t t_cap = quick ? 64 : 256;
  double worst_mask = 0.0;
  for (int c = 0; c < cases; ++c) {
    const int64_t T = 2 + static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(t_cap - 1)));
    KernelConfig kc;
    kc.T = T;
    kc.H = 2;
    kc.P = 3;
    kc.N = 4;
    kc.chunk = 1 + static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(T)));

    Tensor X({T, kc.H * kc.P}), B({T, kc.N}), C({T, kc.N});
    for (int64_t i = 0; i < X.size(); ++i) X[i] = rng.normal();
    for (int64_t i = 0; i < B.size(); ++i) B[i] = rng.normal();
    for (int64_t i = 0; i < C.size(); ++i) C[i] = rng.normal();
    Tensor delta({T}), ones({T}), d({T}), A({kc.H});
    for (int64_t t = 0; t < T; ++t) delta[t] = 0.05 + 0.2 * rng.uniform();
    for (int64_t t = 0; t < T; ++t) ones[t] = 1.0;
    for (int64_t t = 0; t < T; ++t) d[t] = 0.25 + 1.5 * rng.uniform();
    for (int64_t h = 0; h < kc.H; ++h) A[h] = -(0.5 + rng.uniform());

    // unit time modulation must be the plain path bit-for-bit
    Tensor with_ones = tissd_apply(X, B, C, delta, ones, A, kc);
    Tensor plain = tissd_apply(X, B, C, delta, Tensor(), A, kc);
    for (int64_t i = 0; i < plain.size(); ++i)
      if (with_ones[i] != plain[i])
        return {"time_aware_identity", false, "D=1 output differs from plain SSD"};

    // mask entries are the explicit decay product
    Discretized disc = discretize(delta, A, B, d, DecayMode::kExactExp);
    MaskedMatrix mask = build_mask(disc.decay, 1);
    for (int64_t i = 0; i < T; ++i) {
      for (int64_t j = 0; j <= i; ++j) {
        double prod = 1.0;
        for (int64_t k = j + 1; k <= i; ++k)
          prod *= std::exp(disc.decay.values[1 * T + k]);
        worst_mask =
            std::max(worst_mask, std::abs(mask.entries[i * T + j] - prod) /
                                     std::max(1.0, std::abs(prod)));
      }
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%d cases, max mask err %.3e", cases, worst_mask);
  return {"time_aware_identity", worst_mask <= 1e-12, buf};
}

CheckResult verify_mask_structure(bool quick) {
  Rng rng(103);
  const int cases = quick ? 100 : 1000;
  for (int c = 0; c < cases; ++c) {
    const int64_t T = 1 + static_cast<int64_t>(rng.uniform_int(40));
    DecaySequence decay;
    decay.mode = rng.uniform_int(2) == 0 ? DecayMode::kExactExp : DecayMode::kLinearApprox;
    decay.values = Tensor({1, T});
    for (int64_t t = 0; t < T; ++t)
      decay.values[t] = decay.mode == DecayMode::kExactExp ? -2.0 * rng.uniform()
                                                           : rng.uniform();
    MaskedMatrix mask = build_mask(decay, 0);
    MaskCheck chk = tim4rec::check_mask_structure(mask, decay, 0);
    if (!chk.ok) return {"mask_structure", false, chk.detail};
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%d random decay sequences", cases);
  return {"mask_structure", true, buf};
}

CheckResult verify_metric_oracles() {
  Rng rng(104);
  for (int c = 0; c < 1000; ++c) {
    const int64_t V = 3 + static_cast<int64_t>(rng.uniform_int(40));
    Tensor scores({V});
    for (int64_t i = 0; i < V; ++i)
      scores[i] = static_cast<double>(rng.uniform_int(8));  // coarse: plenty of ties
    const int64_t target = 1 + static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(V - 1)));

    // sort-and-scan reference, target losing every tie
    int64_t ahead = 0;
    for (int64_t j = 1; j < V; ++j)
      if (j != target &&
          (scores[j] > scores[target] || scores[j] == scores[target]))
        ++ahead;
    if (rank_of_target(scores, target) != 1 + ahead)
      return {"metric_oracles", false, "rank mismatch against sort-and-scan"};
  }

  RankingReport rep = metrics({3}, {10});
  const bool closed = std::abs(rep.ndcg[0] - 0.5) < 1e-15 &&
                      std::abs(rep.mrr[0] - 1.0 / 3.0) < 1e-15 && rep.hr[0] == 1.0;
  return {"metric_oracles", closed, closed ? "1000 vectors + closed forms"
                                           : "closed-form spot check failed"};
}

CheckResult verify_gradient_suite(bool quick) {
  ModelConfig cfg;
  cfg.vocab = quick ? 12 : 20;
  cfg.d_model = 8;
  cfg.expand = 2;
  cfg.state = 4;
  cfg.heads = 2;
  cfg.conv_k = 2;
  cfg.layers = quick ? 1 : 2;
  cfg.max_len = quick ? 6 : 8;
  cfg.chunk = 4;
  GradVerifyReport rep = verify_gradients(cfg, 5);
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%zu parameter groups, worst rel err %.3e",
                rep.groups.size(), rep.worst);
  return {"gradient_suite", rep.pass, buf};
}

// ---- subcommand bodies ----------------------------------------------------------

int cmd_prepare(const std::string& input, const std::string& format,
                const std::string& output, int64_t kcore, const std::string& delimiter,
                int64_t user_col, int64_t item_col, int64_t ts_col, int64_t skip_header,
                double max_malformed) {
  FormatSpec fmt = format == "ml1m"  ? FormatSpec::movielens()
                   : format == "tsv" ? FormatSpec::tsv()
                                     : FormatSpec::csv();
  if (!delimiter.empty()) fmt.delimiter = delimiter;
  if (user_col >= 0) fmt.user_col = user_col;
  if (item_col >= 0) fmt.item_col = item_col;
  if (ts_col >= 0) fmt.ts_col = ts_col;
  if (skip_header >= 0) fmt.skip_header = skip_header;
  if (max_malformed >= 0.0) fmt.max_malformed = max_malformed;

  EventLog log = ingest(input, fmt);
  std::fprintf(stderr, "ingested %zu events from %s (%lld malformed lines)\n",
               log.events.size(), input.c_str(), static_cast<long long>(log.malformed));
  log = k_core_filter(log, kcore);
  std::fprintf(stderr, "%lld-core: %zu events remain\n", static_cast<long long>(kcore),
               log.events.size());
  SequenceDataset ds = build_sequences(log);
  save_dataset(ds, output);
  std::fprintf(stderr, "wrote dataset to %s\n", output.c_str());
  std::fputs(manifest_text(ds).c_str(), stdout);
  return 0;
}

int cmd_train(const DataArgs& da, const ModelArgs& ma, TrainConfig tc, uint64_t init_seed,
              const std::string& output, const std::vector<int64_t>& ks) {
  if (output.empty()) throw ConfigError("pass --output DIR for the run artifacts");
  SequenceDataset ds = resolve_dataset(da);
  ModelConfig mc = finish_model(ma, ds.vocab());
  tc.validate();

  Rng init_rng(init_seed);
  Model model = init_model(mc, init_rng);
  std::fprintf(stderr, "training: vocab %lld, %lld layers, d_model %lld\n",
               static_cast<long long>(mc.vocab), static_cast<long long>(mc.layers),
               static_cast<long long>(mc.d_model));

  TrainHistory hist = train(model, ds, tc, [](const EpochRow& r) {
    std::fprintf(stderr, "epoch %lld: loss %.6f, valid hr@10 %.4f, ndcg@10 %.4f\n",
                 static_cast<long long>(r.epoch), r.loss, r.hr10, r.ndcg10);
  });
  if (hist.diverged)
    std::fprintf(stderr, "warning: training diverged; best parameters restored\n");
  std::fprintf(stderr, "best epoch %lld (valid ndcg@10 %.6f)\n",
               static_cast<long long>(hist.best_epoch), hist.best_ndcg10);

  fs::create_directories(output);
  save_checkpoint(model, output + "/checkpoint.txt");
  write_text(output + "/history.csv", history_csv(hist));

  std::string metrics_text = "split,metric,K,value\n";
  metrics_text += prefixed_kv("valid", evaluate_model(model, ds, Split::kValid, ks));
  metrics_text += prefixed_kv("test", evaluate_model(model, ds, Split::kTest, ks));
  write_text(output + "/metrics.csv", metrics_text);
  std::fputs(metrics_text.c_str(), stdout);
  return hist.diverged ? 1 : 0;
}

int cmd_evaluate(const std::string& checkpoint, const DataArgs& da, const std::string& split,
                 const std::vector<int64_t>& ks, bool mask_seen) {
  Model model = load_checkpoint(checkpoint);
  SequenceDataset ds = resolve_dataset(da);
  const Split sp = split == "valid" ? Split::kValid : Split::kTest;
  RankingReport rep = evaluate_model(model, ds, sp, ks, mask_seen);
  std::fputs(report_table(rep).c_str(), stderr);
  std::fputs(report_kv(rep).c_str(), stdout);
  return 0;
}

int cmd_bench(const BenchConfig& cfg) {
  BenchReport rep = run_bench(cfg);
  std::fputs(bench_csv(rep).c_str(), stdout);
  std::fputs(slopes_csv(rep).c_str(), stdout);
  return 0;
}

int cmd_verify(bool quick) {
  std::vector<CheckResult> results;
  results.push_back(verify_kernel_parity(quick));
  results.push_back(verify_time_aware_identity(quick));
  results.push_back(verify_mask_structure(quick));
  results.push_back(verify_metric_oracles());
  results.push_back(verify_gradient_suite(quick));

  bool all = true;
  std::fputs("check,result\n", stdout);
  for (const CheckResult& r : results) {
    all = all && r.pass;
    std::fprintf(stdout, "%s,%s\n", r.name.c_str(), r.pass ? "pass" : "fail");
    std::fprintf(stderr, "%s: %s (%s)\n", r.name.c_str(), r.pass ? "pass" : "FAIL",
                 r.detail.c_str());
  }
  std::fprintf(stdout, "verify,%s\n", all ? "pass" : "fail");
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tim4rec: time-aware SSD sequential recommender"};
  app.require_subcommand(1);

  // ---- prepare-data
  auto* prep = app.add_subcommand("prepare-data", "ingest a raw log into a dataset directory");
  std::string prep_input, prep_format = "ml1m", prep_output, prep_delim;
  int64_t prep_kcore = 5, prep_ucol = -1, prep_icol = -1, prep_tcol = -1, prep_skip = -1;
  double prep_malformed = -1.0;
  prep->add_option("--input", prep_input, "raw interaction file")->required();
  prep->add_option("--format", prep_format, "input layout")
      ->check(CLI::IsMember({"ml1m", "tsv", "csv"}))
      ->capture_default_str();
  prep->add_option("--output", prep_output, "dataset directory to write")->required();
  prep->add_option("--k-core", prep_kcore, "iterative k-core threshold")->capture_default_str();
  prep->add_option("--delimiter", prep_delim, "field delimiter override");
  prep->add_option("--user-col", prep_ucol, "user column override");
  prep->add_option("--item-col", prep_icol, "item column override");
  prep->add_option("--ts-col", prep_tcol, "timestamp column override");
  prep->add_option("--skip-header", prep_skip, "leading lines to skip");
  prep->add_option("--max-malformed", prep_malformed, "tolerated malformed-line fraction");

  // ---- train
  auto* tr = app.add_subcommand("train", "fit a model and write run artifacts");
  DataArgs tr_data;
  ModelArgs tr_model;
  TrainConfig tr_cfg;
  tr_cfg.batch = 128;  // desk-scale default; full-dataset presets override to 2048
  uint64_t tr_init_seed = 1;
  std::string tr_output;
  std::vector<int64_t> tr_ks{10};
  bool tr_print = false;
  add_data_options(tr, tr_data);
  add_model_options(tr, tr_model);
  tr->add_option("--lr", tr_cfg.lr, "Adam learning rate")->capture_default_str();
  tr->add_option("--batch", tr_cfg.batch, "training batch size")->capture_default_str();
  tr->add_option("--beta1", tr_cfg.beta1, "Adam beta1")->capture_default_str();
  tr->add_option("--beta2", tr_cfg.beta2, "Adam beta2")->capture_default_str();
  tr->add_option("--eps", tr_cfg.eps, "Adam epsilon")->capture_default_str();
  tr->add_option("--max-epochs", tr_cfg.max_epochs, "epoch cap")->capture_default_str();
  tr->add_option("--patience", tr_cfg.patience, "early-stopping patience")->capture_default_str();
  tr->add_option("--seed", tr_cfg.seed, "shuffle/dropout seed")->capture_default_str();
  tr->add_option("--clip", tr_cfg.clip, "global-norm gradient clip (0 = off)")
      ->capture_default_str();
  tr->add_option("--init-seed", tr_init_seed, "parameter init seed")->capture_default_str();
  tr->add_option("--output", tr_output, "directory for checkpoint/history/metrics");
  tr->add_option("--ks", tr_ks, "cutoffs for the final report")
      ->delimiter(',')
      ->capture_default_str();
  tr->add_flag("--print-config", tr_print, "print the effective configuration and exit");
  std::string tr_config;
  tr->add_option("--config", tr_config, "key = value configuration file (flags win)");

  // ---- evaluate
  auto* ev = app.add_subcommand("evaluate", "score a checkpoint on a split");
  DataArgs ev_data;
  std::string ev_checkpoint, ev_split = "test";
  std::vector<int64_t> ev_ks{10};
  bool ev_mask = false;
  ev->add_option("--checkpoint", ev_checkpoint, "checkpoint file")->required();
  add_data_options(ev, ev_data);
  ev->add_option("--split", ev_split, "evaluation split")
      ->check(CLI::IsMember({"valid", "test"}))
      ->capture_default_str();
  ev->add_option("--ks", ev_ks, "ranking cutoffs")->delimiter(',')->capture_default_str();
  ev->add_flag("--mask-seen", ev_mask, "push already-seen items below every real score");

  // ---- bench
  auto* be = app.add_subcommand("bench", "forward-only kernel timing sweep");
  BenchConfig be_cfg;
  be->add_option("--t-list", be_cfg.t_list, "sequence lengths")
      ->delimiter(',')
      ->capture_default_str();
  be->add_option("--heads", be_cfg.heads, "heads")->capture_default_str();
  be->add_option("--head-dim", be_cfg.head_dim, "per-head channels")->capture_default_str();
  be->add_option("--state", be_cfg.state, "state size")->capture_default_str();
  be->add_option("--chunk", be_cfg.chunk, "chunk length")->capture_default_str();
  be->add_option("--repeats", be_cfg.repeats, "timed repetitions")->capture_default_str();
  be->add_option("--warmup", be_cfg.warmup, "untimed warmup calls")->capture_default_str();
  be->add_option("--kernels", be_cfg.kernels, "kernel set")
      ->delimiter(',')
      ->capture_default_str();
  be->add_option("--seed", be_cfg.seed, "input seed")->capture_default_str();

  // ---- verify
  auto* vf = app.add_subcommand("verify", "run the built-in correctness checks");
  bool vf_quick = false;
  vf->add_flag("--quick", vf_quick, "smaller case sweep (T <= 64)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (prep->parsed())
      return cmd_prepare(prep_input, prep_format, prep_output, prep_kcore, prep_delim,
                         prep_ucol, prep_icol, prep_tcol, prep_skip, prep_malformed);
    if (tr->parsed()) {
      if (!tr_config.empty()) apply_config_file(tr, tr_config);
      if (tr_print) {
        std::fputs(tr->config_to_str(true, true).c_str(), stdout);
        return 0;
      }
      return cmd_train(tr_data, tr_model, tr_cfg, tr_init_seed, tr_output, tr_ks);
    }
    if (ev->parsed()) return cmd_evaluate(ev_checkpoint, ev_data, ev_split, ev_ks, ev_mask);
    if (be->parsed()) return cmd_bench(be_cfg);
    if (vf->parsed()) return cmd_verify(vf_quick);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
