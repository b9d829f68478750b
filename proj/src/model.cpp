#include "tim4rec/model.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <unordered_map>

#include <json.hpp>

#include "tim4rec/errors.hpp"
#include "tim4rec/ops.hpp"

namespace tim4rec {

KernelConfig ModelConfig::kernel_config() const {
  KernelConfig kc;
  kc.T = max_len;
  kc.H = heads;
  kc.P = head_dim();
  kc.N = state;
  kc.chunk = chunk;
  kc.mode = mode;
  return kc;
}

void ModelConfig::validate() const {
  if (vocab < 2) throw ConfigError("config: vocab must count the pad row plus at least one item");
  if (d_model <= 0 || expand <= 0 || state <= 0 || heads <= 0 || conv_k <= 0 || layers <= 0 ||
      max_len <= 0 || chunk <= 0)
    throw ConfigError("config: every size must be positive");
  if (d_inner() % heads != 0)
    throw ConfigError("config: d_model*expand must be divisible by heads");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("config: dropout must lie in [0, 1)");
}

std::string config_to_json_text(const ModelConfig& c) {
  nlohmann::json j{{"vocab", c.vocab},
                   {"d_model", c.d_model},
                   {"expand", c.expand},
                   {"state", c.state},
                   {"heads", c.heads},
                   {"conv_k", c.conv_k},
                   {"layers", c.layers},
                   {"max_len", c.max_len},
                   {"chunk", c.chunk},
                   {"dropout", c.dropout},
                   {"mode", c.mode == DecayMode::kExactExp ? "exact" : "linear"},
                   {"no_time", c.no_time},
                   {"no_ffn", c.no_ffn}};
  return j.dump();
}

ModelConfig config_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: invalid json: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: expected a json object");
  static const char* known[] = {"vocab",   "d_model", "expand",  "state",   "heads",
                                "conv_k",  "layers",  "max_len", "chunk",   "dropout",
                                "mode",    "no_time", "no_ffn"};
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || item.key() == k;
    if (!ok) throw ConfigError("config: unknown key: " + item.key());
  }
  ModelConfig c;
  try {
    c.vocab = j.value("vocab", c.vocab);
    c.d_model = j.value("d_model", c.d_model);
    c.expand = j.value("expand", c.expand);
    c.state = j.value("state", c.state);
    c.heads = j.value("heads", c.heads);
    c.conv_k = j.value("conv_k", c.conv_k);
    c.layers = j.value("layers", c.layers);
    c.max_len = j.value("max_len", c.max_len);
    c.chunk = j.value("chunk", c.chunk);
    c.dropout = j.value("dropout", c.dropout);
    c.no_time = j.value("no_time", c.no_time);
    c.no_ffn = j.value("no_ffn", c.no_ffn);
    const std::string mode = j.value("mode", std::string("exact"));
    if (mode == "exact")
      c.mode = DecayMode::kExactExp;
    else if (mode == "linear")
      c.mode = DecayMode::kLinearApprox;
    else
      throw ConfigError("config: mode must be \"exact\" or \"linear\"");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: bad field type: ") + e.what());
  }
  c.validate();
  return c;
}

Model make_model(const ModelConfig& cfg) {
  cfg.validate();
  const int64_t D = cfg.d_model, Di = cfg.d_inner(), N = cfg.state, K = cfg.conv_k;
  const int64_t T = cfg.max_len, H = cfg.heads, F = 4 * D;
  Model m;
  m.cfg = cfg;
  m.emb.table = Tensor({cfg.vocab, D});
  m.emb_ln_gain = Tensor({D});
  m.emb_ln_bias = Tensor({D});
  m.layers.resize(static_cast<size_t>(cfg.layers));
  for (auto& L : m.layers) {
    L.expand_w = Tensor({D, Di});
    L.in_w = Tensor({Di, Di + 2 * N + 1});
    L.in_b = Tensor({Di + 2 * N + 1});
    L.conv_x_w = Tensor({K, Di});
    L.conv_x_b = Tensor({Di});
    L.conv_b_w = Tensor({K, N});
    L.conv_b_b = Tensor({N});
    L.conv_c_w = Tensor({K, N});
    L.conv_c_b = Tensor({N});
    L.a_log = Tensor({H});
    L.out_w = Tensor({Di, D});
    L.ln1_gain = Tensor({D});
    L.ln1_bias = Tensor({D});
    L.ln2_gain = Tensor({D});
    L.ln2_bias = Tensor({D});
    L.ffn_w1 = Tensor({D, F});
    L.ffn_b1 = Tensor({F});
    L.ffn_w2 = Tensor({F, D});
    L.ffn_b2 = Tensor({D});
    L.delta.w1 = Tensor({T, T});
    L.delta.w2 = Tensor({T, T});
    L.delta.b1 = Tensor({T});
    L.delta.b2 = Tensor({T});
    L.delta.conv = Tensor({K});
    L.delta.conv_bias = Tensor({1});
    L.delta.gate = Tensor({1});
    L.delta.ln_gain = Tensor({T});
    L.delta.ln_bias = Tensor({T});
  }
  return m;
}

Model init_model(const ModelConfig& cfg, Rng& rng) {
  Model m = make_model(cfg);
  const double ws = 0.02;
  auto fill_normal = [&rng](Tensor& t, double s) {
    for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.normal() * s;
  };
  fill_normal(m.emb.table, ws);
  m.emb_ln_gain = Tensor::ones(m.emb_ln_gain.shape());
  for (auto& L : m.layers) {
    fill_normal(L.expand_w, ws);
    fill_normal(L.in_w, ws);
    fill_normal(L.out_w, ws);
    // identity conv taps: the current position passes through untouched
    L.conv_x_w.mat().row(0).setOnes();
    L.conv_b_w.mat().row(0).setOnes();
    L.conv_c_w.mat().row(0).setOnes();
    // per-head decay rates spread over timescales: A_h = -exp(a_log) in -[1, 16)
    for (int64_t h = 0; h < L.a_log.size(); ++h)
      L.a_log[h] = std::log(1.0 + rng.uniform() * 15.0);
    L.ln1_gain = Tensor::ones(L.ln1_gain.shape());
    L.ln2_gain = Tensor::ones(L.ln2_gain.shape());
    fill_normal(L.ffn_w1, ws);
    fill_normal(L.ffn_w2, ws);
    L.delta = init_delta_path(cfg.max_len, cfg.conv_k, rng, ws);
  }
  freeze_pad_row(m);
  return m;
}

namespace {

// Single source of truth for parameter names and order; named_params and
// bind_model both walk this.
template <class ModelT, class F>
void visit_params(ModelT& m, F&& f) {
  f("emb.table", m.emb.table);
  f("emb.ln_gain", m.emb_ln_gain);
  f("emb.ln_bias", m.emb_ln_bias);
  for (size_t i = 0; i < m.layers.size(); ++i) {
    auto& L = m.layers[i];
    const std::string p = "layer" + std::to_string(i) + ".";
    f(p + "expand_w", L.expand_w);
    f(p + "in_w", L.in_w);
    f(p + "in_b", L.in_b);
    f(p + "conv_x_w", L.conv_x_w);
    f(p + "conv_x_b", L.conv_x_b);
    f(p + "conv_b_w", L.conv_b_w);
    f(p + "conv_b_b", L.conv_b_b);
    f(p + "conv_c_w", L.conv_c_w);
    f(p + "conv_c_b", L.conv_c_b);
    f(p + "a_log", L.a_log);
    f(p + "out_w", L.out_w);
    f(p + "ln1_gain", L.ln1_gain);
    f(p + "ln1_bias", L.ln1_bias);
    f(p + "ln2_gain", L.ln2_gain);
    f(p + "ln2_bias", L.ln2_bias);
    f(p + "ffn_w1", L.ffn_w1);
    f(p + "ffn_b1", L.ffn_b1);
    f(p + "ffn_w2", L.ffn_w2);
    f(p + "ffn_b2", L.ffn_b2);
    f(p + "delta.w1", L.delta.w1);
    f(p + "delta.b1", L.delta.b1);
    f(p + "delta.w2", L.delta.w2);
    f(p + "delta.b2", L.delta.b2);
    f(p + "delta.conv", L.delta.conv);
    f(p + "delta.conv_bias", L.delta.conv_bias);
    f(p + "delta.gate", L.delta.gate);
    f(p + "delta.ln_gain", L.delta.ln_gain);
    f(p + "delta.ln_bias", L.delta.ln_bias);
  }
}

}  // namespace

std::vector<std::pair<std::string, Tensor*>> named_params(Model& m) {
  std::vector<std::pair<std::string, Tensor*>> out;
  visit_params(m, [&](const std::string& n, Tensor& t) { out.emplace_back(n, &t); });
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> named_params(const Model& m) {
  std::vector<std::pair<std::string, const Tensor*>> out;
  visit_params(m, [&](const std::string& n, const Tensor& t) { out.emplace_back(n, &t); });
  return out;
}

void freeze_pad_row(Model& m) {
  m.emb.table.mat().row(0).setZero();
}

ModelVars bind_model(Tape& t, const Model& m, bool trainable) {
  ModelVars mv;
  visit_params(m, [&](const std::string&, const Tensor& ten) {
    mv.flat.push_back(t.leaf(ten, trainable));
  });
  size_t k = 0;
  auto next = [&] { return mv.flat[k++]; };
  mv.emb = next();
  mv.emb_ln_gain = next();
  mv.emb_ln_bias = next();
  for (size_t i = 0; i < m.layers.size(); ++i) {
    LayerVars lv;
    lv.expand_w = next();
    lv.in_w = next();
    lv.in_b = next();
    lv.conv_x_w = next();
    lv.conv_x_b = next();
    lv.conv_b_w = next();
    lv.conv_b_b = next();
    lv.conv_c_w = next();
    lv.conv_c_b = next();
    lv.a_log = next();
    lv.out_w = next();
    lv.ln1_gain = next();
    lv.ln1_bias = next();
    lv.ln2_gain = next();
    lv.ln2_bias = next();
    lv.ffn_w1 = next();
    lv.ffn_b1 = next();
    lv.ffn_w2 = next();
    lv.ffn_b2 = next();
    lv.d_w1 = next();
    lv.d_b1 = next();
    lv.d_w2 = next();
    lv.d_b2 = next();
    lv.d_conv = next();
    lv.d_conv_b = next();
    lv.d_gate = next();
    lv.d_ln_gain = next();
    lv.d_ln_bias = next();
    mv.layers.push_back(lv);
  }
  detail::require(k == mv.flat.size(), "bind_model: parameter walk out of sync");
  return mv;
}

std::pair<Var, Var> tissd_layer(Var x, Var d, const LayerVars& p, const LayerCtx& ctx) {
  detail::require(ctx.cfg != nullptr && ctx.rng != nullptr, "tissd_layer: incomplete context");
  const ModelConfig& cfg = *ctx.cfg;
  const int64_t T = cfg.max_len, Di = cfg.d_inner(), N = cfg.state;
  if (x.val().rank() != 2 || x.val().dim(0) != T || x.val().dim(1) != cfg.d_model)
    throw ShapeError("tissd_layer: input must be [max_len x d_model]");
  const int64_t fv = ctx.first_valid;

  // ---- mixer half ----
  Var u = layer_norm(x, p.ln1_gain, p.ln1_bias);
  Var e = matmul(u, p.expand_w);
  Var proj = add_row_broadcast(matmul(e, p.in_w), p.in_b);
  proj = zero_rows_before(proj, fv);  // the norm and in_b biases polluted pad rows
  Var xs = slice_cols(proj, 0, Di);
  Var bs = slice_cols(proj, Di, Di + N);
  Var cs = slice_cols(proj, Di + N, Di + 2 * N);
  Var dcol = reshape(slice_cols(proj, Di + 2 * N, Di + 2 * N + 1), {T});

  Var xc = silu(causal_conv1d(xs, p.conv_x_w, p.conv_x_b));
  Var bc = silu(causal_conv1d(bs, p.conv_b_w, p.conv_b_b));
  Var cc = silu(causal_conv1d(cs, p.conv_c_w, p.conv_c_b));
  // softplus keeps step sizes positive; pad steps are pinned back to zero so
  // the decay across the pad region stays exactly 1 and B_bar rows stay 0.
  Var delta = zero_rows_before(softplus(dcol), fv);
  Var a_h = neg(exp(p.a_log));

  Var d_next = d;
  Var d_kernel;  // invalid => plain path (delta_hat = delta)
  if (!cfg.no_time) {
    Var d_ln = delta_layer_norm(d, p.d_ln_gain, p.d_ln_bias, fv);
    Var d_gate = gate_deltas(d_ln, p.d_w1, p.d_b1, p.d_w2, p.d_b2);
    Var d_enh = zero_rows_before(enhance_deltas(d_gate, p.d_conv, p.d_conv_b), fv);
    d_kernel = cfg.mode == DecayMode::kExactExp ? softplus(d_enh) : d_enh;
    d_next = layer_transition(d, d_enh, p.d_gate);
  }

  Var y = tissd_apply(xc, bc, cc, delta, d_kernel, a_h, cfg.kernel_config());
  Var h1 = zero_rows_before(add(x, matmul(y, p.out_w)), fv);
  if (cfg.no_ffn) return {h1, d_next};

  // ---- FFN half ----
  Var v = layer_norm(h1, p.ln2_gain, p.ln2_bias);
  Var mid = gelu(add_row_broadcast(matmul(v, p.ffn_w1), p.ffn_b1));
  mid = dropout(mid, cfg.dropout, ctx.train, *ctx.rng);
  Var f = add_row_broadcast(matmul(mid, p.ffn_w2), p.ffn_b2);
  Var h2 = zero_rows_before(add(h1, f), fv);
  return {h2, d_next};
}

Var forward_hidden(Tape& t, const ModelVars& mv, const ModelConfig& cfg,
                   const std::vector<int64_t>& items, const std::vector<double>& ts,
                   bool train, Rng& rng) {
  const int64_t L = static_cast<int64_t>(items.size());
  if (L == 0) throw DataError("forward: empty sequence");
  if (ts.size() != items.size())
    throw ShapeError("forward: items/timestamps length mismatch");
  if (L > cfg.max_len)
    throw ShapeError("forward: sequence longer than max_len; truncate upstream");
  const int64_t T = cfg.max_len;
  const int64_t fv = T - L;
  std::vector<int64_t> ids(static_cast<size_t>(T), 0);
  for (int64_t i = 0; i < L; ++i) {
    if (items[i] <= 0 || items[i] >= cfg.vocab)
      throw DataError("forward: item id out of range: " + std::to_string(items[i]));
    ids[static_cast<size_t>(fv + i)] = items[i];
  }

  Var h = embedding_lookup(mv.emb, ids);
  h = dropout(h, cfg.dropout, train, rng);
  h = layer_norm(h, mv.emb_ln_gain, mv.emb_ln_bias);
  h = zero_rows_before(h, fv);

  Var dvar;  // stays invalid in no_time mode
  if (!cfg.no_time) {
    TimestampSeq tsq;
    tsq.t = Tensor({T});
    for (int64_t i = 0; i < L; ++i) tsq.t[fv + i] = ts[static_cast<size_t>(i)];
    tsq.first_valid = fv;
    DeltaSeq nd = normalize_deltas(time_deltas(tsq), cfg.dropout, train, rng);
    dvar = t.constant(nd.d);
  }

  LayerCtx ctx{&cfg, fv, train, &rng};
  for (const auto& lv : mv.layers) {
    auto [h2, d2] = tissd_layer(h, dvar, lv, ctx);
    h = h2;
    dvar = d2;
  }
  return h;
}

Var forward_logits(Tape& t, const ModelVars& mv, const ModelConfig& cfg,
                   const std::vector<int64_t>& items, const std::vector<double>& ts,
                   bool train, Rng& rng) {
  Var h = forward_hidden(t, mv, cfg, items, ts, train, rng);
  Var p = reshape(slice_rows(h, cfg.max_len - 1, cfg.max_len), {1, cfg.d_model});
  Var logits = reshape(matmul(p, transpose(mv.emb)), {cfg.vocab});
  // the pad column never competes in the ranking
  return set_element(logits, 0, -std::numeric_limits<double>::infinity());
}

Tensor score_sequence(const Model& m, const std::vector<int64_t>& items,
                      const std::vector<double>& ts) {
  Tape t;
  ModelVars mv = bind_model(t, m, false);
  Rng rng(0);  // eval mode: no dropout, stream unused
  return softmax(forward_logits(t, mv, m.cfg, items, ts, false, rng)).val();
}

namespace {

void check_loss_batch(size_t scores, size_t targets) {
  if (scores != targets) throw ShapeError("loss: scores/targets batch size mismatch");
  if (scores == 0) throw DataError("loss: empty batch");
}

}  // namespace

double sequence_loss(const std::vector<Tensor>& scores, const std::vector<int64_t>& targets) {
  check_loss_batch(scores.size(), targets.size());
  double acc = 0.0;
  int64_t n = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (targets[i] == 0) continue;  // pad target: excluded from the mean
    const Tensor& s = scores[i];
    if (s.rank() != 1) throw ShapeError("loss: each score row must be rank-1");
    if (targets[i] < 0 || targets[i] >= s.size())
      throw DataError("loss: target out of range");
    acc += -std::log(s[targets[i]]);
    ++n;
  }
  if (n == 0) throw DataError("loss: every target was the pad id");
  return acc / static_cast<double>(n);
}

Var sequence_loss(const std::vector<Var>& scores, const std::vector<int64_t>& targets) {
  check_loss_batch(scores.size(), targets.size());
  Var acc;
  int64_t n = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (targets[i] == 0) continue;
    if (scores[i].val().rank() != 1) throw ShapeError("loss: each score row must be rank-1");
    if (targets[i] < 0 || targets[i] >= scores[i].val().size())
      throw DataError("loss: target out of range");
    Var term = neg(log_abs(pick(scores[i], targets[i])));
    acc = acc.valid() ? add(acc, term) : term;
    ++n;
  }
  if (n == 0) throw DataError("loss: every target was the pad id");
  return scale(acc, 1.0 / static_cast<double>(n));
}

// ---- checkpoints -----------------------------------------------------------------

namespace {

constexpr const char* kCheckpointMagic = "tim4rec-checkpoint-v1";

std::string hex64(double v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(std::bit_cast<uint64_t>(v)));
  return std::string(buf, 16);
}

double unhex64(const std::string& w) {
  if (w.size() != 16) throw DataError("checkpoint: malformed value word: " + w);
  char* end = nullptr;
  const uint64_t bits = std::strtoull(w.c_str(), &end, 16);
  if (end != w.c_str() + 16) throw DataError("checkpoint: malformed value word: " + w);
  return std::bit_cast<double>(bits);
}

}  // namespace

void save_checkpoint(const Model& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("checkpoint: cannot open for writing: " + path);
  out << kCheckpointMagic << "\n" << config_to_json_text(m.cfg) << "\n";
  const auto params = named_params(m);
  out << "params " << params.size() << "\n";
  for (const auto& [name, ten] : params) {
    out << name << " " << ten->rank();
    for (int64_t a = 0; a < ten->rank(); ++a) out << " " << ten->dim(a);
    for (int64_t i = 0; i < ten->size(); ++i) out << " " << hex64((*ten)[i]);
    out << "\n";
  }
  out << "end\n";
  if (!out) throw DataError("checkpoint: write failed: " + path);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("checkpoint: cannot open: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kCheckpointMagic)
    throw DataError("checkpoint: unrecognized header in " + path);
  if (!std::getline(in, line)) throw DataError("checkpoint: missing config line");
  Model m = make_model(config_from_json_text(line));

  std::unordered_map<std::string, Tensor*> by_name;
  for (auto& [name, ten] : named_params(m)) by_name[name] = ten;

  if (!std::getline(in, line)) throw DataError("checkpoint: missing params header");
  std::istringstream head(line);
  std::string tag;
  size_t count = 0;
  if (!(head >> tag >> count) || tag != "params")
    throw DataError("checkpoint: malformed params header: " + line);
  if (count != by_name.size())
    throw DataError("checkpoint: parameter count does not match the config");

  std::unordered_map<std::string, bool> seen;
  for (size_t k = 0; k < count; ++k) {
    if (!std::getline(in, line)) throw DataError("checkpoint: truncated parameter block");
    std::istringstream ls(line);
    std::string name;
    int64_t rank = -1;
    if (!(ls >> name >> rank) || rank < 0) throw DataError("checkpoint: malformed line: " + line);
    auto it = by_name.find(name);
    if (it == by_name.end()) throw DataError("checkpoint: unknown parameter: " + name);
    if (seen[name]) throw DataError("checkpoint: duplicate parameter: " + name);
    seen[name] = true;
    Tensor& ten = *it->second;
    if (rank != ten.rank()) throw DataError("checkpoint: rank mismatch for " + name);
    for (int64_t a = 0; a < rank; ++a) {
      int64_t dv = -1;
      if (!(ls >> dv) || dv != ten.dim(a))
        throw DataError("checkpoint: shape mismatch for " + name);
    }
    std::string word;
    for (int64_t i = 0; i < ten.size(); ++i) {
      if (!(ls >> word)) throw DataError("checkpoint: too few values for " + name);
      ten[i] = unhex64(word);
    }
    if (ls >> word) throw DataError("checkpoint: trailing values for " + name);
  }
  if (!std::getline(in, line) || line != "end")
    throw DataError("checkpoint: missing end marker");
  return m;
}

}  // namespace tim4rec
