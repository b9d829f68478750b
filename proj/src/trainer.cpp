#include "tim4rec/trainer.hpp"

#include <cmath>
#include <cstdio>

#include "tim4rec/eval.hpp"
#include "tim4rec/gradcheck.hpp"
#include "tim4rec/ops.hpp"

namespace tim4rec {

void TrainConfig::validate() const {
  if (lr <= 0.0) throw ConfigError("train: lr must be > 0");
  if (batch <= 0) throw ConfigError("train: batch must be > 0");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
    throw ConfigError("train: betas must be in [0, 1)");
  if (eps <= 0.0) throw ConfigError("train: eps must be > 0");
  if (max_epochs <= 0) throw ConfigError("train: max_epochs must be > 0");
  if (patience < 0) throw ConfigError("train: patience must be >= 0");
  if (clip < 0.0) throw ConfigError("train: clip must be >= 0");
}

OptimizerState init_optimizer(const Model& model) {
  OptimizerState st;
  for (const auto& [name, ten] : named_params(model)) {
    st.m.push_back(Tensor(ten->shape()));
    st.v.push_back(Tensor(ten->shape()));
  }
  return st;
}

void adam_step(const std::vector<std::pair<std::string, Tensor*>>& params,
               const std::vector<Tensor>& grads, OptimizerState& state, const TrainConfig& cfg) {
  cfg.validate();
  if (params.size() != grads.size() || params.size() != state.m.size() ||
      params.size() != state.v.size())
    throw ShapeError("adam_step: parameter/gradient/state counts disagree");
  for (size_t i = 0; i < params.size(); ++i) {
    if (!params[i].second->same_shape(grads[i]) || !params[i].second->same_shape(state.m[i]))
      throw ShapeError("adam_step: shape mismatch at " + params[i].first);
    if (!grads[i].all_finite())
      throw DataError("adam_step: non-finite gradient in " + params[i].first +
                      "; step aborted");
  }

  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i].second;
    const Tensor& g = grads[i];
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    for (int64_t k = 0; k < p.size(); ++k) {
      m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
      v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      p[k] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

std::string history_csv(const TrainHistory& h) {
  std::string out = "epoch,loss,hr10,ndcg10,mrr10\n";
  char buf[160];
  for (const EpochRow& r : h.rows) {
    std::snprintf(buf, sizeof(buf), "%lld,%.10g,%.10g,%.10g,%.10g\n",
                  static_cast<long long>(r.epoch), r.loss, r.hr10, r.ndcg10, r.mrr10);
    out += buf;
  }
  return out;
}

namespace {

std::vector<Tensor> snapshot_params(const Model& m) {
  std::vector<Tensor> out;
  for (const auto& [name, ten] : named_params(m)) out.push_back(*ten);
  return out;
}

void restore_params(Model& m, const std::vector<Tensor>& snap) {
  auto params = named_params(m);
  for (size_t i = 0; i < params.size(); ++i) *params[i].second = snap[i];
}

}  // namespace

TrainHistory train(Model& model, const SequenceDataset& ds, const TrainConfig& cfg,
                   const std::function<void(const EpochRow&)>& on_epoch) {
  cfg.validate();
  model.cfg.validate();
  if (ds.vocab() != model.cfg.vocab)
    throw ConfigError("train: model vocab does not match the dataset catalog");

  auto params = named_params(model);
  OptimizerState opt = init_optimizer(model);
  Rng root(cfg.seed);

  TrainHistory hist;
  std::vector<Tensor> best = snapshot_params(model);

  for (int64_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    Rng erng = root.fork(static_cast<uint64_t>(epoch) + 1);
    std::vector<Batch> batches =
        batchify(ds, model.cfg.max_len, cfg.batch, Split::kTrain, &erng);
    if (batches.empty()) throw DataError("train: no trainable users in the dataset");

    double loss_sum = 0.0;
    int64_t target_count = 0;
    for (const Batch& batch : batches) {
      Tape tape;
      ModelVars mv = bind_model(tape, model, true);
      Var total;
      int64_t batch_targets = 0;
      for (const BatchRow& row : batch.rows) {
        std::vector<int64_t> items(row.items.begin() + row.first_valid, row.items.end());
        std::vector<double> ts(row.ts.begin() + row.first_valid, row.ts.end());
        Rng drop_rng = erng.fork(1000 + static_cast<uint64_t>(row.user));
        Var h = forward_hidden(tape, mv, model.cfg, items, ts, true, drop_rng);
        Var logits = matmul(h, transpose(mv.emb));
        Var nll = nll_rows(logits, row.targets);
        total = total.valid() ? add(total, nll) : nll;
        for (int64_t t : row.targets)
          if (t != 0) ++batch_targets;
      }
      Var loss = scale(total, 1.0 / static_cast<double>(batch_targets));
      const double loss_val = loss.val()[0];
      if (!std::isfinite(loss_val)) {
        restore_params(model, best);
        hist.diverged = true;
        return hist;
      }
      tape.backward(loss);

      std::vector<Tensor> grads;
      grads.reserve(mv.flat.size());
      for (const Var& leaf : mv.flat) grads.push_back(tape.grad(leaf));
      if (cfg.clip > 0.0) {
        double sq = 0.0;
        for (const Tensor& g : grads)
          for (int64_t k = 0; k < g.size(); ++k) sq += g[k] * g[k];
        const double norm = std::sqrt(sq);
        if (norm > cfg.clip) {
          const double s = cfg.clip / norm;
          for (Tensor& g : grads)
            for (int64_t k = 0; k < g.size(); ++k) g[k] *= s;
        }
      }
      for (const Tensor& g : grads) {
        if (!g.all_finite()) {
          restore_params(model, best);
          hist.diverged = true;
          return hist;
        }
      }
      adam_step(params, grads, opt, cfg);
      freeze_pad_row(model);

      loss_sum += loss_val * static_cast<double>(batch_targets);
      target_count += batch_targets;
    }

    RankingReport rep = evaluate_model(model, ds, Split::kValid, {10});
    EpochRow row;
    row.epoch = epoch;
    row.loss = loss_sum / static_cast<double>(target_count);
    row.hr10 = rep.hr[0];
    row.ndcg10 = rep.ndcg[0];
    row.mrr10 = rep.mrr[0];
    hist.rows.push_back(row);
    if (on_epoch) on_epoch(row);

    if (row.ndcg10 > hist.best_ndcg10) {
      hist.best_ndcg10 = row.ndcg10;
      hist.best_epoch = epoch;
      best = snapshot_params(model);
    }
    if (epoch - hist.best_epoch >= cfg.patience) break;
  }

  restore_params(model, best);
  return hist;
}

GradVerifyReport verify_gradients(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  if (cfg.dropout != 0.0)
    throw ConfigError("verify_gradients: dropout must be off for a deterministic probe");

  Rng rng(seed);
  Model model = init_model(cfg, rng);

  // one synthetic history plus a held-out target
  const int64_t L = std::min<int64_t>(cfg.max_len, 6);
  std::vector<int64_t> items;
  std::vector<double> ts;
  double at = 1e9;
  for (int64_t i = 0; i < L; ++i) {
    items.push_back(1 + static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(cfg.vocab - 1))));
    at += 100.0 + rng.uniform() * 50000.0;
    ts.push_back(at);
  }
  const int64_t target = 1 + static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(cfg.vocab - 1)));

  auto loss_value = [&](const Model& m) {
    Tape t;
    ModelVars mv = bind_model(t, m, false);
    Rng fr(1);
    return nll_from_logits(forward_logits(t, mv, m.cfg, items, ts, false, fr), target).val()[0];
  };

  // analytic gradients once
  std::vector<Tensor> analytic;
  {
    Tape t;
    ModelVars mv = bind_model(t, model, true);
    Rng fr(1);
    Var loss = nll_from_logits(forward_logits(t, mv, model.cfg, items, ts, false, fr), target);
    t.backward(loss);
    for (const Var& v : mv.flat) analytic.push_back(t.grad(v));
  }

  GradVerifyReport rep;
  auto params = named_params(model);
  for (size_t i = 0; i < params.size(); ++i) {
    auto f = [&](const std::vector<Tensor>& ps) {
      Model probe = model;
      *named_params(probe)[i].second = ps[0];
      return loss_value(probe);
    };
    GradCheckReport r = finite_diff_check(f, {*params[i].second}, {analytic[i]});
    rep.groups.push_back({params[i].first, r.max_rel_err});
    rep.worst = std::max(rep.worst, r.max_rel_err);
  }
  rep.pass = rep.worst < 1e-4;
  return rep;
}

}  // namespace tim4rec
