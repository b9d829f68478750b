#include "tim4rec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace tim4rec {

int64_t rank_of_target(const Tensor& scores, int64_t target) {
  if (scores.rank() != 1) throw ShapeError("rank_of_target: rank-1 scores required");
  const int64_t V = scores.size();
  if (target < 1 || target >= V) throw DataError("rank_of_target: target outside the catalog");
  const double st = scores[target];
  int64_t ahead = 0;
  for (int64_t j = 1; j < V; ++j)
    if (scores[j] > st || (scores[j] == st && j != target)) ++ahead;
  return ahead + 1;
}

RankingReport metrics(const std::vector<int64_t>& ranks, const std::vector<int64_t>& ks) {
  if (ranks.empty()) throw DataError("metrics: no ranks to aggregate");
  if (ks.empty()) throw ConfigError("metrics: at least one K required");
  for (int64_t r : ranks)
    if (r < 1) throw DataError("metrics: ranks are 1-based");
  for (int64_t k : ks)
    if (k < 1) throw ConfigError("metrics: K must be >= 1");

  RankingReport rep;
  rep.ks = ks;
  rep.count = static_cast<int64_t>(ranks.size());
  const double n = static_cast<double>(ranks.size());
  for (int64_t k : ks) {
    double hr = 0.0, ndcg = 0.0, mrr = 0.0;
    for (int64_t r : ranks) {
      if (r > k) continue;
      hr += 1.0;
      ndcg += 1.0 / std::log2(static_cast<double>(r) + 1.0);
      mrr += 1.0 / static_cast<double>(r);
    }
    rep.hr.push_back(hr / n);
    rep.ndcg.push_back(ndcg / n);
    rep.mrr.push_back(mrr / n);
  }
  return rep;
}

std::string report_table(const RankingReport& rep) {
  char buf[128];
  std::string out = "      K        HR      NDCG       MRR\n";
  for (size_t i = 0; i < rep.ks.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%7lld  %8.4f  %8.4f  %8.4f\n",
                  static_cast<long long>(rep.ks[i]), rep.hr[i], rep.ndcg[i], rep.mrr[i]);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "users evaluated: %lld\n", static_cast<long long>(rep.count));
  out += buf;
  return out;
}

std::string report_kv(const RankingReport& rep) {
  char buf[96];
  std::string out;
  for (size_t i = 0; i < rep.ks.size(); ++i) {
    const long long k = static_cast<long long>(rep.ks[i]);
    std::snprintf(buf, sizeof(buf), "hr,%lld,%.10g\n", k, rep.hr[i]);
    out += buf;
    std::snprintf(buf, sizeof(buf), "ndcg,%lld,%.10g\n", k, rep.ndcg[i]);
    out += buf;
    std::snprintf(buf, sizeof(buf), "mrr,%lld,%.10g\n", k, rep.mrr[i]);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "count,0,%lld\n", static_cast<long long>(rep.count));
  out += buf;
  return out;
}

RankingReport evaluate_model(const Model& m, const SequenceDataset& ds, Split split,
                             const std::vector<int64_t>& ks, bool mask_seen) {
  if (split == Split::kTrain) throw ConfigError("evaluate_model: train split has no single target");
  std::vector<int64_t> ranks;
  for (const Batch& b : batchify(ds, m.cfg.max_len, 1024, split)) {
    for (const BatchRow& row : b.rows) {
      std::vector<int64_t> items(row.items.begin() + row.first_valid, row.items.end());
      std::vector<double> ts(row.ts.begin() + row.first_valid, row.ts.end());
      const int64_t target = row.targets.back();
      Tensor scores = score_sequence(m, items, ts);
      if (mask_seen) {
        // drop consumed items below every softmax probability
        for (int64_t id : items)
          if (id != target) scores[id] = -1.0;
      }
      ranks.push_back(rank_of_target(scores, target));
    }
  }
  if (ranks.empty()) throw DataError("evaluate_model: no evaluable users in the split");
  return metrics(ranks, ks);
}

}  // namespace tim4rec
