#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tim4rec/data.hpp"
#include "tim4rec/model.hpp"
#include "tim4rec/tensor.hpp"

namespace tim4rec {

// 1-based rank of `target` within the score vector, column 0 (pad) excluded.
// Ties are pessimistic: every tied item counts as ranked ahead, so reported
// metrics are deterministic lower bounds.
int64_t rank_of_target(const Tensor& scores, int64_t target);

struct RankingReport {
  std::vector<int64_t> ks;
  std::vector<double> hr;    // aligned with ks
  std::vector<double> ndcg;
  std::vector<double> mrr;
  int64_t count = 0;         // evaluated users
};

// HR = mean[rank <= K]; NDCG = mean[rank <= K ? 1/log2(rank+1) : 0];
// MRR = mean[rank <= K ? 1/rank : 0]. Throws on an empty rank list.
RankingReport metrics(const std::vector<int64_t>& ranks, const std::vector<int64_t>& ks);

// Aligned human-readable table.
std::string report_table(const RankingReport& rep);
// Machine-readable lines: "metric,K,value" with 10 significant digits.
std::string report_kv(const RankingReport& rep);

// Leave-one-out evaluation over a split: scores each user's next item with the
// full remaining history as input (validation additionally holds out the test
// item). mask_seen pushes already-consumed items (except the target itself)
// below every real score before ranking.
RankingReport evaluate_model(const Model& m, const SequenceDataset& ds, Split split,
                             const std::vector<int64_t>& ks, bool mask_seen = false);

}  // namespace tim4rec
