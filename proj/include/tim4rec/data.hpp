#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tim4rec/errors.hpp"
#include "tim4rec/rng.hpp"

namespace tim4rec {

// Column layout of a delimiter-separated event file. The delimiter may be
// multi-character (MovieLens uses "::"); any column outside the three roles
// is ignored.
struct FormatSpec {
  std::string delimiter = "\t";
  int64_t user_col = 0;
  int64_t item_col = 1;
  int64_t ts_col = 2;
  int64_t skip_header = 0;
  double max_malformed = 0.01;  // reject threshold, fraction of data lines

  static FormatSpec movielens();  // user::item::rating::timestamp
  static FormatSpec tsv();
  static FormatSpec csv();
  void validate() const;
};

struct Event {
  std::string user;
  std::string item;
  int64_t ts = 0;  // unix seconds
};

// Raw parsed interactions in original file order. Malformed rows are counted
// (with a few samples kept for the report), never silently dropped past the
// configured threshold. Duplicates are retained.
struct EventLog {
  std::vector<Event> events;
  std::string source;
  int64_t malformed = 0;
  std::vector<std::string> malformed_samples;
};

EventLog ingest(const std::string& path, const FormatSpec& fmt);

// Repeatedly drops users with < k events, then items with < k events, until
// nothing changes. Deterministic; throws if the fixpoint is empty.
EventLog k_core_filter(const EventLog& log, int64_t k = 5);

struct UserSequence {
  int64_t user = 0;             // 1-based id
  std::vector<int64_t> items;   // 1-based ids, chronological
  std::vector<int64_t> ts;      // unix seconds, non-decreasing
};

// Per-user chronological sequences with contiguous 1-based ids (0 = pad).
// Leave-one-out convention: the last item of each sequence is the test
// target, the one before it the validation target, everything earlier is
// training data. Users with fewer than 3 events cannot yield all three
// splits; they stay in `users` but are skipped by evaluation batching and
// counted by eval_excluded().
struct SequenceDataset {
  std::vector<UserSequence> users;     // ordered by user id
  std::vector<std::string> user_keys;  // user_keys[i] is the raw key of id i+1
  std::vector<std::string> item_keys;  // item_keys[i] is the raw key of id i+1
  std::string source;

  int64_t user_count() const { return static_cast<int64_t>(users.size()); }
  int64_t item_count() const { return static_cast<int64_t>(item_keys.size()); }
  int64_t vocab() const { return item_count() + 1; }  // + pad id 0
  int64_t interactions() const;
  int64_t eval_excluded() const;
};

// Groups the log by user, sorts each user's events by timestamp (stable, so
// ties keep file order), and assigns ids by first appearance in the log.
SequenceDataset build_sequences(const EventLog& log);

// Stats manifest, one `key,value` line per stat under a version header.
std::string manifest_text(const SequenceDataset& ds);

// Directory layout (all plain text, documented in the README):
//   user_map.tsv / item_map.tsv : "tim4rec-idmap-v1" then "<id>\t<raw key>"
//   sequences.tsv               : "tim4rec-sequences-v1" then one user per
//                                 line: "<user>\t<i1,i2,..>\t<t1,t2,..>"
//   manifest.txt                : manifest_text()
void save_dataset(const SequenceDataset& ds, const std::string& dir);
SequenceDataset load_dataset(const std::string& dir);

enum class Split { kTrain, kValid, kTest };

// One assembled model input: fixed length T, most recent events kept,
// left-padded with item id 0; pad timestamps repeat the first valid timestamp
// so pad deltas are zero. targets[t] is the id the model should predict after
// consuming position t (0 = no loss there). Train rows carry shifted
// next-item targets over the training region; valid/test rows carry the
// held-out target in the last slot only.
struct BatchRow {
  int64_t user = 0;
  int64_t first_valid = 0;
  std::vector<int64_t> items;
  std::vector<double> ts;
  std::vector<int64_t> targets;
};

struct Batch {
  std::vector<BatchRow> rows;
};

// Users too short for the requested split contribute no row: train needs 4
// events (one shifted pair after reserving the two held-out items), valid and
// test need 3. Row order follows the dataset unless a shuffle rng is given.
std::vector<Batch> batchify(const SequenceDataset& ds, int64_t max_len, int64_t batch,
                            Split split, Rng* shuffle_rng = nullptr);

// Synthetic catalog with planted temporal structure. Items [1..items] split
// into `categories` equal blocks. Each next item's category follows the most
// recent observed gap: a short gap continues the current category, a long gap
// advances to the next one (cyclic). Within the category the item is uniform,
// so the gap regime is the only signal separating a time-aware model from a
// time-blind one. `noise` optionally replaces items with uniform draws.
struct SynthConfig {
  int64_t users = 500;
  int64_t items = 200;
  int64_t categories = 20;
  int64_t len = 30;
  double p_short = 0.5;
  double noise = 0.0;
  int64_t short_lo = 30;        // seconds
  int64_t short_hi = 3600;
  int64_t long_lo = 345600;     // 4 days
  int64_t long_hi = 1209600;    // 14 days
  uint64_t seed = 7;
  void validate() const;
};

SequenceDataset synthetic_dataset(const SynthConfig& cfg);

}  // namespace tim4rec
