#include "tim4rec/data.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace tim4rec {

namespace {

constexpr const char* kManifestMagic = "tim4rec-dataset-v1";
constexpr const char* kIdMapMagic = "tim4rec-idmap-v1";
constexpr const char* kSequencesMagic = "tim4rec-sequences-v1";
constexpr size_t kMaxSamples = 5;

std::string basename_of(const std::string& path) {
  return std::filesystem::path(path).filename().string();
}

std::vector<std::string> split_fields(const std::string& line, const std::string& delim) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (true) {
    size_t hit = line.find(delim, pos);
    if (hit == std::string::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, hit - pos));
    pos = hit + delim.size();
  }
}

bool parse_ts(const std::string& s, int64_t* out) {
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  long long v = std::strtoll(s.c_str(), &end, 10);
  if (errno != 0 || end != s.c_str() + s.size() || v < 0) return false;
  *out = static_cast<int64_t>(v);
  return true;
}

std::string join_ints(const std::vector<int64_t>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

std::vector<int64_t> parse_int_list(const std::string& s, const char* who) {
  std::vector<int64_t> out;
  for (const std::string& f : split_fields(s, ",")) {
    int64_t v = 0;
    if (!parse_ts(f, &v)) throw DataError(std::string(who) + ": bad integer list entry '" + f + "'");
    out.push_back(v);
  }
  return out;
}

std::ifstream open_or_throw(const std::string& path, const char* who) {
  std::ifstream in(path);
  if (!in) throw DataError(std::string(who) + ": cannot open " + path);
  return in;
}

void expect_magic(std::ifstream& in, const char* magic, const std::string& path) {
  std::string line;
  if (!std::getline(in, line) || line != magic)
    throw DataError("load_dataset: " + path + " is not a " + magic + " file");
}

}  // namespace

FormatSpec FormatSpec::movielens() {
  FormatSpec f;
  f.delimiter = "::";
  f.user_col = 0;
  f.item_col = 1;
  f.ts_col = 3;
  return f;
}

FormatSpec FormatSpec::tsv() { return FormatSpec{}; }

FormatSpec FormatSpec::csv() {
  FormatSpec f;
  f.delimiter = ",";
  return f;
}

void FormatSpec::validate() const {
  if (delimiter.empty()) throw ConfigError("format: empty delimiter");
  if (user_col < 0 || item_col < 0 || ts_col < 0)
    throw ConfigError("format: column indices must be non-negative");
  if (user_col == item_col || user_col == ts_col || item_col == ts_col)
    throw ConfigError("format: column roles must be distinct");
  if (skip_header < 0) throw ConfigError("format: negative header skip");
  if (max_malformed < 0.0 || max_malformed > 1.0)
    throw ConfigError("format: malformed threshold must be in [0, 1]");
}

EventLog ingest(const std::string& path, const FormatSpec& fmt) {
  fmt.validate();
  std::ifstream in = open_or_throw(path, "ingest");

  EventLog log;
  log.source = basename_of(path);
  const int64_t need = std::max({fmt.user_col, fmt.item_col, fmt.ts_col}) + 1;

  std::string line;
  int64_t lineno = 0;
  int64_t data_lines = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno <= fmt.skip_header) continue;
    if (line.empty()) continue;
    ++data_lines;

    std::vector<std::string> f = split_fields(line, fmt.delimiter);
    Event e;
    bool ok = static_cast<int64_t>(f.size()) >= need;
    if (ok) {
      e.user = f[static_cast<size_t>(fmt.user_col)];
      e.item = f[static_cast<size_t>(fmt.item_col)];
      ok = !e.user.empty() && !e.item.empty() &&
           parse_ts(f[static_cast<size_t>(fmt.ts_col)], &e.ts);
    }
    if (!ok) {
      ++log.malformed;
      if (log.malformed_samples.size() < kMaxSamples)
        log.malformed_samples.push_back("line " + std::to_string(lineno) + ": " + line);
      continue;
    }
    log.events.push_back(std::move(e));
  }

  if (log.malformed > 0 &&
      static_cast<double>(log.malformed) > fmt.max_malformed * static_cast<double>(data_lines)) {
    std::string msg = "ingest: " + std::to_string(log.malformed) + " of " +
                      std::to_string(data_lines) + " lines malformed in " + path;
    for (const std::string& s : log.malformed_samples) msg += "\n  " + s;
    throw DataError(msg);
  }
  return log;
}

EventLog k_core_filter(const EventLog& log, int64_t k) {
  if (k < 1) throw ConfigError("k_core_filter: k must be >= 1");

  EventLog out;
  out.source = log.source;
  out.malformed = log.malformed;
  out.malformed_samples = log.malformed_samples;
  out.events = log.events;

  bool changed = true;
  while (changed) {
    changed = false;
    std::unordered_map<std::string, int64_t> user_count;
    for (const Event& e : out.events) ++user_count[e.user];
    std::vector<Event> kept;
    kept.reserve(out.events.size());
    for (Event& e : out.events)
      if (user_count[e.user] >= k) kept.push_back(std::move(e));
    if (kept.size() != out.events.size()) changed = true;
    out.events = std::move(kept);

    std::unordered_map<std::string, int64_t> item_count;
    for (const Event& e : out.events) ++item_count[e.item];
    kept.clear();
    kept.reserve(out.events.size());
    for (Event& e : out.events)
      if (item_count[e.item] >= k) kept.push_back(std::move(e));
    if (kept.size() != out.events.size()) changed = true;
    out.events = std::move(kept);
  }

  if (out.events.empty())
    throw DataError("k_core_filter: no events survive the " + std::to_string(k) +
                    "-core filter; dataset too sparse");
  return out;
}

int64_t SequenceDataset::interactions() const {
  int64_t n = 0;
  for (const UserSequence& u : users) n += static_cast<int64_t>(u.items.size());
  return n;
}

int64_t SequenceDataset::eval_excluded() const {
  int64_t n = 0;
  for (const UserSequence& u : users)
    if (u.items.size() < 3) ++n;
  return n;
}

SequenceDataset build_sequences(const EventLog& log) {
  if (log.events.empty()) throw DataError("build_sequences: empty event log");

  SequenceDataset ds;
  ds.source = log.source;
  std::unordered_map<std::string, int64_t> user_ids, item_ids;
  // (ts, file order, item id) per user; stable sort keeps ties in file order
  std::vector<std::vector<std::pair<int64_t, int64_t>>> rows;  // user -> (ts, item)
  for (const Event& e : log.events) {
    auto [uit, unew] = user_ids.try_emplace(e.user, static_cast<int64_t>(user_ids.size()) + 1);
    if (unew) {
      ds.user_keys.push_back(e.user);
      rows.emplace_back();
    }
    auto [iit, inew] = item_ids.try_emplace(e.item, static_cast<int64_t>(item_ids.size()) + 1);
    if (inew) ds.item_keys.push_back(e.item);
    rows[static_cast<size_t>(uit->second - 1)].emplace_back(e.ts, iit->second);
  }

  ds.users.resize(rows.size());
  for (size_t u = 0; u < rows.size(); ++u) {
    auto& evs = rows[u];
    std::stable_sort(evs.begin(), evs.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    UserSequence& seq = ds.users[u];
    seq.user = static_cast<int64_t>(u) + 1;
    seq.items.reserve(evs.size());
    seq.ts.reserve(evs.size());
    for (const auto& [ts, item] : evs) {
      seq.items.push_back(item);
      seq.ts.push_back(ts);
    }
  }
  return ds;
}

std::string manifest_text(const SequenceDataset& ds) {
  std::string out(kManifestMagic);
  out += '\n';
  out += "source," + ds.source + '\n';
  out += "users," + std::to_string(ds.user_count()) + '\n';
  out += "items," + std::to_string(ds.item_count()) + '\n';
  out += "interactions," + std::to_string(ds.interactions()) + '\n';
  out += "eval_excluded," + std::to_string(ds.eval_excluded()) + '\n';
  return out;
}

void save_dataset(const SequenceDataset& ds, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("save_dataset: cannot create " + dir + ": " + ec.message());

  auto write = [&dir](const char* name, const std::string& body) {
    const std::string path = dir + "/" + name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("save_dataset: cannot write " + path);
    out << body;
    if (!out) throw DataError("save_dataset: write failed for " + path);
  };

  auto id_map = [](const std::vector<std::string>& keys) {
    std::string body(kIdMapMagic);
    body += '\n';
    for (size_t i = 0; i < keys.size(); ++i)
      body += std::to_string(i + 1) + '\t' + keys[i] + '\n';
    return body;
  };
  write("user_map.tsv", id_map(ds.user_keys));
  write("item_map.tsv", id_map(ds.item_keys));

  std::string seq(kSequencesMagic);
  seq += '\n';
  for (const UserSequence& u : ds.users)
    seq += std::to_string(u.user) + '\t' + join_ints(u.items) + '\t' + join_ints(u.ts) + '\n';
  write("sequences.tsv", seq);
  write("manifest.txt", manifest_text(ds));
}

namespace {

std::vector<std::string> load_id_map(const std::string& path) {
  std::ifstream in = open_or_throw(path, "load_dataset");
  expect_magic(in, kIdMapMagic, path);
  std::vector<std::string> keys;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos) throw DataError("load_dataset: bad id-map line in " + path);
    int64_t id = 0;
    if (!parse_ts(line.substr(0, tab), &id) || id != static_cast<int64_t>(keys.size()) + 1)
      throw DataError("load_dataset: ids must be contiguous from 1 in " + path);
    keys.push_back(line.substr(tab + 1));
  }
  return keys;
}

}  // namespace

SequenceDataset load_dataset(const std::string& dir) {
  SequenceDataset ds;
  ds.user_keys = load_id_map(dir + "/user_map.tsv");
  ds.item_keys = load_id_map(dir + "/item_map.tsv");

  const std::string seq_path = dir + "/sequences.tsv";
  std::ifstream in = open_or_throw(seq_path, "load_dataset");
  expect_magic(in, kSequencesMagic, seq_path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f = split_fields(line, "\t");
    if (f.size() != 3) throw DataError("load_dataset: bad sequence line in " + seq_path);
    UserSequence u;
    if (!parse_ts(f[0], &u.user) || u.user != static_cast<int64_t>(ds.users.size()) + 1)
      throw DataError("load_dataset: user ids must be contiguous from 1");
    u.items = parse_int_list(f[1], "load_dataset");
    u.ts = parse_int_list(f[2], "load_dataset");
    if (u.items.size() != u.ts.size() || u.items.empty())
      throw DataError("load_dataset: item/timestamp lengths differ for user " + f[0]);
    for (int64_t item : u.items)
      if (item < 1 || item > static_cast<int64_t>(ds.item_keys.size()))
        throw DataError("load_dataset: item id out of range for user " + f[0]);
    for (size_t i = 1; i < u.ts.size(); ++i)
      if (u.ts[i] < u.ts[i - 1])
        throw DataError("load_dataset: timestamps decrease for user " + f[0]);
    ds.users.push_back(std::move(u));
  }
  if (ds.users.size() != ds.user_keys.size())
    throw DataError("load_dataset: sequence count does not match user map");

  const std::string man_path = dir + "/manifest.txt";
  std::ifstream man = open_or_throw(man_path, "load_dataset");
  expect_magic(man, kManifestMagic, man_path);
  std::string rest((std::istreambuf_iterator<char>(man)), std::istreambuf_iterator<char>());
  size_t nl = rest.find('\n');
  if (nl == std::string::npos || rest.compare(0, 7, "source,") != 0)
    throw DataError("load_dataset: manifest is missing the source line");
  ds.source = rest.substr(7, nl - 7);
  // recomputing the manifest doubles as an integrity check on the counts
  if (manifest_text(ds) != std::string(kManifestMagic) + "\n" + rest)
    throw DataError("load_dataset: manifest does not match the loaded data");
  return ds;
}

std::vector<Batch> batchify(const SequenceDataset& ds, int64_t max_len, int64_t batch,
                            Split split, Rng* shuffle_rng) {
  if (max_len <= 0 || batch <= 0) throw ConfigError("batchify: max_len and batch must be > 0");

  std::vector<size_t> order;
  const size_t min_events = split == Split::kTrain ? 4 : 3;
  for (size_t u = 0; u < ds.users.size(); ++u)
    if (ds.users[u].items.size() >= min_events) order.push_back(u);
  if (shuffle_rng) shuffle(order, *shuffle_rng);

  std::vector<Batch> out;
  for (size_t at = 0; at < order.size(); at += static_cast<size_t>(batch)) {
    Batch b;
    const size_t hi = std::min(order.size(), at + static_cast<size_t>(batch));
    for (size_t i = at; i < hi; ++i) {
      const UserSequence& u = ds.users[order[i]];
      const int64_t n = static_cast<int64_t>(u.items.size());
      // input length before truncation; the two newest items stay held out of
      // the training region, one of them held out of the validation input
      int64_t in_len = 0;
      switch (split) {
        case Split::kTrain: in_len = n - 3; break;
        case Split::kValid: in_len = n - 2; break;
        case Split::kTest: in_len = n - 1; break;
      }
      const int64_t L = std::min(in_len, max_len);
      const int64_t fv = max_len - L;
      const int64_t start = in_len - L;  // first kept event

      BatchRow row;
      row.user = u.user;
      row.first_valid = fv;
      row.items.assign(static_cast<size_t>(max_len), 0);
      row.targets.assign(static_cast<size_t>(max_len), 0);
      row.ts.assign(static_cast<size_t>(max_len),
                    static_cast<double>(u.ts[static_cast<size_t>(start)]));
      for (int64_t p = 0; p < L; ++p) {
        const size_t src = static_cast<size_t>(start + p);
        row.items[static_cast<size_t>(fv + p)] = u.items[src];
        row.ts[static_cast<size_t>(fv + p)] = static_cast<double>(u.ts[src]);
        if (split == Split::kTrain)
          row.targets[static_cast<size_t>(fv + p)] = u.items[src + 1];
      }
      if (split != Split::kTrain)
        row.targets.back() = u.items[static_cast<size_t>(in_len)];
      b.rows.push_back(std::move(row));
    }
    out.push_back(std::move(b));
  }
  return out;
}

void SynthConfig::validate() const {
  if (users <= 0 || items <= 0 || categories <= 0 || len < 2)
    throw ConfigError("synth: users/items/categories must be positive, len >= 2");
  if (items % categories != 0) throw ConfigError("synth: items must divide evenly by categories");
  if (p_short < 0.0 || p_short > 1.0 || noise < 0.0 || noise > 1.0)
    throw ConfigError("synth: p_short and noise must be in [0, 1]");
  if (short_lo <= 0 || short_hi < short_lo || long_lo <= short_hi || long_hi < long_lo)
    throw ConfigError("synth: gap ranges must satisfy 0 < short <= long, disjoint");
}

SequenceDataset synthetic_dataset(const SynthConfig& cfg) {
  cfg.validate();
  const int64_t per = cfg.items / cfg.categories;

  SequenceDataset ds;
  ds.source = "synthetic";
  for (int64_t u = 1; u <= cfg.users; ++u) ds.user_keys.push_back("u" + std::to_string(u));
  for (int64_t i = 1; i <= cfg.items; ++i) ds.item_keys.push_back("i" + std::to_string(i));

  Rng root(cfg.seed);
  for (int64_t u = 0; u < cfg.users; ++u) {
    Rng r = root.fork(static_cast<uint64_t>(u));
    UserSequence seq;
    seq.user = u + 1;

    int64_t cat = static_cast<int64_t>(r.uniform_int(static_cast<uint64_t>(cfg.categories)));
    int64_t ts = 978300000 + static_cast<int64_t>(r.uniform_int(31536000));
    bool prev_short = true;  // no gap before the first event; treat as short
    for (int64_t t = 0; t < cfg.len; ++t) {
      if (t > 0) {
        // the category follows the gap *into the previous event*, which the
        // model has already observed when predicting this one
        if (!prev_short) cat = (cat + 1) % cfg.categories;
        const bool now_short = r.uniform() < cfg.p_short;
        const int64_t lo = now_short ? cfg.short_lo : cfg.long_lo;
        const int64_t hi = now_short ? cfg.short_hi : cfg.long_hi;
        ts += lo + static_cast<int64_t>(r.uniform_int(static_cast<uint64_t>(hi - lo + 1)));
        prev_short = now_short;
      }
      int64_t item = cat * per + 1 + static_cast<int64_t>(r.uniform_int(static_cast<uint64_t>(per)));
      if (cfg.noise > 0.0 && r.uniform() < cfg.noise)
        item = 1 + static_cast<int64_t>(r.uniform_int(static_cast<uint64_t>(cfg.items)));
      seq.items.push_back(item);
      seq.ts.push_back(ts);
    }
    ds.users.push_back(std::move(seq));
  }
  return ds;
}

}  // namespace tim4rec
