#include "ddrm/dataset.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace ddrm {

namespace {

struct RawRow {
  std::int64_t user;
  std::int64_t item;
  double rating;
  std::int64_t timestamp;
  int split = -1;  // 0 train, 1 valid, 2 test; -1 = unsplit format
  bool noise = false;
};

std::int64_t parse_nonneg_int(const std::string& field, const char* what,
                              std::size_t line_no) {
  if (field.empty()) {
    throw std::runtime_error("line " + std::to_string(line_no) +
                             ": empty " + what + " field");
  }
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(field.c_str(), &end, 10);
  if (errno != 0 || end != field.c_str() + field.size() || v < 0) {
    throw std::runtime_error("line " + std::to_string(line_no) + ": bad " +
                             what + " '" + field + "'");
  }
  return v;
}

double parse_real(const std::string& field, const char* what,
                  std::size_t line_no) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (field.empty() || errno != 0 || end != field.c_str() + field.size()) {
    throw std::runtime_error("line " + std::to_string(line_no) + ": bad " +
                             what + " '" + field + "'");
  }
  return v;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::vector<RawRow> parse_file(const std::string& path, bool manifest) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open interaction file: " + path);
  }
  std::vector<RawRow> rows;
  std::string line;
  std::size_t line_no = 0;
  const std::size_t want = manifest ? 6 : 4;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_tabs(line);
    if (fields.size() != want) {
      throw std::runtime_error(
          "line " + std::to_string(line_no) + ": expected " +
          std::to_string(want) + " tab-separated fields, got " +
          std::to_string(fields.size()));
    }
    RawRow r;
    r.user = parse_nonneg_int(fields[0], "user_id", line_no);
    r.item = parse_nonneg_int(fields[1], "item_id", line_no);
    r.rating = parse_real(fields[2], "rating", line_no);
    r.timestamp = parse_nonneg_int(fields[3], "timestamp", line_no);
    if (manifest) {
      if (fields[4] == "train") {
        r.split = 0;
      } else if (fields[4] == "valid") {
        r.split = 1;
      } else if (fields[4] == "test") {
        r.split = 2;
      } else {
        throw std::runtime_error("line " + std::to_string(line_no) +
                                 ": bad split '" + fields[4] + "'");
      }
      if (fields[5] == "0") {
        r.noise = false;
      } else if (fields[5] == "1") {
        r.noise = true;
      } else {
        throw std::runtime_error("line " + std::to_string(line_no) +
                                 ": bad noise flag '" + fields[5] + "'");
      }
    }
    rows.push_back(r);
  }
  if (rows.empty()) {
    throw std::runtime_error("no interaction records in " + path);
  }
  return rows;
}

InteractionDataset densify(const std::vector<RawRow>& rows) {
  InteractionDataset ds;
  std::set<std::int64_t> users, items;
  for (const auto& r : rows) {
    users.insert(r.user);
    items.insert(r.item);
  }
  ds.user_ids.assign(users.begin(), users.end());
  ds.item_ids.assign(items.begin(), items.end());
  ds.num_users = ds.user_ids.size();
  ds.num_items = ds.item_ids.size();
  std::unordered_map<std::int64_t, std::uint32_t> umap, imap;
  for (std::size_t i = 0; i < ds.user_ids.size(); ++i)
    umap[ds.user_ids[i]] = static_cast<std::uint32_t>(i);
  for (std::size_t i = 0; i < ds.item_ids.size(); ++i)
    imap[ds.item_ids[i]] = static_cast<std::uint32_t>(i);
  for (const auto& r : rows) {
    Interaction x;
    x.user = umap[r.user];
    x.item = imap[r.item];
    x.rating = r.rating;
    x.timestamp = r.timestamp;
    x.noise = r.noise;
    if (r.split == 0) {
      ds.train.push_back(x);
    } else if (r.split == 1) {
      ds.valid.push_back(x);
    } else if (r.split == 2) {
      ds.test.push_back(x);
    } else {
      ds.raw.push_back(x);
    }
  }
  return ds;
}

std::pair<std::int64_t, std::int64_t> time_range(
    const std::vector<Interaction>& v, const InteractionDataset& ds) {
  if (v.empty()) {
    // Degenerate split; fall back to the full raw range.
    std::int64_t lo = 0, hi = 0;
    if (!ds.raw.empty()) {
      lo = hi = ds.raw.front().timestamp;
      for (const auto& x : ds.raw) {
        lo = std::min(lo, x.timestamp);
        hi = std::max(hi, x.timestamp);
      }
    }
    return {lo, hi};
  }
  std::int64_t lo = v.front().timestamp, hi = v.front().timestamp;
  for (const auto& x : v) {
    lo = std::min(lo, x.timestamp);
    hi = std::max(hi, x.timestamp);
  }
  return {lo, hi};
}

}  // namespace

bool InteractionDataset::is_train_positive(std::uint32_t u,
                                           std::uint32_t i) const {
  const auto& v = train_positives[u];
  return std::binary_search(v.begin(), v.end(), i);
}

InteractionDataset load_interactions(const std::string& path) {
  return densify(parse_file(path, /*manifest=*/false));
}

InteractionDataset load_manifest(const std::string& path) {
  InteractionDataset ds = densify(parse_file(path, /*manifest=*/true));
  ds.split_done = true;
  auto [tlo, thi] = time_range(ds.train, ds);
  ds.train_end_ts = thi;
  auto [vlo, vhi] = time_range(ds.valid, ds);
  ds.valid_end_ts = vhi;
  rebuild_positive_sets(ds);
  return ds;
}

void write_manifest(const InteractionDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  auto emit = [&](const std::vector<Interaction>& v, const char* name) {
    for (const auto& x : v) {
      out << ds.user_ids[x.user] << '\t' << ds.item_ids[x.item] << '\t'
          << x.rating << '\t' << x.timestamp << '\t' << name << '\t'
          << (x.noise ? 1 : 0) << '\n';
    }
  };
  emit(ds.train, "train");
  emit(ds.valid, "valid");
  emit(ds.test, "test");
  if (!out) throw std::runtime_error("failed writing manifest: " + path);
}

void chronological_split(InteractionDataset& ds, SplitRatios ratios) {
  if (ds.split_done) {
    throw std::logic_error("chronological_split: dataset already split");
  }
  const double sum = ratios.train + ratios.valid + ratios.test;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("split ratios must sum to 1");
  }

  // Deduplicate repeated (user,item) pairs keeping the latest timestamp
  // (ties: larger rating), so a re-rated pair contributes once.
  std::map<std::pair<std::uint32_t, std::uint32_t>, Interaction> latest;
  for (const auto& x : ds.raw) {
    auto key = std::make_pair(x.user, x.item);
    auto it = latest.find(key);
    if (it == latest.end() || x.timestamp > it->second.timestamp ||
        (x.timestamp == it->second.timestamp &&
         x.rating > it->second.rating)) {
      latest[key] = x;
    }
  }

  std::vector<Interaction> positives;
  for (const auto& [key, x] : latest) {
    if (x.rating >= kTruePositiveThreshold) {
      positives.push_back(x);
    } else {
      ds.false_positive_pool.push_back(x);
    }
  }
  std::sort(positives.begin(), positives.end(),
            [](const Interaction& a, const Interaction& b) {
              if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
              if (a.user != b.user) return a.user < b.user;
              return a.item < b.item;
            });
  std::sort(ds.false_positive_pool.begin(), ds.false_positive_pool.end(),
            [](const Interaction& a, const Interaction& b) {
              if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
              if (a.user != b.user) return a.user < b.user;
              return a.item < b.item;
            });

  // Nudge before truncation so exact products like 0.7 * 10 do not land
  // one below the intended bucket.
  const std::size_t n = positives.size();
  const auto n_train =
      static_cast<std::size_t>(ratios.train * double(n) + 1e-9);
  const auto n_valid = static_cast<std::size_t>(
      (ratios.train + ratios.valid) * double(n) + 1e-9) - n_train;
  ds.train.assign(positives.begin(), positives.begin() + n_train);
  ds.valid.assign(positives.begin() + n_train,
                  positives.begin() + n_train + n_valid);
  ds.test.assign(positives.begin() + n_train + n_valid, positives.end());
  ds.train_end_ts = ds.train.empty() ? 0 : ds.train.back().timestamp;
  ds.valid_end_ts = ds.valid.empty() ? ds.train_end_ts
                                     : ds.valid.back().timestamp;
  ds.split_done = true;
  rebuild_positive_sets(ds);
}

void apply_natural_noise(InteractionDataset& ds) {
  if (!ds.split_done) {
    throw std::logic_error("apply_natural_noise: split the dataset first");
  }
  for (Interaction x : ds.false_positive_pool) {
    x.noise = true;
    if (x.timestamp <= ds.train_end_ts) {
      ds.train.push_back(x);
    } else {
      ds.valid.push_back(x);
    }
  }
  ds.false_positive_pool.clear();
  rebuild_positive_sets(ds);
}

void apply_random_noise(InteractionDataset& ds, double ratio, Rng& rng) {
  if (!ds.split_done) {
    throw std::logic_error("apply_random_noise: split the dataset first");
  }
  if (ratio < 0.0) throw std::invalid_argument("noise ratio must be >= 0");
  if (ratio > 0.6) {
    std::cerr << "warning: random-noise ratio " << ratio
              << " is above the studied 0.6 range\n";
  }
  const auto n_train =
      static_cast<std::size_t>(ratio * double(ds.train.size()) + 1e-9);
  const auto n_valid =
      static_cast<std::size_t>(ratio * double(ds.valid.size()) + 1e-9);
  if (n_train + n_valid == 0) return;

  std::unordered_set<std::uint64_t> observed;
  auto key = [&](std::uint32_t u, std::uint32_t i) {
    return static_cast<std::uint64_t>(u) * ds.num_items + i;
  };
  for (const auto& x : ds.raw) observed.insert(key(x.user, x.item));
  for (const auto& x : ds.train) observed.insert(key(x.user, x.item));
  for (const auto& x : ds.valid) observed.insert(key(x.user, x.item));
  for (const auto& x : ds.test) observed.insert(key(x.user, x.item));

  const std::uint64_t total =
      static_cast<std::uint64_t>(ds.num_users) * ds.num_items;
  if (total - observed.size() < n_train + n_valid) {
    throw std::runtime_error("apply_random_noise: not enough unobserved pairs");
  }

  auto inject = [&](std::vector<Interaction>& split, std::size_t count,
                    std::pair<std::int64_t, std::int64_t> ts_range) {
    for (std::size_t k = 0; k < count; ++k) {
      std::uint32_t u, i;
      do {
        u = static_cast<std::uint32_t>(rng.next_below(ds.num_users));
        i = static_cast<std::uint32_t>(rng.next_below(ds.num_items));
      } while (!observed.insert(key(u, i)).second);
      Interaction x;
      x.user = u;
      x.item = i;
      x.rating = kInjectedRatingSentinel;
      const std::uint64_t span =
          static_cast<std::uint64_t>(ts_range.second - ts_range.first) + 1;
      x.timestamp = ts_range.first +
                    static_cast<std::int64_t>(rng.next_below(span));
      x.noise = true;
      split.push_back(x);
    }
  };
  inject(ds.train, n_train, time_range(ds.train, ds));
  inject(ds.valid, n_valid, time_range(ds.valid, ds));
  rebuild_positive_sets(ds);
}

void rebuild_positive_sets(InteractionDataset& ds) {
  ds.train_positives.assign(ds.num_users, {});
  ds.trainvalid_positives.assign(ds.num_users, {});
  ds.test_positives.assign(ds.num_users, {});
  for (const auto& x : ds.train) {
    ds.train_positives[x.user].push_back(x.item);
    ds.trainvalid_positives[x.user].push_back(x.item);
  }
  for (const auto& x : ds.valid) ds.trainvalid_positives[x.user].push_back(x.item);
  for (const auto& x : ds.test) ds.test_positives[x.user].push_back(x.item);
  auto tidy = [](std::vector<std::uint32_t>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  ds.users_without_train.clear();
  for (std::size_t u = 0; u < ds.num_users; ++u) {
    tidy(ds.train_positives[u]);
    tidy(ds.trainvalid_positives[u]);
    tidy(ds.test_positives[u]);
    if (ds.train_positives[u].empty()) {
      ds.users_without_train.push_back(static_cast<std::uint32_t>(u));
    }
  }
}

Triplet sample_triplet(const InteractionDataset& ds, Rng& rng) {
  if (ds.train.empty()) {
    throw std::runtime_error("sample_triplet: empty training split");
  }
  constexpr int kOuterRetries = 1000;
  constexpr int kInnerRetries = 256;
  for (int attempt = 0; attempt < kOuterRetries; ++attempt) {
    const auto& x = ds.train[rng.next_below(ds.train.size())];
    const auto& pos = ds.train_positives[x.user];
    if (pos.size() >= ds.num_items) continue;  // no negative exists
    for (int inner = 0; inner < kInnerRetries; ++inner) {
      const auto j = static_cast<std::uint32_t>(rng.next_below(ds.num_items));
      if (!std::binary_search(pos.begin(), pos.end(), j)) {
        return Triplet{x.user, x.item, j};
      }
    }
  }
  throw std::runtime_error("sample_triplet: could not draw a negative item");
}

}  // namespace ddrm
