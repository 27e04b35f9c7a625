#include "support/fixtures.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ddrm::test {

std::vector<RawRecord> planted_two_block_records(std::size_t num_users,
                                                 std::size_t num_items,
                                                 std::uint64_t seed,
                                                 double cross_fraction,
                                                 std::size_t min_pos,
                                                 std::size_t pos_spread) {
  Rng rng(seed);
  std::vector<RawRecord> records;
  const std::size_t half_items = num_items / 2;
  for (std::size_t u = 0; u < num_users; ++u) {
    const bool top_block = u < num_users / 2;
    const std::size_t n_pos =
        std::min(min_pos + rng.next_below(pos_spread + 1),
                 std::uint64_t(num_items / 2));
    std::set<std::size_t> chosen;
    while (chosen.size() < n_pos) {
      const bool cross = rng.next_double() < cross_fraction;
      const bool from_top = top_block != cross;
      const std::size_t item =
          (from_top ? 0 : half_items) + rng.next_below(half_items);
      if (!chosen.insert(item).second) continue;
      RawRecord r;
      r.user = static_cast<std::int64_t>(u);
      r.item = static_cast<std::int64_t>(item);
      r.rating = 4.0 + double(rng.next_below(2));
      r.timestamp = static_cast<std::int64_t>(rng.next_below(1000000));
      records.push_back(r);
    }
  }
  return records;
}

std::vector<RawRecord> blocky_rated_records(std::size_t num_users,
                                            std::size_t num_items,
                                            std::size_t rows_per_user,
                                            std::uint64_t seed) {
  Rng rng(seed);
  constexpr std::size_t kGroups = 8;
  std::vector<RawRecord> records;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t u = 0; u < num_users; ++u) {
    const std::size_t g = u % kGroups;
    const std::size_t n = rows_per_user / 2 + rng.next_below(rows_per_user);
    for (std::size_t k = 0; k < n; ++k) {
      const bool preferred = rng.next_double() < 0.7;
      std::size_t genre;
      if (preferred) {
        genre = (rng.next_below(2) == 0) ? g : (g + 1) % kGroups;
      } else {
        genre = rng.next_below(kGroups);
      }
      const std::size_t item =
          genre + kGroups * rng.next_below(num_items / kGroups);
      if (!seen.insert({u, item}).second) continue;

      const bool likes = genre == g || genre == (g + 1) % kGroups;
      const double roll = rng.next_double();
      double rating;
      if (likes) {
        rating = roll < 0.45 ? 5 : roll < 0.8 ? 4 : roll < 0.92 ? 3 : 2;
      } else {
        rating = roll < 0.1 ? 4 : roll < 0.35 ? 3 : roll < 0.7 ? 2 : 1;
      }
      records.push_back(RawRecord{
          static_cast<std::int64_t>(u), static_cast<std::int64_t>(item),
          rating, static_cast<std::int64_t>(rng.next_below(1000000))});
    }
  }
  return records;
}

void write_records_tsv(const std::vector<RawRecord>& records,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write fixture: " + path);
  for (const auto& r : records) {
    out << r.user << '\t' << r.item << '\t' << r.rating << '\t'
        << r.timestamp << '\n';
  }
}

InteractionDataset dataset_from_records(const std::vector<RawRecord>& records,
                                        std::size_t num_users,
                                        std::size_t num_items, bool split) {
  InteractionDataset ds;
  ds.num_users = num_users;
  ds.num_items = num_items;
  ds.user_ids.resize(num_users);
  ds.item_ids.resize(num_items);
  for (std::size_t i = 0; i < num_users; ++i)
    ds.user_ids[i] = static_cast<std::int64_t>(i);
  for (std::size_t i = 0; i < num_items; ++i)
    ds.item_ids[i] = static_cast<std::int64_t>(i);
  for (const auto& r : records) {
    Interaction x;
    x.user = static_cast<std::uint32_t>(r.user);
    x.item = static_cast<std::uint32_t>(r.item);
    x.rating = r.rating;
    x.timestamp = r.timestamp;
    ds.raw.push_back(x);
  }
  if (split) chronological_split(ds);
  return ds;
}

double relative_gap(double a, double b) {
  return std::abs(a - b) / std::max(1.0, std::abs(a) + std::abs(b));
}

TempDir::TempDir(const std::string& tag) {
  static std::uint64_t counter = 0;
  Rng rng(fnv1a64(tag) ^ (++counter) ^
          std::uint64_t(std::chrono::steady_clock::now()
                            .time_since_epoch()
                            .count()));
  path_ = std::filesystem::temp_directory_path() /
          ("ddrm_" + tag + "_" + std::to_string(rng.next_u64() % 1000000));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2]
                    : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace ddrm::test
