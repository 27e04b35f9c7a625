#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ddrm/dataset.hpp"
#include "ddrm/matrix.hpp"
#include "ddrm/rng.hpp"

namespace ddrm::test {

struct RawRecord {
  std::int64_t user;
  std::int64_t item;
  double rating;
  std::int64_t timestamp;
};

// Two-block preference structure: the first half of the users likes the
// first half of the items, the second half the rest. A small
// cross-block fraction keeps the ranking task off the ceiling. All
// ratings are true positives (4 or 5). Each user draws between min_pos
// and min_pos + pos_spread distinct items.
std::vector<RawRecord> planted_two_block_records(std::size_t num_users,
                                                 std::size_t num_items,
                                                 std::uint64_t seed,
                                                 double cross_fraction = 0.05,
                                                 std::size_t min_pos = 15,
                                                 std::size_t pos_spread = 10);

// Grouped dataset with a realistic rating distribution (1..5), sized
// like ML-100K by default. Sub-4 ratings supply the natural-noise pool.
std::vector<RawRecord> blocky_rated_records(std::size_t num_users = 943,
                                            std::size_t num_items = 1682,
                                            std::size_t rows_per_user = 100,
                                            std::uint64_t seed = 7);

void write_records_tsv(const std::vector<RawRecord>& records,
                       const std::string& path);

// Builds a dataset directly from records (ids already dense) and
// applies the chronological split.
InteractionDataset dataset_from_records(const std::vector<RawRecord>& records,
                                        std::size_t num_users,
                                        std::size_t num_items,
                                        bool split = true);

// Central-difference gradient check helper.
double relative_gap(double a, double b);

// Unique scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::string& path);
double median(std::vector<double> values);

}  // namespace ddrm::test
