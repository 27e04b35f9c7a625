#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ddrm/rng.hpp"

namespace ddrm {

struct Interaction {
  std::uint32_t user = 0;  // dense index
  std::uint32_t item = 0;  // dense index
  double rating = 0.0;
  std::int64_t timestamp = 0;
  bool noise = false;  // injected (natural or random), not organic
};

// Ratings >= 4 count as true positives; everything below is treated as
// a false-positive interaction.
constexpr double kTruePositiveThreshold = 4.0;

// Rating recorded on randomly injected unobserved pairs, which carry no
// observed rating of their own.
constexpr double kInjectedRatingSentinel = -1.0;

struct SplitRatios {
  double train = 0.7;
  double valid = 0.1;
  double test = 0.2;
};

// Interaction data with dense ids, chronological splits and
// noise-injection bookkeeping. Immutable once the pipeline is done
// mutating it through the functions below.
struct InteractionDataset {
  std::size_t num_users = 0;
  std::size_t num_items = 0;

  // dense index -> original file id
  std::vector<std::int64_t> user_ids;
  std::vector<std::int64_t> item_ids;

  // All parsed rows, kept verbatim (duplicates included) until split.
  std::vector<Interaction> raw;

  bool split_done = false;
  std::vector<Interaction> train;
  std::vector<Interaction> valid;
  std::vector<Interaction> test;

  // False positives not yet assigned to a split; apply_natural_noise
  // moves them into train/valid.
  std::vector<Interaction> false_positive_pool;

  // Chronological boundaries of the true-positive split.
  std::int64_t train_end_ts = 0;
  std::int64_t valid_end_ts = 0;

  // Sorted per-user positive item sets.
  std::vector<std::vector<std::uint32_t>> train_positives;
  std::vector<std::vector<std::uint32_t>> trainvalid_positives;
  std::vector<std::vector<std::uint32_t>> test_positives;

  // Users with no training positives, dropped from evaluation.
  std::vector<std::uint32_t> users_without_train;

  bool user_has_train_positive(std::uint32_t u) const {
    return !train_positives[u].empty();
  }
  bool is_train_positive(std::uint32_t u, std::uint32_t i) const;
};

struct Triplet {
  std::uint32_t user;
  std::uint32_t pos_item;
  std::uint32_t neg_item;
};

// Parses the 4-field TSV interaction format. Dense ids are assigned by
// ascending original id over everything appearing in the file, so the
// mapping does not depend on row order.
InteractionDataset load_interactions(const std::string& path);

// Parses the 6-field split-manifest format (split + noise flag columns).
InteractionDataset load_manifest(const std::string& path);
void write_manifest(const InteractionDataset& ds, const std::string& path);

// Splits true positives chronologically (ties broken by user then item
// id), deduplicating repeated (user,item) pairs by latest timestamp
// first. False positives land in the pool for apply_natural_noise.
void chronological_split(InteractionDataset& ds, SplitRatios ratios = {});

// Moves pooled false positives into train/valid by timestamp relative
// to the train/valid boundary, flagged as noise. Test is untouched.
void apply_natural_noise(InteractionDataset& ds);

// Adds floor(ratio * |train|) unobserved pairs to train and
// floor(ratio * |valid|) to valid, sampled uniformly without
// replacement, flagged as noise. Test is untouched.
void apply_random_noise(InteractionDataset& ds, double ratio, Rng& rng);

// BPR triplet: (u, i) uniform over train rows, j uniform over items
// outside u's train positives.
Triplet sample_triplet(const InteractionDataset& ds, Rng& rng);

// Recomputes positive sets and dropped-user flags from the splits.
void rebuild_positive_sets(InteractionDataset& ds);

}  // namespace ddrm
