#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ddrm/backend.hpp"
#include "ddrm/dataset.hpp"
#include "ddrm/denoiser.hpp"
#include "ddrm/matrix.hpp"
#include "ddrm/metrics.hpp"

namespace ddrm {

enum class InferenceStart { kAverage, kPureNoise };

struct InferenceConfig {
  InferenceStart start = InferenceStart::kAverage;
  bool stochastic = false;  // add posterior noise at reverse steps t > 1
};

struct RankedList {
  std::uint32_t user = 0;
  std::vector<std::uint32_t> items;  // scores non-increasing
  std::vector<double> scores;
  bool truncated = false;  // fewer candidates than requested K
};

// Mean of the user's train-positive item embeddings (Algorithm 2's
// starting point). Throws for cold users with no training positives.
DenseMatrix average_liked_embedding(std::uint32_t u,
                                    const InteractionDataset& ds,
                                    const EmbeddingTable& table);

// Runs the reverse chain from x_T down to the generated embedding,
// conditioning the item denoiser on the user's original embedding.
DenseMatrix run_reverse_chain(DenseMatrix x_T, const DenseMatrix& e_u,
                              const DenoiserParams& params,
                              const NoiseSchedule& sch,
                              const InferenceConfig& cfg, Rng& rng);

// Full per-user generation: average-liked (or pure-noise) start,
// forward to T, then the reverse chain.
DenseMatrix generate_ideal_item(std::uint32_t u, const InteractionDataset& ds,
                                const EmbeddingTable& table,
                                const DenoiserParams& params,
                                const NoiseSchedule& sch,
                                const InferenceConfig& cfg, Rng& rng);

// Inner-product rounding over the catalog minus exclusions; top-K with
// ties broken by ascending item id. `exclusions` sorted ascending.
RankedList round_to_items(const DenseMatrix& generated,
                          const EmbeddingTable& table,
                          const std::vector<std::uint32_t>& exclusions,
                          std::size_t k);

// Scoring strategy evaluated under the full-ranking protocol.
class ItemScorer {
 public:
  virtual ~ItemScorer() = default;
  virtual std::vector<double> score_items(std::uint32_t u) const = 0;
  virtual std::string name() const = 0;
};

// Frozen-backend scoring: e_u . e_i.
class DotProductScorer final : public ItemScorer {
 public:
  explicit DotProductScorer(const EmbeddingTable& table) : table_(table) {}
  std::vector<double> score_items(std::uint32_t u) const override;
  std::string name() const override { return "backend"; }

 private:
  const EmbeddingTable& table_;
};

// DDRM scoring: generate the ideal item embedding, then inner products
// with the catalog. Each user draws from its own derived sub-stream so
// evaluation order cannot change results.
class DiffusionScorer final : public ItemScorer {
 public:
  DiffusionScorer(const InteractionDataset& ds, const EmbeddingTable& table,
                  const DenoiserParams& params, const NoiseSchedule& sch,
                  InferenceConfig cfg, std::uint64_t seed)
      : ds_(ds), table_(table), params_(params), sch_(sch), cfg_(cfg),
        seed_(seed) {}
  std::vector<double> score_items(std::uint32_t u) const override;
  std::string name() const override { return "ddrm"; }

 private:
  const InteractionDataset& ds_;
  const EmbeddingTable& table_;
  const DenoiserParams& params_;
  const NoiseSchedule& sch_;
  InferenceConfig cfg_;
  std::uint64_t seed_;
};

// Full-ranking evaluation over users with test positives (users without
// training positives are skipped). Exclusions are train+valid positives
// unless exclude_valid is false (used for validation-split evaluation,
// where valid items are the targets and only train is excluded).
MetricReport evaluate(const InteractionDataset& ds, const ItemScorer& scorer,
                      const std::vector<std::size_t>& ks,
                      const std::string& config_hash = "",
                      bool valid_as_relevant = false);

}  // namespace ddrm
