#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ddrm {

// Binary-relevance top-K metrics under the full-ranking protocol.
// `relevant` must be non-empty and sorted ascending.

double recall_at_k(const std::vector<std::uint32_t>& ranked_items,
                   const std::vector<std::uint32_t>& relevant, std::size_t k);

double ndcg_at_k(const std::vector<std::uint32_t>& ranked_items,
                 const std::vector<std::uint32_t>& relevant, std::size_t k);

struct MetricReport {
  std::vector<std::size_t> ks;
  std::vector<double> mean_recall;  // parallel to ks
  std::vector<double> mean_ndcg;
  std::size_t n_users = 0;
  std::string config_hash;
  // Per-user values, [k index][evaluated user index].
  std::vector<std::uint32_t> evaluated_users;
  std::vector<std::vector<double>> user_recall;
  std::vector<std::vector<double>> user_ndcg;

  double recall(std::size_t k) const;
  double ndcg(std::size_t k) const;
};

}  // namespace ddrm
