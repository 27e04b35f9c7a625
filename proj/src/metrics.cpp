#include "ddrm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ddrm {

double recall_at_k(const std::vector<std::uint32_t>& ranked_items,
                   const std::vector<std::uint32_t>& relevant,
                   std::size_t k) {
  if (relevant.empty()) {
    throw std::invalid_argument("recall_at_k: empty relevant set");
  }
  const std::size_t top = std::min(k, ranked_items.size());
  std::size_t hits = 0;
  for (std::size_t r = 0; r < top; ++r) {
    if (std::binary_search(relevant.begin(), relevant.end(),
                           ranked_items[r])) {
      ++hits;
    }
  }
  return double(hits) / double(relevant.size());
}

double ndcg_at_k(const std::vector<std::uint32_t>& ranked_items,
                 const std::vector<std::uint32_t>& relevant, std::size_t k) {
  if (relevant.empty()) {
    throw std::invalid_argument("ndcg_at_k: empty relevant set");
  }
  const std::size_t top = std::min(k, ranked_items.size());
  double dcg = 0.0;
  for (std::size_t r = 0; r < top; ++r) {
    if (std::binary_search(relevant.begin(), relevant.end(),
                           ranked_items[r])) {
      dcg += 1.0 / std::log2(double(r) + 2.0);
    }
  }
  double idcg = 0.0;
  const std::size_t ideal = std::min(relevant.size(), k);
  for (std::size_t r = 0; r < ideal; ++r) {
    idcg += 1.0 / std::log2(double(r) + 2.0);
  }
  return dcg / idcg;
}

double MetricReport::recall(std::size_t k) const {
  for (std::size_t i = 0; i < ks.size(); ++i)
    if (ks[i] == k) return mean_recall[i];
  throw std::invalid_argument("MetricReport: K not evaluated");
}

double MetricReport::ndcg(std::size_t k) const {
  for (std::size_t i = 0; i < ks.size(); ++i)
    if (ks[i] == k) return mean_ndcg[i];
  throw std::invalid_argument("MetricReport: K not evaluated");
}

}  // namespace ddrm
