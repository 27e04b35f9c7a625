#include "ddrm/inference.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace ddrm {

DenseMatrix average_liked_embedding(std::uint32_t u,
                                    const InteractionDataset& ds,
                                    const EmbeddingTable& table) {
  const auto& liked = ds.train_positives[u];
  if (liked.empty()) {
    throw std::runtime_error("average_liked_embedding: user " +
                             std::to_string(u) + " has no training positives");
  }
  const std::size_t d = table.dim();
  DenseMatrix avg(d, 1);
  for (auto i : liked) {
    for (std::size_t c = 0; c < d; ++c) avg[c] += table.item_emb(i, c);
  }
  for (std::size_t c = 0; c < d; ++c) avg[c] /= double(liked.size());
  return avg;
}

DenseMatrix run_reverse_chain(DenseMatrix x_T, const DenseMatrix& e_u,
                              const DenoiserParams& params,
                              const NoiseSchedule& sch,
                              const InferenceConfig& cfg, Rng& rng) {
  DiffusionState state{std::move(x_T), sch.steps()};
  while (state.step >= 1) {
    const DenseMatrix tilde_e0 =
        reconstruct(state, e_u, params, DenoiserRole::kItem);
    state = reverse_step(state, tilde_e0, sch, rng, cfg.stochastic);
  }
  return std::move(state.embedding);
}

DenseMatrix generate_ideal_item(std::uint32_t u, const InteractionDataset& ds,
                                const EmbeddingTable& table,
                                const DenoiserParams& params,
                                const NoiseSchedule& sch,
                                const InferenceConfig& cfg, Rng& rng) {
  const std::size_t d = table.dim();
  DenseMatrix x_T(d, 1);
  if (cfg.start == InferenceStart::kAverage) {
    const DenseMatrix avg = average_liked_embedding(u, ds, table);
    x_T = forward_to_t(avg, sch.steps(), sch, rng);
  } else {
    for (std::size_t c = 0; c < d; ++c) x_T[c] = rng.next_normal();
  }
  return run_reverse_chain(std::move(x_T), table.user_row(u), params, sch,
                           cfg, rng);
}

RankedList round_to_items(const DenseMatrix& generated,
                          const EmbeddingTable& table,
                          const std::vector<std::uint32_t>& exclusions,
                          std::size_t k) {
  if (k < 1) throw std::invalid_argument("round_to_items: K must be >= 1");
  const std::size_t n = table.num_items();
  const std::size_t d = table.dim();
  std::vector<std::pair<double, std::uint32_t>> scored;
  scored.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (std::binary_search(exclusions.begin(), exclusions.end(), i)) continue;
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) s += generated[c] * table.item_emb(i, c);
    scored.emplace_back(s, i);
  }
  auto better = [](const std::pair<double, std::uint32_t>& a,
                   const std::pair<double, std::uint32_t>& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  };
  RankedList out;
  if (scored.size() <= k) {
    std::sort(scored.begin(), scored.end(), better);
    out.truncated = scored.size() < k;
  } else {
    std::partial_sort(scored.begin(), scored.begin() + k, scored.end(),
                      better);
    scored.resize(k);
  }
  for (const auto& [s, i] : scored) {
    out.items.push_back(i);
    out.scores.push_back(s);
  }
  return out;
}

std::vector<double> DotProductScorer::score_items(std::uint32_t u) const {
  const std::size_t n = table_.num_items();
  const std::size_t d = table_.dim();
  std::vector<double> scores(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c)
      s += table_.user_emb(u, c) * table_.item_emb(i, c);
    scores[i] = s;
  }
  return scores;
}

std::vector<double> DiffusionScorer::score_items(std::uint32_t u) const {
  Rng rng = derive_rng(seed_, "infer/user=" + std::to_string(u));
  const DenseMatrix gen =
      generate_ideal_item(u, ds_, table_, params_, sch_, cfg_, rng);
  const std::size_t n = table_.num_items();
  const std::size_t d = table_.dim();
  std::vector<double> scores(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) s += gen[c] * table_.item_emb(i, c);
    scores[i] = s;
  }
  return scores;
}

MetricReport evaluate(const InteractionDataset& ds, const ItemScorer& scorer,
                      const std::vector<std::size_t>& ks,
                      const std::string& config_hash, bool valid_as_relevant) {
  MetricReport report;
  report.ks = ks;
  report.config_hash = config_hash;
  report.user_recall.assign(ks.size(), {});
  report.user_ndcg.assign(ks.size(), {});

  std::vector<std::vector<std::uint32_t>> valid_positives;
  if (valid_as_relevant) {
    valid_positives.assign(ds.num_users, {});
    for (const auto& x : ds.valid) valid_positives[x.user].push_back(x.item);
    for (auto& v : valid_positives) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    }
  }

  const std::size_t k_max =
      *std::max_element(ks.begin(), ks.end());
  for (std::uint32_t u = 0; u < ds.num_users; ++u) {
    const auto& relevant =
        valid_as_relevant ? valid_positives[u] : ds.test_positives[u];
    if (relevant.empty()) continue;
    if (ds.train_positives[u].empty()) continue;  // dropped, flagged upstream
    const auto& excluded =
        valid_as_relevant ? ds.train_positives[u] : ds.trainvalid_positives[u];

    const std::vector<double> scores = scorer.score_items(u);
    std::vector<std::pair<double, std::uint32_t>> scored;
    scored.reserve(scores.size());
    for (std::uint32_t i = 0; i < scores.size(); ++i) {
      if (std::binary_search(excluded.begin(), excluded.end(), i)) continue;
      scored.emplace_back(scores[i], i);
    }
    auto better = [](const std::pair<double, std::uint32_t>& a,
                     const std::pair<double, std::uint32_t>& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    };
    const std::size_t top = std::min(k_max, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + top, scored.end(),
                      better);
    std::vector<std::uint32_t> ranked(top);
    for (std::size_t r = 0; r < top; ++r) ranked[r] = scored[r].second;

    report.evaluated_users.push_back(u);
    for (std::size_t ki = 0; ki < ks.size(); ++ki) {
      report.user_recall[ki].push_back(recall_at_k(ranked, relevant, ks[ki]));
      report.user_ndcg[ki].push_back(ndcg_at_k(ranked, relevant, ks[ki]));
    }
  }

  report.n_users = report.evaluated_users.size();
  for (std::size_t ki = 0; ki < ks.size(); ++ki) {
    const auto& rec = report.user_recall[ki];
    const auto& nd = report.user_ndcg[ki];
    const double nr = rec.empty() ? 0.0
                                  : std::accumulate(rec.begin(), rec.end(), 0.0) /
                                        double(rec.size());
    const double nn = nd.empty() ? 0.0
                                 : std::accumulate(nd.begin(), nd.end(), 0.0) /
                                       double(nd.size());
    report.mean_recall.push_back(nr);
    report.mean_ndcg.push_back(nn);
  }
  return report;
}

}  // namespace ddrm
