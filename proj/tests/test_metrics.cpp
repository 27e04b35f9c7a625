#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "ddrm/inference.hpp"
#include "ddrm/metrics.hpp"
#include "support/fixtures.hpp"

using namespace ddrm;

TEST_CASE("recall hits the boundary cases") {
  const std::vector<std::uint32_t> ranked{4, 9, 1, 7, 0, 3, 2, 8, 6, 5};
  CHECK(recall_at_k(ranked, {1, 9}, 10) == 1.0);
  CHECK(recall_at_k(ranked, {11, 12}, 10) == 0.0);
  CHECK(recall_at_k(ranked, {4}, 1) == 1.0);
  CHECK(recall_at_k(ranked, {9}, 1) == 0.0);
  CHECK_THROWS_AS(recall_at_k(ranked, {}, 10), std::invalid_argument);
}

TEST_CASE("ndcg fixed values") {
  CHECK(ndcg_at_k({5, 1, 2}, {5}, 10) == 1.0);
  // single relevant at rank 3: 1/log2(4) = 0.5 exactly
  CHECK(ndcg_at_k({9, 8, 5, 1}, {5}, 10) == 0.5);
  CHECK(ndcg_at_k({9, 8, 5, 1}, {7}, 10) == 0.0);
  CHECK_THROWS_AS(ndcg_at_k({1}, {}, 10), std::invalid_argument);
}

TEST_CASE("multi-hit ndcg matches an independent accumulation") {
  const std::vector<std::uint32_t> ranked{3, 7, 1, 9, 4, 6};
  const std::vector<std::uint32_t> relevant{1, 4, 7, 20};
  // hits at ranks 2, 3, 5 (1-based)
  const double dcg = 1.0 / std::log2(3.0) + 1.0 / std::log2(4.0) +
                     1.0 / std::log2(6.0);
  const double idcg = 1.0 + 1.0 / std::log2(3.0) + 1.0 / std::log2(4.0) +
                      1.0 / std::log2(5.0);
  CHECK(ndcg_at_k(ranked, relevant, 6) ==
        doctest::Approx(dcg / idcg).epsilon(1e-15));
}

TEST_CASE("metrics match brute-force references on 1000 random instances") {
  Rng rng(71);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n_items = 5 + rng.next_below(46);
    const std::size_t k = 1 + rng.next_below(15);

    // random permutation as the ranking
    std::vector<std::uint32_t> ranked(n_items);
    for (std::size_t i = 0; i < n_items; ++i)
      ranked[i] = std::uint32_t(i);
    for (std::size_t i = n_items; i > 1; --i) {
      const std::size_t j = rng.next_below(i);
      std::swap(ranked[i - 1], ranked[j]);
    }
    std::vector<std::uint32_t> relevant;
    for (std::size_t i = 0; i < n_items; ++i)
      if (rng.next_double() < 0.25) relevant.push_back(std::uint32_t(i));
    if (relevant.empty()) relevant.push_back(ranked[rng.next_below(n_items)]);
    std::sort(relevant.begin(), relevant.end());

    // brute force with sets and explicit loops
    std::set<std::uint32_t> rel(relevant.begin(), relevant.end());
    std::size_t hits = 0;
    double dcg = 0.0;
    for (std::size_t r = 0; r < std::min(k, ranked.size()); ++r) {
      if (rel.count(ranked[r])) {
        ++hits;
        dcg += 1.0 / std::log2(double(r + 2));
      }
    }
    double idcg = 0.0;
    for (std::size_t r = 0; r < std::min(k, rel.size()); ++r)
      idcg += 1.0 / std::log2(double(r + 2));

    const double want_recall = double(hits) / double(rel.size());
    const double want_ndcg = dcg / idcg;
    CHECK(std::abs(recall_at_k(ranked, relevant, k) - want_recall) < 1e-12);
    CHECK(std::abs(ndcg_at_k(ranked, relevant, k) - want_ndcg) < 1e-12);
    CHECK(recall_at_k(ranked, relevant, k) >= 0.0);
    CHECK(recall_at_k(ranked, relevant, k) <= 1.0);
    CHECK(ndcg_at_k(ranked, relevant, k) >= 0.0);
    CHECK(ndcg_at_k(ranked, relevant, k) <= 1.0);
  }
}

namespace {

// Scores each user's test positives above everything else.
class OracleScorer final : public ItemScorer {
 public:
  explicit OracleScorer(const InteractionDataset& ds) : ds_(ds) {}
  std::vector<double> score_items(std::uint32_t u) const override {
    std::vector<double> s(ds_.num_items, 0.0);
    for (auto i : ds_.test_positives[u]) s[i] = 1.0;
    return s;
  }
  std::string name() const override { return "oracle"; }

 private:
  const InteractionDataset& ds_;
};

}  // namespace

TEST_CASE("an oracle scorer reaches metric 1.0 everywhere") {
  const auto recs = test::planted_two_block_records(40, 40, 3);
  const InteractionDataset ds = test::dataset_from_records(recs, 40, 40);
  const MetricReport rep = evaluate(ds, OracleScorer(ds), {10, 20}, "fp");
  CHECK(rep.n_users > 0);
  for (double r : rep.mean_recall) CHECK(r == 1.0);
  for (double n : rep.mean_ndcg) CHECK(n == 1.0);
  CHECK(rep.config_hash == "fp");
}

TEST_CASE("backend evaluation reproduces an independent reference evaluator") {
  const auto recs = test::planted_two_block_records(30, 24, 13);
  const InteractionDataset ds = test::dataset_from_records(recs, 30, 24);
  Rng rng(5);
  EmbeddingTable table;
  table.user_emb = DenseMatrix(30, 6);
  table.item_emb = DenseMatrix(24, 6);
  for (std::size_t i = 0; i < table.user_emb.size(); ++i)
    table.user_emb[i] = rng.next_normal();
  for (std::size_t i = 0; i < table.item_emb.size(); ++i)
    table.item_emb[i] = rng.next_normal();

  const MetricReport rep = evaluate(ds, DotProductScorer(table), {10}, "");

  // Reference evaluator written independently of evaluate().
  double recall_sum = 0.0, ndcg_sum = 0.0;
  std::size_t n_users = 0;
  for (std::uint32_t u = 0; u < 30; ++u) {
    if (ds.test_positives[u].empty() || ds.train_positives[u].empty())
      continue;
    std::vector<std::pair<double, std::uint32_t>> scored;
    for (std::uint32_t i = 0; i < 24; ++i) {
      if (std::binary_search(ds.trainvalid_positives[u].begin(),
                             ds.trainvalid_positives[u].end(), i))
        continue;
      double s = 0.0;
      for (std::size_t c = 0; c < 6; ++c)
        s += table.user_emb(u, c) * table.item_emb(i, c);
      scored.push_back({s, i});
    }
    std::sort(scored.begin(), scored.end(), [](auto& a, auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    std::set<std::uint32_t> rel(ds.test_positives[u].begin(),
                                ds.test_positives[u].end());
    std::size_t hits = 0;
    double dcg = 0.0;
    for (std::size_t r = 0; r < std::min<std::size_t>(10, scored.size()); ++r) {
      if (rel.count(scored[r].second)) {
        ++hits;
        dcg += 1.0 / std::log2(double(r + 2));
      }
    }
    double idcg = 0.0;
    for (std::size_t r = 0; r < std::min<std::size_t>(10, rel.size()); ++r)
      idcg += 1.0 / std::log2(double(r + 2));
    recall_sum += double(hits) / double(rel.size());
    ndcg_sum += dcg / idcg;
    ++n_users;
  }
  REQUIRE(rep.n_users == n_users);
  CHECK(rep.mean_recall[0] ==
        doctest::Approx(recall_sum / double(n_users)).epsilon(1e-12));
  CHECK(rep.mean_ndcg[0] ==
        doctest::Approx(ndcg_sum / double(n_users)).epsilon(1e-12));
}

TEST_CASE("evaluation is side-effect free") {
  const auto recs = test::planted_two_block_records(30, 24, 17);
  const InteractionDataset ds = test::dataset_from_records(recs, 30, 24);
  Rng rng(6);
  EmbeddingTable table;
  table.user_emb = DenseMatrix(30, 4);
  table.item_emb = DenseMatrix(24, 4);
  for (std::size_t i = 0; i < table.user_emb.size(); ++i)
    table.user_emb[i] = rng.next_normal();
  for (std::size_t i = 0; i < table.item_emb.size(); ++i)
    table.item_emb[i] = rng.next_normal();
  const MetricReport a = evaluate(ds, DotProductScorer(table), {10, 20}, "");
  const MetricReport b = evaluate(ds, DotProductScorer(table), {10, 20}, "");
  CHECK(a.n_users == b.n_users);
  for (std::size_t i = 0; i < a.ks.size(); ++i) {
    CHECK(a.mean_recall[i] == b.mean_recall[i]);
    CHECK(a.mean_ndcg[i] == b.mean_ndcg[i]);
  }
}

TEST_CASE("users without test positives are excluded from the means") {
  // 10 positives for user 0 only; user 1 has nothing.
  std::vector<test::RawRecord> recs;
  for (int i = 0; i < 10; ++i) recs.push_back({0, i, 5.0, 100 + i});
  const InteractionDataset ds = test::dataset_from_records(recs, 2, 10);
  const MetricReport rep = evaluate(ds, OracleScorer(ds), {10}, "");
  CHECK(rep.n_users == 1);
  CHECK(rep.evaluated_users == std::vector<std::uint32_t>{0});
}
