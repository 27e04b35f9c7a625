#include "ddrm/backend.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "ddrm/autodiff.hpp"
#include "ddrm/binio.hpp"

namespace ddrm {

namespace {

DenseMatrix row_as_column(const DenseMatrix& m, std::uint32_t r) {
  DenseMatrix v(m.cols(), 1);
  for (std::size_t c = 0; c < m.cols(); ++c) v[c] = m(r, c);
  return v;
}

}  // namespace

DenseMatrix EmbeddingTable::user_row(std::uint32_t u) const {
  return row_as_column(user_emb, u);
}
DenseMatrix EmbeddingTable::item_row(std::uint32_t i) const {
  return row_as_column(item_emb, i);
}

std::uint64_t EmbeddingTable::content_hash() const {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  auto feed = [&](const DenseMatrix& m) {
    for (std::size_t i = 0; i < m.size(); ++i) {
      const float f = static_cast<float>(m[i]);
      std::uint32_t bits;
      __builtin_memcpy(&bits, &f, 4);
      for (int b = 0; b < 4; ++b) {
        h ^= (bits >> (8 * b)) & 0xFF;
        h *= 0x100000001B3ULL;
      }
    }
  };
  feed(user_emb);
  feed(item_emb);
  return h;
}

double bpr_loss(const DenseMatrix& e_u, const DenseMatrix& e_i,
                const DenseMatrix& e_j) {
  const double margin = dot(e_u, e_i) - dot(e_u, e_j);
  return -stable_log_sigmoid(margin);
}

void accumulate_bpr_gradient(const double* e_u, const double* e_i,
                             const double* e_j, std::size_t d, double l2,
                             double* du, double* di, double* dj) {
  double margin = 0.0;
  for (std::size_t c = 0; c < d; ++c) margin += e_u[c] * (e_i[c] - e_j[c]);
  // d(-log sigmoid(x))/dx = -sigmoid(-x)
  const double coeff = -stable_sigmoid(-margin);
  for (std::size_t c = 0; c < d; ++c) {
    du[c] += coeff * (e_i[c] - e_j[c]) + 2.0 * l2 * e_u[c];
    di[c] += coeff * e_u[c] + 2.0 * l2 * e_i[c];
    dj[c] += -coeff * e_u[c] + 2.0 * l2 * e_j[c];
  }
}

PretrainResult pretrain(const InteractionDataset& ds, const BackendConfig& cfg,
                        Rng& rng) {
  if (cfg.learning_rate <= 0.0) {
    throw std::invalid_argument("pretrain: learning rate must be > 0");
  }
  if (ds.train.empty()) {
    throw std::runtime_error("pretrain: empty training split");
  }
  const std::size_t d = cfg.dim;
  PretrainResult out;
  out.table.user_emb = DenseMatrix(ds.num_users, d);
  out.table.item_emb = DenseMatrix(ds.num_items, d);
  for (std::size_t i = 0; i < out.table.user_emb.size(); ++i)
    out.table.user_emb[i] = 0.1 * rng.next_normal();
  for (std::size_t i = 0; i < out.table.item_emb.size(); ++i)
    out.table.item_emb[i] = 0.1 * rng.next_normal();

  DenseMatrix& U = out.table.user_emb;
  DenseMatrix& V = out.table.item_emb;

  // Batch-mean gradients accumulated densely; only touched rows are
  // zeroed between batches.
  DenseMatrix gu(ds.num_users, d), gv(ds.num_items, d);
  std::vector<std::uint32_t> touched_u, touched_v;
  std::vector<char> seen_u(ds.num_users, 0), seen_v(ds.num_items, 0);

  const std::size_t batches_per_epoch =
      (ds.train.size() + cfg.batch_size - 1) / cfg.batch_size;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    std::size_t epoch_count = 0;
    for (std::size_t b = 0; b < batches_per_epoch; ++b) {
      for (auto u : touched_u) {
        seen_u[u] = 0;
        for (std::size_t c = 0; c < d; ++c) gu(u, c) = 0.0;
      }
      for (auto i : touched_v) {
        seen_v[i] = 0;
        for (std::size_t c = 0; c < d; ++c) gv(i, c) = 0.0;
      }
      touched_u.clear();
      touched_v.clear();

      double batch_loss = 0.0;
      for (std::size_t k = 0; k < cfg.batch_size; ++k) {
        const Triplet t = sample_triplet(ds, rng);
        const double* eu = &U(t.user, 0);
        const double* ei = &V(t.pos_item, 0);
        const double* ej = &V(t.neg_item, 0);
        double margin = 0.0;
        for (std::size_t c = 0; c < d; ++c)
          margin += eu[c] * (ei[c] - ej[c]);
        double reg = 0.0;
        for (std::size_t c = 0; c < d; ++c)
          reg += eu[c] * eu[c] + ei[c] * ei[c] + ej[c] * ej[c];
        batch_loss += -stable_log_sigmoid(margin) + cfg.l2 * reg;

        auto touch_u = [&](std::uint32_t u) {
          if (!seen_u[u]) {
            seen_u[u] = 1;
            touched_u.push_back(u);
          }
        };
        auto touch_v = [&](std::uint32_t i) {
          if (!seen_v[i]) {
            seen_v[i] = 1;
            touched_v.push_back(i);
          }
        };
        touch_u(t.user);
        touch_v(t.pos_item);
        touch_v(t.neg_item);
        accumulate_bpr_gradient(eu, ei, ej, d, cfg.l2, &gu(t.user, 0),
                                &gv(t.pos_item, 0), &gv(t.neg_item, 0));
      }
      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error(
            "pretrain: loss diverged (non-finite) at epoch " +
            std::to_string(epoch));
      }
      epoch_loss += batch_loss;
      epoch_count += cfg.batch_size;
      const double step = cfg.learning_rate / double(cfg.batch_size);
      for (auto u : touched_u)
        for (std::size_t c = 0; c < d; ++c) U(u, c) -= step * gu(u, c);
      for (auto i : touched_v)
        for (std::size_t c = 0; c < d; ++c) V(i, c) -= step * gv(i, c);
    }
    out.loss_trace.push_back(epoch_loss / double(epoch_count));
  }

  if (cfg.kind == BackendKind::kLightGraph && cfg.epochs > 0) {
    out.table = propagate_light_graph(out.table, ds, cfg.propagation_layers);
  }
  U.ensure_finite("pretrain user embeddings");
  V.ensure_finite("pretrain item embeddings");
  return out;
}

EmbeddingTable propagate_light_graph(const EmbeddingTable& table,
                                     const InteractionDataset& ds,
                                     std::size_t layers) {
  const std::size_t d = table.dim();
  std::vector<std::size_t> item_degree(ds.num_items, 0);
  for (std::size_t u = 0; u < ds.num_users; ++u)
    for (auto i : ds.train_positives[u]) ++item_degree[i];

  DenseMatrix sum_u = table.user_emb;
  DenseMatrix sum_v = table.item_emb;
  DenseMatrix cur_u = table.user_emb;
  DenseMatrix cur_v = table.item_emb;

  for (std::size_t l = 0; l < layers; ++l) {
    DenseMatrix next_u(ds.num_users, d);
    DenseMatrix next_v(ds.num_items, d);
    for (std::size_t u = 0; u < ds.num_users; ++u) {
      const auto& nbrs = ds.train_positives[u];
      if (nbrs.empty()) {
        // Isolated node: carry the layer-0 embedding through.
        for (std::size_t c = 0; c < d; ++c)
          next_u(u, c) = table.user_emb(u, c);
        continue;
      }
      const double du = double(nbrs.size());
      for (auto i : nbrs) {
        const double w = 1.0 / std::sqrt(du * double(item_degree[i]));
        for (std::size_t c = 0; c < d; ++c) next_u(u, c) += w * cur_v(i, c);
      }
    }
    for (std::size_t i = 0; i < ds.num_items; ++i) {
      if (item_degree[i] == 0) {
        for (std::size_t c = 0; c < d; ++c)
          next_v(i, c) = table.item_emb(i, c);
      }
    }
    for (std::size_t u = 0; u < ds.num_users; ++u) {
      const auto& nbrs = ds.train_positives[u];
      const double du = double(nbrs.size());
      for (auto i : nbrs) {
        const double w = 1.0 / std::sqrt(du * double(item_degree[i]));
        for (std::size_t c = 0; c < d; ++c) next_v(i, c) += w * cur_u(u, c);
      }
    }
    cur_u = std::move(next_u);
    cur_v = std::move(next_v);
    for (std::size_t k = 0; k < sum_u.size(); ++k) sum_u[k] += cur_u[k];
    for (std::size_t k = 0; k < sum_v.size(); ++k) sum_v[k] += cur_v[k];
  }

  EmbeddingTable out;
  out.user_emb = scale(sum_u, 1.0 / double(layers + 1));
  out.item_emb = scale(sum_v, 1.0 / double(layers + 1));
  out.user_emb.ensure_finite("propagate_light_graph");
  out.item_emb.ensure_finite("propagate_light_graph");
  return out;
}

void save_embeddings(const EmbeddingTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write("DDRMEMB1", 8);
  binio::write_u32(out, static_cast<std::uint32_t>(table.num_users()));
  binio::write_u32(out, static_cast<std::uint32_t>(table.num_items()));
  binio::write_u32(out, static_cast<std::uint32_t>(table.dim()));
  for (std::size_t i = 0; i < table.user_emb.size(); ++i)
    binio::write_f32(out, static_cast<float>(table.user_emb[i]));
  for (std::size_t i = 0; i < table.item_emb.size(); ++i)
    binio::write_f32(out, static_cast<float>(table.item_emb[i]));
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

EmbeddingTable load_embeddings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  binio::expect_magic(in, "DDRMEMB1", path);
  const std::uint32_t nu = binio::read_u32(in);
  const std::uint32_t ni = binio::read_u32(in);
  const std::uint32_t d = binio::read_u32(in);
  EmbeddingTable t;
  t.user_emb = DenseMatrix(nu, d);
  t.item_emb = DenseMatrix(ni, d);
  for (std::size_t i = 0; i < t.user_emb.size(); ++i)
    t.user_emb[i] = binio::read_f32(in);
  for (std::size_t i = 0; i < t.item_emb.size(); ++i)
    t.item_emb[i] = binio::read_f32(in);
  t.user_emb.ensure_finite("load_embeddings");
  t.item_emb.ensure_finite("load_embeddings");
  return t;
}

}  // namespace ddrm
