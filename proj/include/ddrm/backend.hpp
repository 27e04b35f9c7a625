#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ddrm/dataset.hpp"
#include "ddrm/matrix.hpp"
#include "ddrm/rng.hpp"

namespace ddrm {

// Frozen user/item embeddings produced by a backend recommender.
struct EmbeddingTable {
  DenseMatrix user_emb;  // num_users x d
  DenseMatrix item_emb;  // num_items x d

  std::size_t dim() const { return user_emb.cols(); }
  std::size_t num_users() const { return user_emb.rows(); }
  std::size_t num_items() const { return item_emb.rows(); }

  DenseMatrix user_row(std::uint32_t u) const;
  DenseMatrix item_row(std::uint32_t i) const;

  // FNV-1a over the float32 storage representation; used to assert the
  // table stays frozen across downstream training.
  std::uint64_t content_hash() const;
};

enum class BackendKind { kMfBpr, kLightGraph };

struct BackendConfig {
  BackendKind kind = BackendKind::kMfBpr;
  std::size_t dim = 64;
  double learning_rate = 0.05;
  double l2 = 1e-4;
  std::size_t epochs = 100;
  std::size_t batch_size = 128;
  std::size_t propagation_layers = 2;  // light_graph only
};

// -log sigmoid(e_u . e_i - e_u . e_j), computed in a stable form.
double bpr_loss(const DenseMatrix& e_u, const DenseMatrix& e_i,
                const DenseMatrix& e_j);

// Adds the gradient of bpr_loss + l2 * (|e_u|^2 + |e_i|^2 + |e_j|^2)
// into du/di/dj. The raw-array form is what the pretraining loop runs.
void accumulate_bpr_gradient(const double* e_u, const double* e_i,
                             const double* e_j, std::size_t d, double l2,
                             double* du, double* di, double* dj);

struct PretrainResult {
  EmbeddingTable table;
  std::vector<double> loss_trace;  // mean batch loss per epoch
};

// Matrix factorization trained with mini-batch BPR + L2. Embeddings are
// initialized i.i.d. normal with standard deviation 0.1 (user rows
// first, then item rows, row-major draw order). For the light_graph
// kind the same training runs first and the symmetric-normalized
// propagation below is applied once at the end.
PretrainResult pretrain(const InteractionDataset& ds, const BackendConfig& cfg,
                        Rng& rng);

// LightGCN-style propagation over the train interaction graph: layer
// l+1 averages neighbors weighted 1/sqrt(deg_u * deg_i); the output is
// the mean of layers 0..K. Isolated nodes keep their layer-0 embedding.
EmbeddingTable propagate_light_graph(const EmbeddingTable& table,
                                     const InteractionDataset& ds,
                                     std::size_t layers);

// Checkpoint format: magic "DDRMEMB1", three u32 LE (num_users,
// num_items, dim), then user rows followed by item rows as f32 LE,
// row-major.
void save_embeddings(const EmbeddingTable& table, const std::string& path);
EmbeddingTable load_embeddings(const std::string& path);

}  // namespace ddrm
