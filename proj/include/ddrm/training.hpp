#pragma once

#include <cstdint>
#include <vector>

#include "ddrm/autodiff.hpp"
#include "ddrm/backend.hpp"
#include "ddrm/dataset.hpp"
#include "ddrm/denoiser.hpp"
#include "ddrm/schedule.hpp"

namespace ddrm {

struct TrainConfig {
  double lambda = 0.4;  // loss balance factor, BPR weight
  double gamma = 0.1;   // reweight exponent; 0 leaves weights at 1
  bool use_reweight = true;
  double learning_rate = 0.02;
  std::size_t batch_size = 128;
  std::size_t epochs = 50;
  std::size_t patience = 10;  // early-stop patience on valid Recall@20; 0 off
  std::size_t hidden_width = 0;  // 0 -> embedding dim
  std::size_t hidden_layers = 1;
  ScheduleConfig schedule;
};

struct TrainStepRecord {
  std::size_t epoch = 0;
  double mean_l_re = 0.0;
  double mean_l_bpr = 0.0;
  double mean_w = 0.0;
  double valid_recall20 = 0.0;
  double seconds = 0.0;
};

// One training triplet with its sampled step and frozen noise draws,
// so the loss is a deterministic function of the denoiser parameters.
struct LossInstance {
  DenseMatrix e_u, e_i, e_j;  // frozen embeddings, column vectors
  std::size_t t = 1;
  DenseMatrix eps_u, eps_i;
};

LossInstance make_loss_instance(const Triplet& triplet,
                                const EmbeddingTable& table,
                                const NoiseSchedule& sch, Rng& rng);

struct LossBreakdown {
  double l_re = 0.0;
  double l_bpr = 0.0;
  double weight = 1.0;
  double total = 0.0;
};

// Simplified reconstruction loss at the sampled step:
//   (||e_u - f_theta(e_t^u, e_i, t)||^2 + ||e_i - f_psi(e_t^i, e_u, t)||^2) / 2
// with each denoiser conditioned on the counterpart original embedding.
double reconstruction_loss(const LossInstance& inst,
                           const DenoiserParams& params,
                           const NoiseSchedule& sch);

// w * (lambda * L_bpr + (1 - lambda) * L_re) with
// w = sigmoid(e0u~ . e0i~)^gamma treated as a constant. BPR scores the
// denoised user against the denoised positive and the frozen negative.
LossBreakdown combined_loss(const LossInstance& inst,
                            const DenoiserParams& params,
                            const NoiseSchedule& sch, double lambda,
                            double gamma, bool use_reweight);

struct DenoiserVars {
  MlpVars user;
  MlpVars item;
};
DenoiserVars denoiser_params_on_tape(Tape& tape, const DenoiserParams& params);

// Tape version of combined_loss for gradient steps; the returned
// breakdown carries the forward values for tracing.
Tape::Var build_combined_loss(Tape& tape, const DenoiserVars& vars,
                              const LossInstance& inst,
                              const NoiseSchedule& sch, double lambda,
                              double gamma, bool use_reweight,
                              LossBreakdown* breakdown = nullptr);

struct TrainResult {
  DenoiserParams params;
  std::vector<TrainStepRecord> trace;
  NoiseSchedule schedule = NoiseSchedule::build(ScheduleConfig{});
  bool aborted_on_nan = false;
};

// Joint optimization of theta and psi by mini-batch SGD; backend
// embeddings stay frozen. Sub-streams derive from `seed` (roles
// ddrm/init, ddrm/sample, ddrm/valid). Early stopping tracks Recall@20
// on the validation split and returns the best parameters seen.
TrainResult train(const InteractionDataset& ds, const EmbeddingTable& table,
                  const TrainConfig& cfg, std::uint64_t seed);

}  // namespace ddrm
